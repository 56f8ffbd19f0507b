#include <doctest.h>

#include <cmath>

#include "solnoise/experiment.hpp"
#include "solnoise/linearization.hpp"

using namespace solnoise;

namespace {

const CgleParams kFig1{1.0, -0.01, 1.8, 0.5, -0.05, 0.0};
const CgleParams kConservative{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};

CVec random_vec(int n, unsigned seed) {
  std::srand(seed);
  CVec v(n);
  for (int j = 0; j < n; ++j)
    v[j] = Complex(2.0 * std::rand() / RAND_MAX - 1.0,
                   2.0 * std::rand() / RAND_MAX - 1.0);
  return v;
}

}  // namespace

TEST_CASE("zero background reduces to the spectral symbol") {
  auto g = make_grid(32, 10.0);
  auto gen = linearized_generator(ComplexField(g, CVec::Zero(32)), kFig1);
  CHECK(gen.a.cwiseAbs().maxCoeff() == 0.0);
  CHECK(gen.b.cwiseAbs().maxCoeff() == 0.0);
  // dense A diagonalizes in the Fourier basis with eigenvalues linear_symbol(w)
  CMat A = gen.dense_A();
  Fft fft(32);
  CVec e = CVec::Zero(32), col(32), spec(32);
  for (int k : {0, 1, 7, 16}) {
    // plane wave at mode k is an eigenvector
    for (int j = 0; j < 32; ++j)
      e[j] = std::exp(Complex(0, g->omega[k] * g->t[j]));
    col = A * e;
    const Complex lambda = kFig1.linear_symbol(g->omega[k]);
    CHECK((col - lambda * e).norm() < 1e-10 * std::max(1.0, std::abs(lambda)));
  }
}

TEST_CASE("conservative generator is symplectic: ||MJ + JM^dag|| tiny") {
  auto g = make_grid(32, 12.0);
  auto U0 = sech_seed(g, 1.3);
  auto gen = linearized_generator(U0, kConservative);
  const int n = 32;
  CMat M = gen.dense_doubled();
  CMat J = CMat::Zero(2 * n, 2 * n);
  J.topLeftCorner(n, n) = CMat::Identity(n, n);
  J.bottomRightCorner(n, n) = -CMat::Identity(n, n);
  CHECK((M * J + J * M.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  // and with dissipation it is not
  CMat Md = linearized_generator(U0, kFig1).dense_doubled();
  CHECK((Md * J + J * Md.adjoint()).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("generator matches finite differences of the full rhs") {
  auto g = make_grid(64, 16.0);
  auto U0 = sech_seed(g, 1.4);
  auto gen = linearized_generator(U0, kFig1);
  const CVec du = random_vec(64, 11) * 1.0;
  auto fd_error = [&](double eps) {
    ComplexField up(g, U0.samples + eps * du);
    ComplexField dn(g, U0.samples - eps * du);
    const CVec fd = (cgle_rhs(up, kFig1) - cgle_rhs(dn, kFig1)) / (2 * eps);
    CVec lin, linbar;
    gen.apply(du, du.conjugate(), lin, linbar);
    CHECK((linbar - lin.conjugate()).norm() < 1e-12 * lin.norm());
    return (fd - lin).norm() / fd.norm();
  };
  const double e6 = fd_error(1e-6);
  CHECK(e6 < 1e-6);
  // central differences: error drops ~4x when eps halves
  const double e_big = fd_error(1e-3);
  const double e_small = fd_error(5e-4);
  CHECK(e_big / e_small > 3.0);
  CHECK(e_big / e_small < 5.0);
}

TEST_CASE("noise rates: conservative limit injects nothing") {
  auto g = make_grid(32, 12.0);
  auto rates = noise_rates(sech_seed(g, 1.2), kConservative);
  CHECK(rates.normal.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rates.antinormal.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rates.commutator_injection.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise rates: homogeneous loss is pure vacuum at rate 2|delta|/dt") {
  auto g = make_grid(32, 12.0);
  CgleParams p = kConservative;
  p.delta = -0.05;
  auto rates = noise_rates(ComplexField(g, CVec::Zero(32)), p);
  CHECK(rates.normal.cwiseAbs().maxCoeff() < 1e-14);
  const CMat expect = CMat::Identity(32, 32) * (2 * 0.05 / g->dt);
  CHECK((rates.antinormal - expect).cwiseAbs().maxCoeff() < 1e-10 / g->dt);
}

TEST_CASE("noise rates: structure at dissipative parameters") {
  auto g = make_grid(32, 12.0);
  auto U0 = sech_seed(g, 1.5);
  auto rates = noise_rates(U0, kFig1);
  // both rates are Hermitian PSD
  for (const CMat* R : {&rates.normal, &rates.antinormal}) {
    CHECK((*R - R->adjoint()).cwiseAbs().maxCoeff() < 1e-10 * R->cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<CMat> es(*R, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
  }
  // antinormal - normal = -H/dt
  const CMat H = net_gain_operator(U0, kFig1);
  const CMat diff = rates.antinormal - rates.normal + H / g->dt;
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-9 * H.cwiseAbs().maxCoeff() / g->dt);
  CHECK((rates.commutator_injection + H / g->dt).cwiseAbs().maxCoeff() <
        1e-9 * H.cwiseAbs().maxCoeff() / g->dt);
  // cubic gain raises the diagonal at the peak relative to the tails by the
  // pointwise amount 2(2 eps |U|^2 + 3 mu |U|^4); the shared spectral-filter
  // contribution to the diagonal cancels in the difference
  Eigen::Index peak;
  U0.samples.cwiseAbs().maxCoeff(&peak);
  const double I = std::norm(U0.samples[peak]);
  const double expect = 2 * (2 * kFig1.epsilon * I + 3 * kFig1.mu * I * I);
  // 1e-4 slack: the edge sample is not exactly zero-intensity
  CHECK((H(peak, peak) - H(0, 0)).real() ==
        doctest::Approx(expect).epsilon(1e-4));
  CHECK(H(0, 0).real() < 0); // filtering + linear loss: net loss in the tails
}

TEST_CASE("tangent map matches finite differences of one nonlinear substep") {
  auto g = make_grid(32, 12.0);
  LinearizedStepper lin(g, kFig1, 1e-3);
  CgleStepper cls(g, kFig1, 1e-3);
  CVec bg = sech_seed(g, 1.5).samples;
  CVec s, t, bg2 = bg;
  lin.nonlinear_with_tangent(bg2, s, t);
  // background advances exactly as the classical stepper
  CVec ref = bg;
  cls.nonlinear(ref);
  CHECK((bg2 - ref).norm() < 1e-14 * ref.norm());
  // directional derivative of the substep
  const double eps = 1e-7;
  const CVec du = random_vec(32, 3);
  CVec up = bg + eps * du, dn = bg - eps * du;
  cls.nonlinear(up);
  cls.nonlinear(dn);
  const CVec fd = (up - dn) / (2 * eps);
  CVec tangent(32);
  for (int j = 0; j < 32; ++j)
    tangent[j] = s[j] * du[j] + t[j] * std::conj(du[j]);
  CHECK((fd - tangent).norm() / fd.norm() < 1e-6);
}

TEST_CASE("spectral defect is 1 - |half multiplier|^2, zero when conservative") {
  auto g = make_grid(64, 16.0);
  LinearizedStepper lin(g, kFig1, 1e-3);
  for (int k = 0; k < 64; ++k)
    CHECK(lin.spectral_defect()[k] ==
          doctest::Approx(1.0 - std::norm(lin.half_mult()[k])).epsilon(1e-14));
  LinearizedStepper cons(g, kConservative, 1e-3);
  CHECK(cons.spectral_defect().cwiseAbs().maxCoeff() == 0.0);
  for (int k = 0; k < 64; ++k)
    CHECK(std::abs(std::abs(cons.half_mult()[k]) - 1.0) < 1e-14);
}
