#include <doctest.h>

#include <cmath>

#include "solnoise/cgle.hpp"

using namespace solnoise;

namespace {

ComplexField sech_field(GridPtr grid, double amplitude, double t0 = 0.0) {
  CVec u(grid->n);
  for (int j = 0; j < grid->n; ++j)
    u[j] = amplitude / std::cosh(grid->t[j] - t0);
  return ComplexField(std::move(grid), std::move(u));
}

const CgleParams kConservative{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
const CgleParams kFig1{1.0, -0.01, 1.8, 0.5, -0.05, 0.0};

}  // namespace

TEST_CASE("zero field stays zero") {
  auto g = make_grid(64, 20.0);
  auto traj = propagate(ComplexField(g, CVec::Zero(64)), kFig1, 1.0, 1e-2, 10);
  CHECK(traj.final_energy == 0.0);
  CHECK(traj.snapshots.back().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flat-field linear gain factor is exact") {
  // With D-dispersion and filtering acting only at w != 0, a constant field
  // evolves by e^{delta dz} through the linear substeps, while the nonlinear
  // substep adds only a phase (|u| constant under conservative cubic term).
  auto g = make_grid(64, 20.0);
  CgleParams p = kConservative;
  p.delta = -0.05;
  CVec u0 = CVec::Constant(64, Complex(1e-6, 0)); // negligible nonlinearity
  auto stepped = cgle_step(ComplexField(g, u0), p, 0.01);
  const double expect = 1e-6 * std::exp(-0.05 * 0.01);
  for (int j = 0; j < 64; ++j)
    CHECK(std::abs(stepped.samples[j]) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("conservative propagation conserves energy and momentum") {
  auto g = make_grid(256, 30.0);
  auto f = sech_field(g, 1.0);
  // give it momentum so the momentum check is nontrivial
  for (int j = 0; j < g->n; ++j)
    f.samples[j] *= std::exp(Complex(0, 0.5 * g->t[j]));
  const double e0 = energy(f), p0 = momentum(f);
  auto traj = propagate(f, kConservative, 1.0, 1e-3, 100);
  const ComplexField fin = traj.field_at(int(traj.snapshots.size()) - 1);
  CHECK(std::abs(energy(fin) - e0) / e0 < 1e-10);
  CHECK(std::abs(momentum(fin) - p0) / std::abs(p0) < 1e-9);
}

TEST_CASE("pure linear loss decays energy as exp(2 delta z)") {
  auto g = make_grid(128, 30.0);
  CgleParams p; // all zero except delta
  p.D = 1.0;
  p.delta = -0.01;
  CVec u0 = CVec::Constant(128, Complex(0.0, 1e-8)); // flat: no dispersion mixing
  const double e0 = energy(u0, g->dt);
  auto traj = propagate(ComplexField(g, u0), p, 10.0, 1e-2, 100);
  CHECK(traj.final_energy ==
        doctest::Approx(e0 * std::exp(2 * p.delta * 10.0)).epsilon(1e-8));
}

TEST_CASE("split step converges at second order") {
  auto g = make_grid(128, 25.0);
  auto f = sech_field(g, 1.2);
  auto run = [&](double dz) {
    auto traj = propagate(f, kFig1, 0.128, dz, int(std::lround(0.128 / dz)));
    return traj.snapshots.back();
  };
  const CVec fine = run(0.0005);
  const double e1 = (run(0.004) - fine).norm();
  const double e2 = (run(0.002) - fine).norm();
  // global error halves as dz^2: ratio ~4 (allow slack for the reference error)
  CHECK(e1 / e2 > 3.2);
  CHECK(e1 / e2 < 4.8);
}

TEST_CASE("propagation commutes with translation") {
  auto g = make_grid(256, 40.0);
  auto f = sech_field(g, 1.3);
  // integer-cell shift: commutes exactly with the pointwise nonlinearity
  const double tau = 24 * g->dt;
  auto a = propagate(shift_field(f, tau), kFig1, 0.2, 1e-3, 200).snapshots.back();
  auto b = propagate(f, kFig1, 0.2, 1e-3, 200).snapshots.back();
  CVec shifted_b = shift_field(ComplexField(g, b), tau).samples;
  CHECK((a - shifted_b).norm() / a.norm() < 1e-10);
}

TEST_CASE("global phase covariance") {
  auto g = make_grid(128, 25.0);
  auto f = sech_field(g, 1.1);
  const Complex phase = std::exp(Complex(0, 0.83));
  auto a = propagate(ComplexField(g, phase * f.samples), kFig1, 0.1, 1e-3, 100)
               .snapshots.back();
  auto b = propagate(f, kFig1, 0.1, 1e-3, 100).snapshots.back();
  CHECK((a - phase * b).norm() / a.norm() < 1e-12);
}

TEST_CASE("blow-up raises DivergenceError with position") {
  auto g = make_grid(64, 20.0);
  CgleParams p = kFig1;
  p.delta = 2.0;
  p.mu = 0.05; // quintic gain: guaranteed blow-up
  auto f = sech_field(g, 2.0);
  CHECK_THROWS_AS(propagate(f, p, 50.0, 1e-2, 100), DivergenceError);
  try {
    propagate(f, p, 50.0, 1e-2, 100);
  } catch (const DivergenceError& e) {
    CHECK(e.z > 0);
    CHECK(e.z <= 50.0);
  }
}

TEST_CASE("trajectory contract: stride, snapshots, z_total = 0") {
  auto g = make_grid(64, 20.0);
  auto f = sech_field(g, 1.0);
  auto traj = propagate(f, kFig1, 0.1, 1e-3, 25);
  CHECK(traj.n_steps == 100);
  CHECK(int(traj.snapshots.size()) == 5);
  CHECK(traj.z_at(4) == doctest::Approx(0.1));
  // endpoints included
  CHECK((traj.snapshots.front() - f.samples).norm() == 0.0);

  auto zero = propagate(f, kFig1, 0.0, 1e-3, 1);
  CHECK(zero.n_steps == 0);
  CHECK(int(zero.snapshots.size()) == 1);

  CHECK_THROWS_AS(propagate(f, kFig1, 0.1, 1e-3, 33), ConfigError);   // stride
  CHECK_THROWS_AS(propagate(f, kFig1, 0.1, 3e-4, 1), ConfigError);    // dz | z
  CHECK_THROWS_AS(propagate(f, kFig1, -0.1, 1e-3, 1), ConfigError);
}

TEST_CASE("frozen trajectory prescribes base times a phase") {
  auto g = make_grid(64, 20.0);
  auto f = sech_field(g, 1.0);
  const double rate = -2.5;
  auto traj = frozen_trajectory(f, rate, kFig1, 0.1, 1e-3, 20);
  CHECK(traj.frozen);
  CHECK(int(traj.snapshots.size()) == 6);
  for (int k = 0; k < 6; ++k) {
    const Complex ph = std::exp(Complex(0, rate * 0.02 * k));
    CHECK((traj.snapshots[k] - ph * f.samples).norm() < 1e-14);
  }
  CHECK((traj.background_at_step(40) -
         std::exp(Complex(0, rate * 0.04)) * f.samples)
            .norm() < 1e-14);
  auto plain = propagate(f, kFig1, 0.1, 1e-3, 20);
  CHECK_THROWS_AS(plain.background_at_step(0), ConfigError);
}
