#include "solnoise/linearization.hpp"

#include <cmath>

namespace solnoise {

namespace {

void pointwise_coeffs(const CVec& U0, const CgleParams& p, CVec& a, CVec& b) {
  const Complex c3 = p.cubic(), c5 = p.quintic();
  const int n = int(U0.size());
  a.resize(n);
  b.resize(n);
  for (int j = 0; j < n; ++j) {
    const Complex u = U0[j];
    const double I = std::norm(u);
    a[j] = 2.0 * c3 * I + 3.0 * c5 * I * I;
    b[j] = c3 * u * u + 2.0 * c5 * I * u * u;
  }
}

// Dense DFT-conjugated diagonal: F^{-1} diag(sym) F, built column by column.
CMat dense_spectral(const TimeGrid& g, const CVec& sym) {
  Fft fft(g.n);
  CMat out(g.n, g.n);
  CVec e = CVec::Zero(g.n), col;
  for (int j = 0; j < g.n; ++j) {
    e[j] = 1.0;
    fft.forward(e, col);
    col.array() *= sym.array();
    fft.inverse_inplace(col);
    out.col(j) = col;
    e[j] = 0.0;
  }
  return out;
}

}  // namespace

void LinearGenerator::apply(const CVec& u, const CVec& ubar, CVec& du, CVec& dubar) const {
  Fft fft(grid->n);
  CVec spec;
  fft.forward(u, spec);
  for (int k = 0; k < grid->n; ++k) spec[k] *= params.linear_symbol(grid->omega[k]);
  fft.inverse(spec, du);
  fft.forward(ubar, spec);
  for (int k = 0; k < grid->n; ++k)
    spec[k] *= std::conj(params.linear_symbol(grid->omega[k]));
  fft.inverse(spec, dubar);
  for (int j = 0; j < grid->n; ++j) {
    const Complex up = u[j], dn = ubar[j];
    du[j] += a[j] * up + b[j] * dn;
    dubar[j] += std::conj(a[j]) * dn + std::conj(b[j]) * up;
  }
}

CMat LinearGenerator::dense_A() const {
  CVec sym(grid->n);
  for (int k = 0; k < grid->n; ++k) sym[k] = params.linear_symbol(grid->omega[k]);
  CMat A = dense_spectral(*grid, sym);
  A += CMat(a.asDiagonal());
  return A;
}

CMat LinearGenerator::dense_doubled() const {
  const int n = grid->n;
  const CMat A = dense_A();
  CMat M = CMat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = A;
  M.topRightCorner(n, n) = CMat(b.asDiagonal());
  M.bottomLeftCorner(n, n) = CMat(b.conjugate().asDiagonal());
  M.bottomRightCorner(n, n) = A.conjugate();
  return M;
}

LinearGenerator linearized_generator(const ComplexField& U0, const CgleParams& params) {
  check_finite(U0.samples, 0.0);
  LinearGenerator gen;
  gen.grid = U0.grid;
  gen.params = params;
  gen.background = U0.samples;
  pointwise_coeffs(U0.samples, params, gen.a, gen.b);
  return gen;
}

CMat net_gain_operator(const ComplexField& U0, const CgleParams& params) {
  const auto& g = *U0.grid;
  CVec sym(g.n);
  for (int k = 0; k < g.n; ++k) {
    const double w = g.omega[k];
    sym[k] = 2.0 * (params.delta - params.beta * w * w);
  }
  CMat H = dense_spectral(g, sym);
  for (int j = 0; j < g.n; ++j) {
    const double I = std::norm(U0.samples[j]);
    H(j, j) += 2.0 * (2.0 * params.epsilon * I + 3.0 * params.mu * I * I);
  }
  // symmetrize away roundoff
  H = 0.5 * (H + H.adjoint()).eval();
  return H;
}

NoiseModel noise_rates(const ComplexField& U0, const CgleParams& params) {
  const int n = U0.grid->n;
  const double dt = U0.grid->dt;
  NoiseModel m;
  m.normal = CMat::Zero(n, n);
  m.antinormal = CMat::Zero(n, n);
  if (params.conservative()) {
    m.commutator_injection = CMat::Zero(n, n);
    return m;
  }
  const CMat H = net_gain_operator(U0, params);
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  const RVec& lam = es.eigenvalues();
  const CMat& W = es.eigenvectors();
  for (int k = 0; k < n; ++k) {
    const CMat proj = W.col(k) * W.col(k).adjoint();
    if (lam[k] > 0)
      m.normal += (lam[k] / dt) * proj;
    else
      m.antinormal += (-lam[k] / dt) * proj;
  }
  m.commutator_injection = m.antinormal - m.normal;
  return m;
}

LinearizedStepper::LinearizedStepper(GridPtr grid, const CgleParams& params, double dz)
    : grid_(std::move(grid)), params_(params), dz_(dz), fft_(grid_->n) {
  if (!(dz > 0)) throw ConfigError("LinearizedStepper: dz must be positive");
  const int n = grid_->n;
  half_mult_.resize(n);
  full_mult_.resize(n);
  spectral_defect_.resize(n);
  for (int k = 0; k < n; ++k) {
    half_mult_[k] = std::exp(params_.linear_symbol(grid_->omega[k]) * (0.5 * dz_));
    full_mult_[k] = half_mult_[k] * half_mult_[k];
    spectral_defect_[k] = 1.0 - std::norm(half_mult_[k]);
  }
  // A conservative symbol is exactly unitary; the residual defect is roundoff
  // in |exp(i phi)|^2 and must not be promoted to a noise channel.
  if (params_.conservative()) spectral_defect_.setZero();
}

void LinearizedStepper::half_linear(CVec& u) {
  fft_.forward_inplace(u);
  u.array() *= half_mult_.array();
  fft_.inverse_inplace(u);
}

void LinearizedStepper::full_linear(CVec& u) {
  fft_.forward_inplace(u);
  u.array() *= full_mult_.array();
  fft_.inverse_inplace(u);
}

void LinearizedStepper::nonlinear_with_tangent(CVec& u, CVec& s, CVec& t) const {
  const int n = int(u.size());
  s.resize(n);
  t.resize(n);
  const Complex c3 = params_.cubic(), c5 = params_.quintic();
  const double h = dz_;
  auto ab = [&](Complex y, Complex& a, Complex& b) {
    const double I = std::norm(y);
    a = 2.0 * c3 * I + 3.0 * c5 * I * I;
    b = c3 * y * y + 2.0 * c5 * I * y * y;
  };
  auto f = [&](Complex y) {
    const double I = std::norm(y);
    return (c3 * I + c5 * I * I) * y;
  };
  for (int j = 0; j < n; ++j) {
    const Complex y = u[j];
    // classical RK4 stages
    const Complex k1 = f(y);
    const Complex y2 = y + 0.5 * h * k1;
    const Complex k2 = f(y2);
    const Complex y3 = y + 0.5 * h * k2;
    const Complex k3 = f(y3);
    const Complex y4 = y + h * k3;
    const Complex k4 = f(y4);
    // tangent of the same discrete map: variational RK4 on the shared stages
    Complex a1, b1, a2, b2, a3, b3, a4, b4;
    ab(y, a1, b1);
    ab(y2, a2, b2);
    ab(y3, a3, b3);
    ab(y4, a4, b4);
    // columns of the 2x2 tangent: start from (1,0); second column follows by
    // the conjugation symmetry of the doubled system.
    Complex sj = 1.0, tj = 0.0;
    const Complex l1s = a1 * sj + b1 * std::conj(tj);
    const Complex l1t = a1 * tj + b1 * std::conj(sj);
    const Complex s2 = sj + 0.5 * h * l1s, t2 = tj + 0.5 * h * l1t;
    const Complex l2s = a2 * s2 + b2 * std::conj(t2);
    const Complex l2t = a2 * t2 + b2 * std::conj(s2);
    const Complex s3 = sj + 0.5 * h * l2s, t3 = tj + 0.5 * h * l2t;
    const Complex l3s = a3 * s3 + b3 * std::conj(t3);
    const Complex l3t = a3 * t3 + b3 * std::conj(s3);
    const Complex s4 = sj + h * l3s, t4 = tj + h * l3t;
    const Complex l4s = a4 * s4 + b4 * std::conj(t4);
    const Complex l4t = a4 * t4 + b4 * std::conj(s4);
    s[j] = sj + (h / 6.0) * (l1s + 2.0 * l2s + 2.0 * l3s + l4s);
    t[j] = tj + (h / 6.0) * (l1t + 2.0 * l2t + 2.0 * l3t + l4t);
    u[j] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

}  // namespace solnoise
