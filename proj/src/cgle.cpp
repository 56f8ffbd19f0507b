#include "solnoise/cgle.hpp"

#include <cmath>

namespace solnoise {

CVec cgle_rhs(const ComplexField& field, const CgleParams& p) {
  const auto& g = *field.grid;
  Fft fft(g.n);
  CVec spec;
  fft.forward(field.samples, spec);
  for (int k = 0; k < g.n; ++k) spec[k] *= p.linear_symbol(g.omega[k]);
  CVec rhs;
  fft.inverse(spec, rhs);
  for (int j = 0; j < g.n; ++j) rhs[j] += nonlinear_rhs(field.samples[j], p);
  return rhs;
}

CgleStepper::CgleStepper(GridPtr grid, const CgleParams& params, double dz)
    : grid_(std::move(grid)), params_(params), dz_(dz), fft_(grid_->n) {
  if (!(dz > 0)) throw ConfigError("CgleStepper: dz must be positive");
  half_mult_.resize(grid_->n);
  for (int k = 0; k < grid_->n; ++k)
    half_mult_[k] = std::exp(params_.linear_symbol(grid_->omega[k]) * (0.5 * dz_));
}

void CgleStepper::half_linear(CVec& u) {
  fft_.forward_inplace(u);
  u.array() *= half_mult_.array();
  fft_.inverse_inplace(u);
}

void CgleStepper::nonlinear(CVec& u) const {
  // RK4 on the decoupled pointwise ODE u' = c3 |u|^2 u + c5 |u|^4 u.
  const double h = dz_;
  for (int j = 0; j < u.size(); ++j) {
    const Complex y = u[j];
    const Complex k1 = nonlinear_rhs(y, params_);
    const Complex k2 = nonlinear_rhs(y + 0.5 * h * k1, params_);
    const Complex k3 = nonlinear_rhs(y + 0.5 * h * k2, params_);
    const Complex k4 = nonlinear_rhs(y + h * k3, params_);
    u[j] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

void CgleStepper::step(CVec& u) {
  half_linear(u);
  nonlinear(u);
  half_linear(u);
}

void check_finite(const CVec& u, double z) {
  for (int j = 0; j < u.size(); ++j) {
    const double a = std::norm(u[j]);
    if (!std::isfinite(a) || a > 1e16)
      throw DivergenceError("field diverged at z = " + std::to_string(z), z);
  }
}

ComplexField cgle_step(const ComplexField& field, const CgleParams& params, double dz) {
  CgleStepper st(field.grid, params, dz);
  CVec u = field.samples;
  st.step(u);
  check_finite(u, dz);
  return ComplexField(field.grid, std::move(u));
}

Trajectory propagate(const ComplexField& field, const CgleParams& params,
                     double z_total, double dz, int stride) {
  if (z_total < 0) throw ConfigError("propagate: z_total must be non-negative");
  if (!(dz > 0)) throw ConfigError("propagate: dz must be positive");
  if (stride < 1) throw ConfigError("propagate: stride must be >= 1");

  const int n_steps = int(std::lround(z_total / dz));
  if (std::abs(n_steps * dz - z_total) > 1e-9 * std::max(1.0, z_total))
    throw ConfigError("propagate: dz does not divide z_total");
  if (n_steps % stride != 0)
    throw ConfigError("propagate: stride must divide the step count");

  Trajectory traj;
  traj.grid = field.grid;
  traj.params = params;
  traj.dz = dz;
  traj.stride = stride;
  traj.n_steps = n_steps;
  traj.snapshots.reserve(n_steps / stride + 1);

  CgleStepper st(field.grid, params, dz);
  CVec u = field.samples;
  traj.snapshots.push_back(u);

  // |U| profile at 90% of the run, for the stationarity report.
  const int i_mark = int(std::lround(0.9 * n_steps));
  RVec mark_profile;

  for (int i = 1; i <= n_steps; ++i) {
    st.step(u);
    if (i % 16 == 0 || i == n_steps) check_finite(u, i * dz);
    if (i == i_mark) mark_profile = u.cwiseAbs();
    if (i % stride == 0) traj.snapshots.push_back(u);
  }
  traj.final_energy = energy(u, field.grid->dt);
  if (mark_profile.size() > 0 && i_mark < n_steps) {
    const RVec fin = u.cwiseAbs();
    const double denom = fin.norm();
    traj.stationarity = denom > 0 ? (fin - mark_profile).norm() / denom : 0.0;
  }
  return traj;
}

Trajectory frozen_trajectory(const ComplexField& base, double phase_rate,
                             const CgleParams& params, double z_total, double dz,
                             int stride) {
  if (z_total < 0) throw ConfigError("frozen_trajectory: z_total must be non-negative");
  if (!(dz > 0)) throw ConfigError("frozen_trajectory: dz must be positive");
  if (stride < 1) throw ConfigError("frozen_trajectory: stride must be >= 1");
  const int n_steps = int(std::lround(z_total / dz));
  if (std::abs(n_steps * dz - z_total) > 1e-9 * std::max(1.0, z_total))
    throw ConfigError("frozen_trajectory: dz does not divide z_total");
  if (n_steps % stride != 0)
    throw ConfigError("frozen_trajectory: stride must divide the step count");

  Trajectory traj;
  traj.grid = base.grid;
  traj.params = params;
  traj.dz = dz;
  traj.stride = stride;
  traj.n_steps = n_steps;
  traj.frozen = true;
  traj.phase_rate = phase_rate;
  traj.base = base.samples;
  traj.snapshots.reserve(n_steps / stride + 1);
  for (int k = 0; k <= n_steps / stride; ++k)
    traj.snapshots.push_back(base.samples *
                             std::exp(Complex(0, phase_rate * dz * stride * k)));
  traj.final_energy = energy(base);
  return traj;
}

}  // namespace solnoise
