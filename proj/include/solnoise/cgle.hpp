#pragma once

#include <vector>

#include "solnoise/grid.hpp"

namespace solnoise {

// Coefficients of the normalized cubic-quintic Ginzburg-Landau equation,
//   i U_z + (D/2) U_tt + |U|^2 U =
//       i delta U + i epsilon |U|^2 U + i beta U_tt + i mu |U|^4 U - nu |U|^4 U,
// so the propagation form reads
//   U_z = (i D/2 + beta) U_tt + delta U + (i + epsilon) |U|^2 U + (mu + i nu) |U|^4 U.
struct CgleParams {
  double D = 1.0;       // +1 anomalous / -1 normal dispersion
  double delta = 0.0;   // linear gain/loss
  double epsilon = 0.0; // cubic gain
  double beta = 0.0;    // spectral filtering
  double mu = 0.0;      // quintic gain/loss
  double nu = 0.0;      // quintic conservative correction

  bool conservative() const {
    return delta == 0.0 && epsilon == 0.0 && beta == 0.0 && mu == 0.0;
  }
  // Coefficient of |U|^2 U in the propagation form.
  Complex cubic() const { return {epsilon, 1.0}; }
  // Coefficient of |U|^4 U.
  Complex quintic() const { return {mu, nu}; }
  // Frequency-diagonal generator of the linear part: -i(D/2)w^2 + delta - beta w^2.
  Complex linear_symbol(double w) const {
    return {delta - beta * w * w, -0.5 * D * w * w};
  }
};

// Pointwise nonlinear right-hand side c3 |U|^2 U + c5 |U|^4 U.
inline Complex nonlinear_rhs(Complex u, const CgleParams& p) {
  const double a2 = std::norm(u);
  return (p.cubic() * a2 + p.quintic() * (a2 * a2)) * u;
}

// Full right-hand side of the propagation form (spectral derivative).
CVec cgle_rhs(const ComplexField& field, const CgleParams& p);

// Strang split-step integrator: half linear substep in the frequency domain,
// full RK4 substep on the pointwise nonlinear ODE, half linear substep.
class CgleStepper {
 public:
  CgleStepper(GridPtr grid, const CgleParams& params, double dz);

  void step(CVec& u);
  // Half linear substep alone (used to fuse adjacent halves).
  void half_linear(CVec& u);
  // Full nonlinear substep alone.
  void nonlinear(CVec& u) const;

  const CVec& half_multiplier() const { return half_mult_; }
  double dz() const { return dz_; }
  const CgleParams& params() const { return params_; }
  const GridPtr& grid() const { return grid_; }

 private:
  GridPtr grid_;
  CgleParams params_;
  double dz_;
  CVec half_mult_; // exp(linear_symbol(w) * dz/2) per mode
  Fft fft_;
};

// Classical trajectory: snapshots every `stride` steps, endpoints included.
// A frozen trajectory prescribes the background analytically as
// base * exp(i phase_rate z) instead of integrating it (the bound-pair ansatz
// built from the stationary soliton solution).
struct Trajectory {
  GridPtr grid;
  CgleParams params;
  double z0 = 0;
  double dz = 0;
  int stride = 1;
  int n_steps = 0;
  std::vector<CVec> snapshots; // size n_steps/stride + 1
  double final_energy = 0;
  double stationarity = 0; // relative |U| profile change over the last 10%
  bool frozen = false;
  double phase_rate = 0;
  CVec base;

  double z_at(int snap_index) const { return z0 + dz * stride * snap_index; }
  ComplexField field_at(int snap_index) const {
    return ComplexField(grid, snapshots.at(snap_index));
  }
  // Background at the start of step i (0-based); identical to integrating for
  // non-frozen trajectories only at stride points.
  CVec background_at_step(int i) const {
    if (!frozen) throw ConfigError("background_at_step: trajectory is not frozen");
    return base * std::exp(Complex(0, phase_rate * (z0 + dz * i)));
  }
};

Trajectory propagate(const ComplexField& field, const CgleParams& params,
                     double z_total, double dz, int stride = 1);

Trajectory frozen_trajectory(const ComplexField& base, double phase_rate,
                             const CgleParams& params, double z_total, double dz,
                             int stride = 1);

// One split step as a free function (convenience for tests).
ComplexField cgle_step(const ComplexField& field, const CgleParams& params, double dz);

void check_finite(const CVec& u, double z);

}  // namespace solnoise
