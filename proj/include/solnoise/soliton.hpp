#pragma once

#include "solnoise/cgle.hpp"

namespace solnoise {

// A converged single dissipative soliton. drift_rate is the residual global
// phase rotation per unit z (dissipative solitons carry an internal frequency).
struct StationaryProfile {
  ComplexField field;
  CgleParams params;
  double drift_rate = 0;
  double stationarity = 0;
};

enum class PairClass { InPhase, Orthogonal, OutOfPhase, Other };

const char* pair_class_name(PairClass c);

struct BoundPair {
  ComplexField field;
  double rho = 0;   // half the peak-to-peak separation
  double theta = 0; // phase difference right minus left, in (-pi, pi]
  CgleParams params;
  PairClass cls = PairClass::Other;
  double stationarity = 0;
  double drift_velocity = 0; // co-moving frame velocity (orthogonal pairs)
  bool quasi_bound = false;  // plateaued below quasi_tol without strict convergence
};

struct RelaxOptions {
  double dz = 1e-3;
  double check_dz = 0.25; // z between stationarity checks
  double tol = 1e-6;
  int parity = 0;         // +1 even, -1 odd, 0 none/auto-detect (relax_pair)
  bool comoving = false;  // re-center on the intensity centroid while relaxing
  // Accept a quasi-bound state: if > 0 and strict tol is not reached, stop once
  // the stationarity metric sits below quasi_tol and has stopped improving
  // (plateau over quasi_window in z, checked after quasi_z_min).
  double quasi_tol = 0;
  double quasi_z_min = 50;
  double quasi_window = 5;
};

// Phase-compensated relative profile change per unit z between two snapshots
// taken dz_between apart; phase_out receives the compensating rotation angle.
double stationarity_metric(const CVec& prev, const CVec& cur, double dz_between,
                           double* phase_out = nullptr);

// Intensity centroid sum t |U|^2 / sum |U|^2.
double intensity_centroid(const ComplexField& field);

// Enforce U(-t) = sign * U(t) on the periodic grid.
void symmetrize(CVec& u, int sign);

// Relax a seed to the stationary dissipative soliton attractor.
StationaryProfile find_single_soliton(const CgleParams& params, const ComplexField& seed,
                                      double z_relax, const RelaxOptions& opts = {});

// Two phase-tagged time-shifted copies of a profile:
//   U(t) = U0(t + rho) e^{-i theta/2} + U0(t - rho) e^{+i theta/2}.
ComplexField make_pair(const StationaryProfile& U0, double rho, double theta);

// Relax a two-pulse configuration to a bound pair and measure it.
BoundPair relax_pair(const ComplexField& field, const CgleParams& params,
                     double z_relax, const RelaxOptions& opts = {});

// Invert the pair ansatz: sub-grid peak positions give rho, the interpolated
// phases at the two peaks give theta.
void measure_pair(const ComplexField& field, double* rho, double* theta);

// Index of the intensity minimum between the two peaks (the soliton 1/2 split).
double pair_split_time(const ComplexField& field);

PairClass classify_pair(double theta);

}  // namespace solnoise
