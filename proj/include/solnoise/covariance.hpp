#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "solnoise/linearization.hpp"

namespace solnoise {

// Second moments of the perturbation field on the grid:
//   P(j,k) = <u^dag_k u_j>   (normally ordered, Hermitian PSD)
//   Q(j,k) = <u_j u_k>       (symmetric)
//   K(j,k) = <[u_j, u^dag_k]>  (canonical value I/dt; tracked for drift)
struct CovarianceState {
  double z = 0;
  CMat P, Q, K;
};

CovarianceState initial_coherent_covariance(const TimeGrid& grid);

// max |K - I/dt| * dt, a dimensionless commutator drift measure.
double commutator_drift(const CovarianceState& state, double dt);

// Smallest eigenvalue of the doubled ordered covariance [[P+K, Q], [conj(Q), P^T]],
// normalized by the canonical 1/dt scale. Physical states give >= -tol.
double physicality_margin(const CovarianceState& state, double dt);

// One Strang step of the second moments, in exact lockstep with the classical
// integrator. Each substep applies its flow and then the minimum noise that
// restores the canonical commutator exactly: loss channels inject vacuum (K
// only), gain channels additionally feed P at the spontaneous-emission floor.
class CovarianceStepper {
 public:
  CovarianceStepper(GridPtr grid, const CgleParams& params, double dz);

  // Advances state.z by dz and the classical background by the same step.
  void step(CovarianceState& state, CVec& background);

  // Substep interface used by propagate_covariance, which fuses the trailing
  // and leading spectral halves of adjacent steps into one full multiplier
  // (algebraically identical, including the gain injection, but halves the
  // FFT cost). Between to_deviation/to_canonical, state.K holds the deviation
  // D = K - I/dt; the canonical part is restored exactly by construction.
  void to_deviation(CovarianceState& state) const; // K -> D
  void to_canonical(CovarianceState& state) const; // D -> K
  void spectral_substep(CovarianceState& state, bool full);
  void pointwise_substep(CovarianceState& state, CVec& background);
  void advance_background(CVec& background, bool full);

  const LinearizedStepper& lin() const { return lin_; }

 private:
  void spectral_flow(CMat& P, CMat& Q, CMat& K, bool full);
  void apply_spectral_cols(CMat& M, bool full); // M <- S M

  LinearizedStepper lin_;
  CMat P_inj_half_, P_inj_full_; // gain part of the spectral commutator
                                 // restoration (nonzero only with linear gain)
  bool spectral_gain_ = false;
  CMat scratch_, newP_, newQ_, newK_;
  CVec s_, t_, col_;
};

using CovarianceObserver =
    std::function<void(const CovarianceState&, const ComplexField&)>;

// Advance the covariance along a trajectory, invoking the observer at every
// stored snapshot (including the initial one). Throws ConsistencyError if the
// commutator drifts beyond drift_tol.
void propagate_covariance(CovarianceState& state, const Trajectory& traj,
                          const CovarianceObserver& observer = {},
                          double drift_tol = 1e-6);

// Classical stochastic analog of the covariance propagation: samples evolve
// under the same per-step maps with symmetrized ((N+A)/2) noise increments.
// Sample moments are returned converted to the ordered (P, Q) convention.
struct McEstimate {
  CMat P, Q;                 // pooled over all samples
  std::vector<CMat> batch_P; // per-batch, for error bars
  std::vector<CMat> batch_Q;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

McEstimate monte_carlo_oracle(const Trajectory& traj, int n_samples,
                              std::uint64_t seed, int n_batches = 20);

// Adjoint accumulation of the unordered variance of the measurement functional
//   F = dt * sum_j (conj(f_j) u_j + f_j u^dag_j)
// defined at the trajectory end: the input coherent-state term plus every noise
// injection, paired with the functional propagated backward by the transposed
// step maps. Equals the forward-covariance unordered variance of f.
struct BackpropResult {
  double input_contribution = 0;
  double noise_contribution = 0;
  double total = 0;
};

BackpropResult backpropagate_projection(const CVec& f, const Trajectory& traj);

}  // namespace solnoise
