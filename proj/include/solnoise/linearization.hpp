#pragma once

#include "solnoise/cgle.hpp"

namespace solnoise {

// Linearization of the propagation form about a background U0: the doubled
// perturbation vector v = (u, u*) evolves as dv/dz = M v with
//   du/dz = L u + a u + b u*,   L = (iD/2 + beta) d_tt + delta (spectral),
//   a = 2 c3 |U0|^2 + 3 c5 |U0|^4,   b = c3 U0^2 + 2 c5 |U0|^2 U0^2,
// and the lower row the elementwise conjugate of the upper.
struct LinearGenerator {
  GridPtr grid;
  CgleParams params;
  CVec background;
  CVec a, b; // pointwise coefficients at the background

  // Apply M: (u, ubar) -> (du, dubar). ubar must be conj(u) for a physical
  // perturbation but the map is defined for any doubled vector.
  void apply(const CVec& u, const CVec& ubar, CVec& du, CVec& dubar) const;

  // Dense N x N upper-left block A (spectral + pointwise diagonal) and the
  // full doubled 2N x 2N matrix. Small grids only.
  CMat dense_A() const;
  CMat dense_doubled() const;
};

LinearGenerator linearized_generator(const ComplexField& U0, const CgleParams& params);

// Hermitian net-gain operator H = A + A^dag: 2(delta - beta w^2) spectrally
// plus 2(2 epsilon |U0|^2 + 3 mu |U0|^4) pointwise. Its sign structure decides
// where noise must be injected.
CMat net_gain_operator(const ComplexField& U0, const CgleParams& params);

// Minimum commutator-preserving noise rates on the discrete grid (entries per
// unit z; the 1/dt reflects the delta-normalized field commutator).
// Gain eigenchannels of H feed the normally-ordered rate (spontaneous
// emission), loss channels the anti-normally-ordered rate (vacuum).
struct NoiseModel {
  CMat normal;
  CMat antinormal;
  CMat commutator_injection; // antinormal - normal = -H/dt
};

NoiseModel noise_rates(const ComplexField& U0, const CgleParams& params);

// Tangent machinery for one Strang step of the linearized flow, kept in exact
// lockstep with CgleStepper: the pointwise substep advances the background by
// the same RK4 and returns the per-sample 2x2 tangent map
//   (du, du*) -> (s du + t du*, conj).
class LinearizedStepper {
 public:
  LinearizedStepper(GridPtr grid, const CgleParams& params, double dz);

  // Advance background one nonlinear substep; fill s, t (size n).
  void nonlinear_with_tangent(CVec& background, CVec& s, CVec& t) const;
  // Half linear substep on the background.
  void half_linear(CVec& background);
  // Full linear substep (two fused halves, used between interior steps).
  void full_linear(CVec& background);

  const CVec& half_mult() const { return half_mult_; }
  const CVec& full_mult() const { return full_mult_; }
  // Commutator defect rate of the half linear substep per mode:
  // r(w) = 1 - |half_mult|^2  (> 0 where the substep loses, < 0 where it gains).
  const RVec& spectral_defect() const { return spectral_defect_; }
  const GridPtr& grid() const { return grid_; }
  const CgleParams& params() const { return params_; }
  double dz() const { return dz_; }
  Fft& fft() { return fft_; }

 private:
  GridPtr grid_;
  CgleParams params_;
  double dz_;
  CVec half_mult_, full_mult_;
  RVec spectral_defect_;
  mutable Fft fft_;
};

}  // namespace solnoise
