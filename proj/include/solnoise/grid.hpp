#pragma once

#include <iosfwd>
#include <memory>

#include <unsupported/Eigen/FFT>

#include "solnoise/types.hpp"

namespace solnoise {

// Uniform periodic time grid with its conjugate frequency grid in DFT order.
struct TimeGrid {
  int n = 0;         // number of samples
  double window = 0; // total span T
  double dt = 0;     // T / n
  RVec t;            // sample times, -T/2 .. T/2 - dt
  RVec omega;        // angular frequencies, DFT order, spacing 2*pi/T
};

using GridPtr = std::shared_ptr<const TimeGrid>;

GridPtr make_grid(int n_points, double window);

// Complex envelope sampled on a shared grid.
struct ComplexField {
  GridPtr grid;
  CVec samples;

  ComplexField() = default;
  ComplexField(GridPtr g, CVec s);
};

bool same_grid(const TimeGrid& a, const TimeGrid& b);
void require_same_grid(const ComplexField& a, const ComplexField& b);

// Cached-plan DFT for one grid size. forward() is the plain unnormalized DFT,
// inverse() carries the 1/n factor, so inverse(forward(x)) == x.
class Fft {
 public:
  explicit Fft(int n);
  void forward(const CVec& in, CVec& out);
  void inverse(const CVec& in, CVec& out);
  void forward_inplace(CVec& x);
  void inverse_inplace(CVec& x);

 private:
  int n_;
  Eigen::FFT<double> impl_;
  CVec scratch_;
};

// Unitary transforms: both directions scale by 1/sqrt(n), so energy() is the
// same formula on either side and from_spectrum(to_spectrum(f)) == f.
ComplexField to_spectrum(const ComplexField& field);
ComplexField from_spectrum(const ComplexField& spec);

// Discrete L2 norm squared: sum |samples|^2 * dt.
double energy(const ComplexField& field);
double energy(const CVec& samples, double dt);

// Momentum functional sum Im(conj(U) dU/dt) dt, spectral derivative.
double momentum(const ComplexField& field);

// Circular time shift by tau (exact on the periodic grid): result(t) = f(t - tau).
ComplexField shift_field(const ComplexField& field, double tau);
void shift_samples(Fft& fft, const RVec& omega, double tau, CVec& samples);

// Columnar text snapshot: "# t re im" header, one row per sample.
void save_field(std::ostream& os, const ComplexField& field);
ComplexField load_field(std::istream& is);

}  // namespace solnoise
