#include "solnoise/soliton.hpp"

#include <cmath>
#include <vector>

namespace solnoise {

const char* pair_class_name(PairClass c) {
  switch (c) {
    case PairClass::InPhase: return "in_phase";
    case PairClass::Orthogonal: return "orthogonal";
    case PairClass::OutOfPhase: return "out_of_phase";
    default: return "other";
  }
}

double stationarity_metric(const CVec& prev, const CVec& cur, double dz_between,
                           double* phase_out) {
  const Complex overlap = prev.dot(cur); // conj(prev) . cur
  const double phi = std::arg(overlap);
  if (phase_out) *phase_out = phi;
  const CVec diff = cur - std::exp(Complex(0, phi)) * prev;
  const double ref = prev.norm();
  return ref > 0 ? diff.norm() / (ref * dz_between) : 0.0;
}

double intensity_centroid(const ComplexField& field) {
  double w = 0, acc = 0;
  for (int j = 0; j < field.grid->n; ++j) {
    const double I = std::norm(field.samples[j]);
    w += I;
    acc += field.grid->t[j] * I;
  }
  return w > 0 ? acc / w : 0.0;
}

void symmetrize(CVec& u, int sign) {
  const int n = int(u.size());
  for (int j = 1; j <= (n - 1) / 2; ++j) {
    const int k = n - j;
    const Complex a = u[j], b = u[k];
    u[j] = 0.5 * (a + double(sign) * b);
    u[k] = 0.5 * (b + double(sign) * a);
  }
  if (sign < 0) {
    // t = -T/2 and t = 0 are their own mirror images
    u[0] = 0;
    if (n % 2 == 0) u[n / 2] = 0;
  }
}

namespace {

struct Peak {
  int index;
  double t;
  double intensity;
  Complex amplitude; // interpolated at the refined position
};

std::vector<Peak> find_peaks(const ComplexField& field, double rel_threshold) {
  const auto& g = *field.grid;
  const int n = g.n;
  RVec I(n);
  for (int j = 0; j < n; ++j) I[j] = std::norm(field.samples[j]);
  const double mx = I.maxCoeff();
  std::vector<Peak> peaks;
  if (mx <= 0) return peaks;
  for (int j = 0; j < n; ++j) {
    const int jm = (j + n - 1) % n, jp = (j + 1) % n;
    if (I[j] > I[jm] && I[j] >= I[jp] && I[j] > rel_threshold * mx) {
      const double den = I[jm] - 2 * I[j] + I[jp];
      const double d = den < 0 ? 0.5 * (I[jm] - I[jp]) / den : 0.0;
      const Complex u0 = field.samples[j];
      const Complex du = 0.5 * (field.samples[jp] - field.samples[jm]);
      const Complex d2u = field.samples[jp] - 2.0 * u0 + field.samples[jm];
      Peak p;
      p.index = j;
      p.t = g.t[j] + d * g.dt;
      p.intensity = I[j];
      p.amplitude = u0 + d * du + 0.5 * d * d * d2u;
      peaks.push_back(p);
    }
  }
  return peaks;
}

double wrap_phase(double x) {
  while (x > kPi) x -= 2 * kPi;
  while (x <= -kPi) x += 2 * kPi;
  return x;
}

struct RelaxOutcome {
  CVec u;
  double stationarity = 0;
  double phase_rate = 0;
  double velocity = 0;
  bool converged = false;
  bool quasi = false;
};

RelaxOutcome relax_to_stationary(const ComplexField& start, const CgleParams& params,
                                 double z_relax, const RelaxOptions& opts,
                                 bool two_pulse_guard) {
  const GridPtr grid = start.grid;
  CgleStepper st(grid, params, opts.dz);
  Fft fft(grid->n);
  const int steps_per_chunk = std::max(1, int(std::lround(opts.check_dz / opts.dz)));
  const double chunk_dz = steps_per_chunk * opts.dz;
  const int n_chunks = std::max(1, int(std::ceil(z_relax / chunk_dz)));

  RelaxOutcome out;
  out.u = start.samples;
  if (opts.parity != 0) symmetrize(out.u, opts.parity);
  const double c0 = intensity_centroid(ComplexField(grid, out.u));
  double total_shift = 0, z_done = 0;
  const int window_chunks = std::max(1, int(std::lround(opts.quasi_window / chunk_dz)));
  std::vector<double> metric_history;

  for (int c = 0; c < n_chunks; ++c) {
    const CVec prev = out.u;
    for (int s = 0; s < steps_per_chunk; ++s) st.step(out.u);
    z_done += chunk_dz;
    check_finite(out.u, z_done);
    if (opts.parity != 0) symmetrize(out.u, opts.parity);
    if (opts.comoving) {
      const double c_now = intensity_centroid(ComplexField(grid, out.u));
      const double shift = c_now - c0;
      if (std::abs(shift) > 1e-12) {
        shift_samples(fft, grid->omega, -shift, out.u);
        total_shift += shift;
      }
    }
    if (two_pulse_guard) {
      const auto peaks = find_peaks(ComplexField(grid, out.u), 0.05);
      if (peaks.size() < 2)
        throw PairCollapseError("pulses merged during relaxation at z = " +
                                std::to_string(z_done));
      if (peaks.size() == 2 &&
          std::abs(peaks[1].t - peaks[0].t) > 0.5 * grid->window)
        throw PairCollapseError("pulses escaped during relaxation at z = " +
                                std::to_string(z_done));
    }
    double phi = 0;
    out.stationarity = stationarity_metric(prev, out.u, chunk_dz, &phi);
    out.phase_rate = phi / chunk_dz;
    out.velocity = z_done > 0 ? total_shift / z_done : 0;
    if (out.stationarity < opts.tol) {
      out.converged = true;
      return out;
    }
    metric_history.push_back(out.stationarity);
    if (opts.quasi_tol > 0 && z_done >= opts.quasi_z_min &&
        out.stationarity < opts.quasi_tol &&
        int(metric_history.size()) > window_chunks) {
      const double past = metric_history[metric_history.size() - 1 - window_chunks];
      if (out.stationarity > 0.9 * past) { // no longer improving
        out.quasi = true;
        return out;
      }
    }
  }
  // budget exhausted while quasi-stationary
  if (opts.quasi_tol > 0 && out.stationarity < opts.quasi_tol) out.quasi = true;
  return out;
}

}  // namespace

StationaryProfile find_single_soliton(const CgleParams& params, const ComplexField& seed,
                                      double z_relax, const RelaxOptions& opts) {
  auto out = relax_to_stationary(seed, params, z_relax, opts, false);
  if (!out.converged)
    throw NoAttractorError("single-soliton relaxation did not reach stationarity " +
                           std::to_string(opts.tol) + " within z = " +
                           std::to_string(z_relax) +
                           " (last metric " + std::to_string(out.stationarity) + ")");
  StationaryProfile prof;
  prof.field = ComplexField(seed.grid, std::move(out.u));
  prof.params = params;
  prof.drift_rate = out.phase_rate;
  prof.stationarity = out.stationarity;

  auto edge_ratio = [&](const CVec& u) {
    const double peak = u.cwiseAbs().maxCoeff();
    const double edge =
        std::max(std::abs(u[0]), std::abs(u[seed.grid->n - 1]));
    return edge / peak;
  };
  // The profile can be stationary while a residual linear background floor is
  // still draining at the slow rate |delta|; keep stepping until it clears.
  if (edge_ratio(prof.field.samples) > 1e-8) {
    CgleStepper st(seed.grid, params, opts.dz);
    const int chunk = std::max(1, int(std::lround(opts.check_dz / opts.dz)));
    double z_extra = 0;
    while (edge_ratio(prof.field.samples) > 1e-8 && z_extra < z_relax) {
      for (int s = 0; s < chunk; ++s) st.step(prof.field.samples);
      if (opts.parity != 0) symmetrize(prof.field.samples, opts.parity);
      z_extra += chunk * opts.dz;
    }
    check_finite(prof.field.samples, z_extra);
  }
  if (edge_ratio(prof.field.samples) > 1e-8)
    throw ConsistencyError("converged profile is not localized on this window");
  return prof;
}

ComplexField make_pair(const StationaryProfile& U0, double rho, double theta) {
  const auto& grid = *U0.field.grid;
  if (rho < 0) throw ConfigError("make_pair: rho must be non-negative");
  if (2 * rho >= 0.5 * grid.window)
    throw ConfigError("make_pair: separation too large for the window");
  const ComplexField left = shift_field(U0.field, -rho);
  const ComplexField right = shift_field(U0.field, +rho);
  CVec u = left.samples * std::exp(Complex(0, -0.5 * theta)) +
           right.samples * std::exp(Complex(0, +0.5 * theta));
  return ComplexField(U0.field.grid, std::move(u));
}

void measure_pair(const ComplexField& field, double* rho, double* theta) {
  auto peaks = find_peaks(field, 0.05);
  if (peaks.size() != 2)
    throw MeasurementError("expected exactly 2 intensity maxima, found " +
                           std::to_string(peaks.size()));
  const Peak& left = peaks[0].t < peaks[1].t ? peaks[0] : peaks[1];
  const Peak& right = peaks[0].t < peaks[1].t ? peaks[1] : peaks[0];
  if (rho) *rho = 0.5 * (right.t - left.t);
  if (theta) *theta = wrap_phase(std::arg(right.amplitude) - std::arg(left.amplitude));
}

double pair_split_time(const ComplexField& field) {
  auto peaks = find_peaks(field, 0.05);
  if (peaks.size() != 2)
    throw MeasurementError("pair_split_time: field does not have two maxima");
  int a = std::min(peaks[0].index, peaks[1].index);
  int b = std::max(peaks[0].index, peaks[1].index);
  int jmin = a;
  double best = std::norm(field.samples[a]);
  for (int j = a; j <= b; ++j) {
    const double I = std::norm(field.samples[j]);
    if (I < best) { best = I; jmin = j; }
  }
  return field.grid->t[jmin];
}

PairClass classify_pair(double theta) {
  const double a = std::abs(theta);
  if (a < 0.1) return PairClass::InPhase;
  if (std::abs(a - 0.5 * kPi) < 0.1) return PairClass::Orthogonal;
  if (std::abs(a - kPi) < 0.1) return PairClass::OutOfPhase;
  return PairClass::Other;
}

BoundPair relax_pair(const ComplexField& field, const CgleParams& params,
                     double z_relax, const RelaxOptions& opts) {
  if (find_peaks(field, 0.05).size() < 2)
    throw PairCollapseError("relax_pair: input has fewer than two intensity maxima");

  RelaxOptions o = opts;
  if (o.parity == 0) {
    // Parity-symmetric seeds stay on the parity manifold; pin them to it so
    // roundoff does not seed the antisymmetric instability.
    const int n = field.grid->n;
    CVec refl(n);
    for (int j = 0; j < n; ++j) refl[j] = field.samples[(n - j) % n];
    const double nrm = field.samples.norm();
    if ((field.samples - refl).norm() < 1e-10 * nrm) o.parity = +1;
    else if ((field.samples + refl).norm() < 1e-10 * nrm) o.parity = -1;
  }

  auto out = relax_to_stationary(field, params, z_relax, o, true);
  if (!out.converged && !out.quasi)
    throw NoAttractorError("pair relaxation did not reach stationarity " +
                           std::to_string(o.tol) + " within z = " +
                           std::to_string(z_relax) +
                           " (last metric " + std::to_string(out.stationarity) + ")");
  BoundPair pair;
  pair.field = ComplexField(field.grid, std::move(out.u));
  pair.params = params;
  pair.stationarity = out.stationarity;
  pair.drift_velocity = out.velocity;
  pair.quasi_bound = out.quasi;
  measure_pair(pair.field, &pair.rho, &pair.theta);
  pair.cls = classify_pair(pair.theta);
  return pair;
}

}  // namespace solnoise
