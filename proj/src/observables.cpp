#include "solnoise/observables.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace solnoise {

SlotPartition make_partition(const ComplexField& U0, double slot_width,
                             double split_time, double intensity_floor) {
  if (!(slot_width > 0)) throw ConfigError("make_partition: slot width must be positive");
  const auto& g = *U0.grid;
  RVec I(g.n);
  for (int j = 0; j < g.n; ++j) I[j] = std::norm(U0.samples[j]);
  const double floor_abs = intensity_floor * I.maxCoeff();

  double t_lo = split_time, t_hi = split_time;
  for (int j = 0; j < g.n; ++j) {
    if (I[j] >= floor_abs) {
      t_lo = std::min(t_lo, g.t[j]);
      t_hi = std::max(t_hi, g.t[j]);
    }
  }
  const int n_left = std::max(1, int(std::ceil((split_time - t_lo) / slot_width - 1e-12)));
  const int n_right = std::max(1, int(std::ceil((t_hi - split_time) / slot_width - 1e-12)));

  SlotPartition part;
  part.slot_width = slot_width;
  part.split_time = split_time;
  part.n_slots = n_left + n_right;
  part.boundaries.resize(part.n_slots + 1);
  for (int i = 0; i <= part.n_slots; ++i)
    part.boundaries[i] = split_time + (i - n_left) * slot_width;
  part.centers.resize(part.n_slots);
  for (int i = 0; i < part.n_slots; ++i)
    part.centers[i] = 0.5 * (part.boundaries[i] + part.boundaries[i + 1]);
  part.slot_of.assign(g.n, -1);
  for (int j = 0; j < g.n; ++j) {
    const double x = (g.t[j] - part.boundaries[0]) / slot_width;
    if (x >= 0 && g.t[j] < part.boundaries[part.n_slots]) {
      int s = int(x);
      if (s >= part.n_slots) s = part.n_slots - 1;
      part.slot_of[j] = s;
    }
  }
  return part;
}

CVec slot_projection(const ComplexField& U0, int slot, const SlotPartition& part) {
  CVec f = CVec::Zero(U0.grid->n);
  for (int j = 0; j < U0.grid->n; ++j)
    if (part.slot_of[j] == slot) f[j] = U0.samples[j];
  return f;
}

CVec total_projection(const ComplexField& U0) { return U0.samples; }

CVec soliton_projection(const ComplexField& U0, double split_time, int which) {
  CVec f = CVec::Zero(U0.grid->n);
  for (int j = 0; j < U0.grid->n; ++j) {
    const bool left = U0.grid->t[j] < split_time;
    if ((which == 1 && left) || (which == 2 && !left)) f[j] = U0.samples[j];
  }
  return f;
}

double normally_ordered_covariance(const CovarianceState& state, const CVec& f,
                                   const CVec& g, double dt) {
  const Complex pf = f.dot(state.P * g);                 // f^dag P g
  const Complex qf = f.transpose() * (state.Q.conjugate() * g); // f^T conj(Q) g
  return 2.0 * dt * dt * (pf.real() + qf.real());
}

double shot_term(const CovarianceState& state, const CVec& f, const CVec& g, double dt) {
  return dt * dt * f.dot(state.K * g).real();
}

double unordered_covariance(const CovarianceState& state, const CVec& f,
                            const CVec& g, double dt) {
  return normally_ordered_covariance(state, f, g, dt) + shot_term(state, f, g, dt);
}

C12Result c12(const CovarianceState& state, const ComplexField& U0, double split_time) {
  const double dt = U0.grid->dt;
  const CVec f1 = soliton_projection(U0, split_time, 1);
  const CVec f2 = soliton_projection(U0, split_time, 2);
  C12Result r;
  r.numerator = normally_ordered_covariance(state, f1, f2, dt);
  r.var1 = unordered_covariance(state, f1, f1, dt);
  r.var2 = unordered_covariance(state, f2, f2, dt);
  if (!(r.var1 > 0) || !(r.var2 > 0))
    throw MeasurementError("c12: vanishing soliton variance");
  r.mixed = r.numerator / std::sqrt(r.var1 * r.var2);
  const double v1n = normally_ordered_covariance(state, f1, f1, dt);
  const double v2n = normally_ordered_covariance(state, f2, f2, dt);
  r.normal = (v1n > 0 && v2n > 0) ? r.numerator / std::sqrt(v1n * v2n) : 0.0;
  return r;
}

EtaMatrix eta_matrix(const CovarianceState& state, const ComplexField& U0,
                     const SlotPartition& part) {
  const double dt = U0.grid->dt;
  const int m = part.n_slots;
  std::vector<CVec> proj(m);
  for (int i = 0; i < m; ++i) proj[i] = slot_projection(U0, i, part);

  RVec var_un(m), var_no(m);
  EtaMatrix eta;
  eta.centers = part.centers;
  eta.split_time = part.split_time;
  eta.zero_variance.assign(m, false);
  {
    double il = -1, ir = -1;
    eta.left_peak = eta.right_peak = part.split_time;
    for (int j = 0; j < U0.grid->n; ++j) {
      const double I = std::norm(U0.samples[j]);
      const double t = U0.grid->t[j];
      if (t < part.split_time ? I > il : I > ir) {
        (t < part.split_time ? il : ir) = I;
        (t < part.split_time ? eta.left_peak : eta.right_peak) = t;
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    var_no[i] = normally_ordered_covariance(state, proj[i], proj[i], dt);
    var_un[i] = unordered_covariance(state, proj[i], proj[i], dt);
    if (var_un[i] <= 0) eta.zero_variance[i] = true;
  }
  eta.mixed = RMat::Zero(m, m);
  eta.normal = RMat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (eta.zero_variance[i] || eta.zero_variance[j]) continue;
      const double num = normally_ordered_covariance(state, proj[i], proj[j], dt);
      eta.mixed(i, j) = eta.mixed(j, i) = num / std::sqrt(var_un[i] * var_un[j]);
      if (var_no[i] > 0 && var_no[j] > 0)
        eta.normal(i, j) = eta.normal(j, i) = num / std::sqrt(var_no[i] * var_no[j]);
    }
  }
  return eta;
}

namespace {

double cross_mean_impl(const EtaMatrix& eta, bool overlap_only) {
  const int m = int(eta.centers.size());
  std::vector<int> left, right;
  for (int i = 0; i < m; ++i) {
    if (eta.zero_variance[i]) continue;
    if (eta.centers[i] < eta.split_time) left.push_back(i);
    else right.push_back(i);
  }
  if (overlap_only) {
    auto restrict_side = [&](std::vector<int>& side, double peak, bool is_left) {
      std::vector<int> inner;
      for (int i : side) {
        if (is_left ? eta.centers[i] > peak : eta.centers[i] < peak)
          inner.push_back(i);
      }
      // peaks closer than one slot to the split: keep the adjacent slot
      if (inner.empty() && !side.empty())
        inner.push_back(is_left ? side.back() : side.front());
      side = std::move(inner);
    };
    restrict_side(left, eta.left_peak, true);
    restrict_side(right, eta.right_peak, false);
  }
  if (left.empty() || right.empty())
    throw MeasurementError("cross_block_mean: empty cross block");
  double acc = 0;
  for (int i : left)
    for (int j : right) acc += eta.mixed(i, j);
  return acc / (double(left.size()) * double(right.size()));
}

}  // namespace

double cross_block_mean(const EtaMatrix& eta) { return cross_mean_impl(eta, true); }

double cross_block_mean_full(const EtaMatrix& eta) {
  return cross_mean_impl(eta, false);
}

TotalNoise total_photon_noise(const CovarianceState& state, const ComplexField& U0) {
  const double dt = U0.grid->dt;
  const CVec f = total_projection(U0);
  TotalNoise tn;
  tn.variance_normal = normally_ordered_covariance(state, f, f, dt);
  tn.variance_unordered = tn.variance_normal + shot_term(state, f, f, dt);
  tn.mean_photons = energy(U0);
  tn.fano = tn.mean_photons > 0 ? 1.0 + tn.variance_normal / tn.mean_photons : 0.0;
  return tn;
}

namespace {
std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace

void write_c12_csv(std::ostream& os, const std::vector<ObservableSeries>& series) {
  os << "z,label,c12,c12_normal\n";
  for (const auto& s : series) {
    if (!s.has_c12) continue;
    for (const auto& r : s.records)
      os << fmt(r.z) << ',' << s.label << ',' << fmt(r.c12_mixed) << ','
         << fmt(r.c12_normal) << '\n';
  }
}

void write_total_noise_csv(std::ostream& os, const std::vector<ObservableSeries>& series) {
  os << "z,label,variance,fano,variance_unordered,mean_photons\n";
  for (const auto& s : series)
    for (const auto& r : s.records)
      os << fmt(r.z) << ',' << s.label << ',' << fmt(r.noise_normal) << ','
         << fmt(r.fano) << ',' << fmt(r.noise_unordered) << ','
         << fmt(r.mean_photons) << '\n';
}

void write_eta_csv(std::ostream& os, const EtaMatrix& eta) {
  const int m = int(eta.centers.size());
  os << "t_i\\t_j";
  for (int j = 0; j < m; ++j) os << ',' << fmt(eta.centers[j]);
  os << '\n';
  for (int i = 0; i < m; ++i) {
    os << fmt(eta.centers[i]);
    for (int j = 0; j < m; ++j) os << ',' << fmt(eta.mixed(i, j));
    os << '\n';
  }
}

}  // namespace solnoise
