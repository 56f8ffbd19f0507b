#pragma once

#include <iosfwd>
#include <vector>

#include "solnoise/covariance.hpp"

namespace solnoise {

// Tiling of the analysis window into photon-counting slots of fixed width,
// aligned so the soliton 1/2 split time is a slot boundary.
struct SlotPartition {
  double slot_width = 0;
  double split_time = 0;
  std::vector<double> boundaries;   // n_slots + 1, ascending
  std::vector<double> centers;      // n_slots
  std::vector<int> slot_of;         // per sample; -1 outside the analysis window
  int n_slots = 0;

  bool slot_left_of_split(int slot) const { return centers.at(slot) < split_time; }
};

// Slots cover the region where |U0|^2 > intensity_floor * peak. A floor of 0
// tiles the whole window.
SlotPartition make_partition(const ComplexField& U0, double slot_width,
                             double split_time, double intensity_floor = 1e-6);

// Photon-number projection vectors f encoding the functional
//   dt * sum_j (conj(f_j) u_j + f_j u^dag_j).
CVec slot_projection(const ComplexField& U0, int slot, const SlotPartition& part);
CVec total_projection(const ComplexField& U0);
// Soliton 1 (t < split) or soliton 2 (t >= split).
CVec soliton_projection(const ComplexField& U0, double split_time, int which);

// <:dF dG:> assembled from P and Q only.
double normally_ordered_covariance(const CovarianceState& state, const CVec& f,
                                   const CVec& g, double dt);
// Commutator (shot) term dt^2 Re(f^dag K g); on disjoint supports it vanishes.
double shot_term(const CovarianceState& state, const CVec& f, const CVec& g, double dt);
double unordered_covariance(const CovarianceState& state, const CVec& f,
                            const CVec& g, double dt);

struct C12Result {
  double mixed = 0;  // normally-ordered numerator over unordered variances (as printed)
  double normal = 0; // fully normally-ordered variant, for diagnostics
  double numerator = 0;
  double var1 = 0, var2 = 0; // unordered soliton variances
};

C12Result c12(const CovarianceState& state, const ComplexField& U0, double split_time);

struct EtaMatrix {
  RMat mixed;    // paper convention
  RMat normal;   // fully normally-ordered variant
  std::vector<double> centers;
  std::vector<bool> zero_variance; // flagged slots (entries forced to 0)
  double split_time = 0;
  double left_peak = 0;  // intensity maxima of the background on each side of
  double right_peak = 0; // the split (equal for a single-pulse background)
};

EtaMatrix eta_matrix(const CovarianceState& state, const ComplexField& U0,
                     const SlotPartition& part);

// Mean of eta over the cross-soliton block (slot i in soliton 1, j in
// soliton 2), restricted to the inter-soliton overlap region: slots between
// the two intensity peaks, where the cross correlations are actually
// established. Outside that region the entries alternate sign with the
// timing-jitter lobes of each pulse and average towards zero, so the
// unrestricted mean (cross_block_mean_full) understates the pattern.
double cross_block_mean(const EtaMatrix& eta);
// Mean over the full cross quadrant of the partition window.
double cross_block_mean_full(const EtaMatrix& eta);

struct TotalNoise {
  double variance_normal = 0;    // <:dN^2:>
  double variance_unordered = 0; // + shot
  double mean_photons = 0;
  double fano = 0;               // 1 + variance_normal / mean_photons
};

TotalNoise total_photon_noise(const CovarianceState& state, const ComplexField& U0);

// Per-z record of everything the experiment plots.
struct ObservableRecord {
  double z = 0;
  double c12_mixed = 0, c12_normal = 0;
  double noise_normal = 0, noise_unordered = 0, fano = 0, mean_photons = 0;
  std::vector<double> slot_variances; // unordered
};

struct ObservableSeries {
  std::string label;
  bool has_c12 = false; // false for single-soliton backgrounds
  std::vector<ObservableRecord> records;
};

void write_c12_csv(std::ostream& os, const std::vector<ObservableSeries>& series);
void write_total_noise_csv(std::ostream& os, const std::vector<ObservableSeries>& series);
void write_eta_csv(std::ostream& os, const EtaMatrix& eta);

}  // namespace solnoise
