#pragma once

#include <optional>

#include "solnoise/config.hpp"
#include "solnoise/observables.hpp"
#include "solnoise/soliton.hpp"

namespace solnoise {

inline constexpr const char* kVersion = "0.1.0";

// One propagated background with its observable series.
struct BackgroundRun {
  std::string label;
  PairSelector selector = PairSelector::Single;
  double rho = 0;
  double theta = 0;
  double stationarity = 0;
  std::string note; // e.g. fallback to the raw ansatz
  ComplexField initial_field;
  double final_commutator_drift = 0; // max |K - I/dt| dt at the endpoint
  ObservableSeries series;
  std::optional<EtaMatrix> eta;
  double eta_z = 0;
  // Oracle results when enabled.
  std::optional<double> mc_noise, mc_noise_sigma, mc_c12, mc_c12_sigma;
  std::vector<double> backprop_rel_errors;
};

struct ExperimentResult {
  ExperimentConfig config;
  StationaryProfile soliton;
  double rho_star = 0;
  std::vector<BackgroundRun> runs;

  const BackgroundRun* find(PairSelector s) const;
};

// C12 of the last record, and a saturation measure (relative change of C12
// over the last quarter of the run).
struct SaturationSummary {
  double final_value = 0;
  double change_last_quarter = 0;
};
SaturationSummary c12_saturation(const ObservableSeries& series);

// Pure compute: relax the soliton, build the requested backgrounds, propagate
// the covariance along each, and collect observables. No file I/O.
ExperimentResult run_pipeline(const ExperimentConfig& cfg);

// Pipeline plus artifacts (CSV exports, manifest, summary) under
// out_root / cfg.out_dir. out_root defaults to $SOLNOISE_OUT or ".".
void run_experiment(const ExperimentConfig& cfg, std::string out_root = "");

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0;
  double threshold = 0;
  std::string note;
};

// Invariant suite: conservation in the conservative limit, loss-channel
// statistics, commutator drift, oracle equivalence, step convergence.
std::vector<CheckResult> run_validation(const ExperimentConfig& cfg);

// Helpers shared with the acceptance suite ------------------------------

// Classical sech seed on a grid.
ComplexField sech_seed(GridPtr grid, double amplitude, double width = 1.0);

// Relax the single soliton for cfg and discover the quantized pair
// separation from the out-of-phase relaxation (unless cfg pins pair.rho).
struct PreparedBackgrounds {
  StationaryProfile soliton;
  double rho_star = 0;
  std::optional<BoundPair> out_of_phase; // reused when discovery ran
};
PreparedBackgrounds prepare_soliton_and_rho(const ExperimentConfig& cfg);

// Build (and by default relax) the background field for one selector.
struct PreparedField {
  ComplexField field;
  double rho = 0, theta = 0, stationarity = 0;
  bool frozen = false; // ansatz background: prescribe it analytically
  std::string note;
};
PreparedField prepare_background(const ExperimentConfig& cfg,
                                 const PreparedBackgrounds& prep, PairSelector sel);

}  // namespace solnoise
