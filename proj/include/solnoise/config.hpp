#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "solnoise/cgle.hpp"

namespace solnoise {

enum class PairSelector { Single, InPhase, Orthogonal, OutOfPhase, Explicit };

const char* pair_selector_name(PairSelector s);

// Everything one experiment run needs, parsed from a flat key = value file.
struct ExperimentConfig {
  CgleParams params{1.0, -0.01, 1.8, 0.5, -0.05, 0.0};

  int grid_n = 512;
  double grid_window = 40.0;

  std::vector<PairSelector> backgrounds = {PairSelector::InPhase,
                                           PairSelector::Orthogonal,
                                           PairSelector::OutOfPhase};
  double pair_rho = 0;      // 0 = discover via out-of-phase relaxation
  double pair_theta = 0;    // used by PairSelector::Explicit
  bool pair_use_ansatz = false; // skip per-class relaxation, use the raw ansatz

  double seed_amplitude = 1.5;
  double relax_z = 1500.0;
  double relax_dz = 4e-3;
  double relax_tol = 1e-6;

  double z_total = 2.0;
  double dz = 1e-3;
  int stride = 20;

  double slot_width = 0.3;
  double intensity_floor = 1e-6;
  double eta_z = 0.4;

  int mc_samples = 0;       // Monte-Carlo oracle in run_experiment, 0 = off
  int backprop_checks = 0;  // adjoint cross-checks in run_experiment, 0 = off
  std::uint64_t seed = 12345;

  std::string out_dir = "out";
};

// Parse "key = value" lines; '#' starts a comment; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical serialization (sorted keys, full precision) and its FNV-1a hash,
// embedded in every output manifest.
std::string serialize_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// In-repo presets.
const std::map<std::string, std::string>& builtin_presets();

}  // namespace solnoise
