#include "solnoise/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace solnoise {

const char* pair_selector_name(PairSelector s) {
  switch (s) {
    case PairSelector::Single: return "single";
    case PairSelector::InPhase: return "in_phase";
    case PairSelector::Orthogonal: return "orthogonal";
    case PairSelector::OutOfPhase: return "out_of_phase";
    default: return "explicit";
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
}

PairSelector parse_selector(const std::string& v) {
  if (v == "single") return PairSelector::Single;
  if (v == "in_phase") return PairSelector::InPhase;
  if (v == "orthogonal") return PairSelector::Orthogonal;
  if (v == "out_of_phase") return PairSelector::OutOfPhase;
  if (v == "explicit") return PairSelector::Explicit;
  throw ConfigError("config: unknown background '" + v + "'");
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> keys = {
      {"cgle.D", [&](auto& k, auto& v) { cfg.params.D = parse_double(k, v); }},
      {"cgle.delta", [&](auto& k, auto& v) { cfg.params.delta = parse_double(k, v); }},
      {"cgle.epsilon", [&](auto& k, auto& v) { cfg.params.epsilon = parse_double(k, v); }},
      {"cgle.beta", [&](auto& k, auto& v) { cfg.params.beta = parse_double(k, v); }},
      {"cgle.mu", [&](auto& k, auto& v) { cfg.params.mu = parse_double(k, v); }},
      {"cgle.nu", [&](auto& k, auto& v) { cfg.params.nu = parse_double(k, v); }},
      {"grid.n", [&](auto& k, auto& v) { cfg.grid_n = int(parse_int(k, v)); }},
      {"grid.window", [&](auto& k, auto& v) { cfg.grid_window = parse_double(k, v); }},
      {"pair.backgrounds",
       [&](auto& k, auto& v) {
         cfg.backgrounds.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) cfg.backgrounds.push_back(parse_selector(trim(item)));
         if (cfg.backgrounds.empty()) throw ConfigError("config: empty " + k);
       }},
      {"pair.rho", [&](auto& k, auto& v) { cfg.pair_rho = parse_double(k, v); }},
      {"pair.theta", [&](auto& k, auto& v) { cfg.pair_theta = parse_double(k, v); }},
      {"pair.use_ansatz", [&](auto& k, auto& v) { cfg.pair_use_ansatz = parse_int(k, v) != 0; }},
      {"relax.seed_amplitude", [&](auto& k, auto& v) { cfg.seed_amplitude = parse_double(k, v); }},
      {"relax.z", [&](auto& k, auto& v) { cfg.relax_z = parse_double(k, v); }},
      {"relax.dz", [&](auto& k, auto& v) { cfg.relax_dz = parse_double(k, v); }},
      {"relax.tol", [&](auto& k, auto& v) { cfg.relax_tol = parse_double(k, v); }},
      {"z.total", [&](auto& k, auto& v) { cfg.z_total = parse_double(k, v); }},
      {"z.dz", [&](auto& k, auto& v) { cfg.dz = parse_double(k, v); }},
      {"z.stride", [&](auto& k, auto& v) { cfg.stride = int(parse_int(k, v)); }},
      {"partition.dt", [&](auto& k, auto& v) { cfg.slot_width = parse_double(k, v); }},
      {"partition.floor", [&](auto& k, auto& v) { cfg.intensity_floor = parse_double(k, v); }},
      {"eta.z", [&](auto& k, auto& v) { cfg.eta_z = parse_double(k, v); }},
      {"oracle.mc_samples", [&](auto& k, auto& v) { cfg.mc_samples = int(parse_int(k, v)); }},
      {"oracle.backprop_checks", [&](auto& k, auto& v) { cfg.backprop_checks = int(parse_int(k, v)); }},
      {"seed", [&](auto& k, auto& v) { cfg.seed = std::uint64_t(parse_int(k, v)); }},
      {"out.dir", [&](auto&, auto& v) { cfg.out_dir = v; }},
  };

  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    lineno++;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(key, value);
  }
  if (cfg.grid_n < 8) throw ConfigError("config: grid.n must be >= 8");
  if (!(cfg.grid_window > 0)) throw ConfigError("config: grid.window must be positive");
  if (!(cfg.dz > 0)) throw ConfigError("config: z.dz must be positive");
  if (cfg.stride < 1) throw ConfigError("config: z.stride must be >= 1");
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string bg;
  for (size_t i = 0; i < c.backgrounds.size(); ++i) {
    if (i) bg += ',';
    bg += pair_selector_name(c.backgrounds[i]);
  }
  std::map<std::string, std::string> kv = {
      {"cgle.D", fmt(c.params.D)},
      {"cgle.delta", fmt(c.params.delta)},
      {"cgle.epsilon", fmt(c.params.epsilon)},
      {"cgle.beta", fmt(c.params.beta)},
      {"cgle.mu", fmt(c.params.mu)},
      {"cgle.nu", fmt(c.params.nu)},
      {"grid.n", std::to_string(c.grid_n)},
      {"grid.window", fmt(c.grid_window)},
      {"pair.backgrounds", bg},
      {"pair.rho", fmt(c.pair_rho)},
      {"pair.theta", fmt(c.pair_theta)},
      {"pair.use_ansatz", c.pair_use_ansatz ? "1" : "0"},
      {"relax.seed_amplitude", fmt(c.seed_amplitude)},
      {"relax.z", fmt(c.relax_z)},
      {"relax.dz", fmt(c.relax_dz)},
      {"relax.tol", fmt(c.relax_tol)},
      {"z.total", fmt(c.z_total)},
      {"z.dz", fmt(c.dz)},
      {"z.stride", std::to_string(c.stride)},
      {"partition.dt", fmt(c.slot_width)},
      {"partition.floor", fmt(c.intensity_floor)},
      {"eta.z", fmt(c.eta_z)},
      {"oracle.mc_samples", std::to_string(c.mc_samples)},
      {"oracle.backprop_checks", std::to_string(c.backprop_checks)},
      {"seed", std::to_string(c.seed)},
      {"out.dir", c.out_dir},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

const std::map<std::string, std::string>& builtin_presets() {
  static const std::map<std::string, std::string> presets = {
      {"fig1",
       "# Photon-number correlation C12(z) for the three bound pairs\n"
       "pair.backgrounds = in_phase,orthogonal,out_of_phase\n"
       "z.total = 6.0\n"
       "out.dir = fig1\n"},
      {"fig2",
       "# Slot-resolved correlation matrices eta_ij at z = 0.4\n"
       "pair.backgrounds = in_phase,orthogonal,out_of_phase\n"
       "z.total = 0.4\n"
       "eta.z = 0.4\n"
       "partition.dt = 0.3\n"
       "out.dir = fig2\n"},
      {"fig3",
       "# Total photon-number noise of the pairs against the single soliton\n"
       "pair.backgrounds = in_phase,orthogonal,out_of_phase,single\n"
       "z.total = 6.0\n"
       "out.dir = fig3\n"},
      {"validate",
       "# Reduced-size configuration for the validation suite\n"
       "grid.n = 64\n"
       "grid.window = 20\n"
       "z.total = 0.4\n"
       "z.stride = 10\n"
       "oracle.mc_samples = 10000\n"
       "oracle.backprop_checks = 3\n"
       "out.dir = validate\n"},
  };
  return presets;
}

}  // namespace solnoise
