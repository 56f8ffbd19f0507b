#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "solnoise/experiment.hpp"

namespace fs = std::filesystem;
using namespace solnoise;

namespace {

// A run argument is either a config file path or a built-in preset name.
std::string resolve_config_text(const std::string& arg) {
  if (fs::exists(arg)) {
    std::ifstream is(arg);
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
  }
  const auto& presets = builtin_presets();
  const auto it = presets.find(arg);
  if (it != presets.end()) return it->second;
  throw ConfigError("no such config file or preset: " + arg);
}

std::string out_root() {
  const char* env = std::getenv("SOLNOISE_OUT");
  return env && *env ? env : ".";
}

int do_validate(const std::string& arg) {
  const ExperimentConfig cfg = parse_config(resolve_config_text(arg));
  const auto checks = run_validation(cfg);
  std::ostringstream report;
  bool all_pass = true;
  for (const auto& c : checks) {
    char line[256];
    std::snprintf(line, sizeof line, "%s %-28s measured %.3e threshold %.3e %s\n",
                  c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.threshold,
                  c.note.c_str());
    report << line;
    all_pass = all_pass && c.pass;
  }
  std::cout << report.str();
  std::cout << (all_pass ? "validation: all checks passed\n"
                         : "validation: FAILURES present\n");
  const fs::path dir = fs::path(out_root()) / cfg.out_dir;
  fs::create_directories(dir);
  std::ofstream os(dir / "validate_report.txt", std::ios::binary);
  os << report.str();
  return all_pass ? 0 : 1;
}

int do_sweep(const std::string& arg, const std::string& vary, int jobs) {
  const auto eq = vary.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--vary expects key=a,b,c");
  const std::string key = vary.substr(0, eq);
  std::vector<std::string> values;
  std::stringstream ss(vary.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(item);
  if (values.empty()) throw ConfigError("--vary has no values");

  const std::string base_text = resolve_config_text(arg);
  const ExperimentConfig base = parse_config(base_text);

  struct Job {
    ExperimentConfig cfg;
    std::string value;
  };
  std::vector<Job> queue;
  for (const auto& v : values) {
    ExperimentConfig cfg = parse_config(base_text + "\n" + key + " = " + v + "\n");
    // isolated output directory keyed by the config hash, for resumption
    cfg.out_dir = base.out_dir + "/" + config_hash(cfg);
    queue.push_back({std::move(cfg), v});
  }

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex io;
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= queue.size()) return;
      const Job& job = queue[i];
      const fs::path manifest = fs::path(out_root()) / job.cfg.out_dir / "manifest.json";
      if (fs::exists(manifest)) {
        try {
          const auto j = nlohmann::json::parse(std::ifstream(manifest));
          if (j.value("status", "") == "complete") {
            std::lock_guard<std::mutex> lk(io);
            std::cout << "sweep " << key << " = " << job.value << ": already complete ("
                      << job.cfg.out_dir << ")\n";
            continue;
          }
        } catch (...) {
          // unreadable manifest: rerun
        }
      }
      try {
        run_experiment(job.cfg);
        std::lock_guard<std::mutex> lk(io);
        std::cout << "sweep " << key << " = " << job.value << ": done ("
                  << job.cfg.out_dir << ")\n";
      } catch (const std::exception& e) {
        failed = true;
        std::lock_guard<std::mutex> lk(io);
        std::cerr << "sweep " << key << " = " << job.value << ": FAILED: " << e.what()
                  << "\n";
      }
    }
  };
  jobs = std::max(1, std::min<int>(jobs, int(queue.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bound soliton pair quantum-noise experiments"};
  app.require_subcommand(1);

  std::string run_arg, validate_arg, sweep_arg, vary;
  int jobs = 4;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment (preset name or config file)");
  run_cmd->add_option("config", run_arg, "preset or config file")->required();

  auto* val_cmd = app.add_subcommand("validate", "Run the validation suite");
  val_cmd->add_option("config", validate_arg, "preset or config file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one config key over several values");
  sweep_cmd->add_option("config", sweep_arg, "preset or config file")->required();
  sweep_cmd->add_option("--vary", vary, "key=a,b,c")->required();
  sweep_cmd->add_option("--jobs", jobs, "max parallel jobs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const ExperimentConfig cfg = parse_config(resolve_config_text(run_arg));
      run_experiment(cfg);
      std::cout << "run complete: " << (fs::path(out_root()) / cfg.out_dir).string()
                << " (config " << config_hash(cfg) << ")\n";
      return 0;
    }
    if (val_cmd->parsed()) return do_validate(validate_arg);
    if (sweep_cmd->parsed()) return do_sweep(sweep_arg, vary, jobs);
  } catch (const ConfigError& e) {
    nlohmann::ordered_json err{{"error", "config"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    nlohmann::ordered_json err{{"error", "runtime"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
