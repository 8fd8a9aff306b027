#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tomoprior/sart.hpp"
#include "tomoprior/scan.hpp"

namespace tomoprior::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::string scenario;  // comma list of presets or paper-train / paper-test
  std::vector<std::string> methods{"sart"};
  std::filesystem::path weights;
  std::filesystem::path out = "out";
  std::string phantoms = "10";  // count or directory
  bool ablation_no_attention = false;
  std::filesystem::path input;
  std::string scale = "desk";
  std::size_t side = 64;
  double pixel_size = 1.0;
  std::size_t rotations = 1;
  ReconConfig recon = [] {
    ReconConfig r;
    r.num_subsets = 10;
    return r;
  }();
  bool png = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::string reference = "phantom";
  std::string baseline;
  std::size_t probes = 10;
  std::filesystem::path expected;
  double tolerance = 1e-4;

  /// Resolved `scenario`; empty when none was given.
  std::vector<ScanScenario> scenarios() const;
  /// Throws InvalidInput on any configuration problem, before compute.
  void validate() const;
};

/// Expands a scenario list. Groups: paper-train (the six training
/// scenarios) and paper-test (the nine evaluation scenarios).
std::vector<ScanScenario> resolve_scenarios(const std::string& list, ScanScale scale);

void cmd_simulate(const ExperimentConfig& config, std::ostream& log);
void cmd_reconstruct(const ExperimentConfig& config, std::ostream& log);
void cmd_evaluate(const ExperimentConfig& config, std::ostream& log);
void cmd_train_export_check(const ExperimentConfig& config, std::ostream& log);

/// Parses arguments (args[0] is the program name), runs the subcommand and
/// maps failures to exit codes: 2 for configuration, 3 for data errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tomoprior::cli
