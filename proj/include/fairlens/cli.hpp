#pragma once

#include <string>
#include <vector>

#include "fairlens/common.hpp"

namespace fairlens {

/// Exit codes are a stable contract: 0 success, 1 metric or validation
/// failure (a partial report may still be written), 2 I/O or config error.
enum ExitCode { kOk = 0, kMetricFailure = 1, kConfigFailure = 2 };

struct RunConfig {
  std::string command;
  std::string manifest_path;
  std::vector<std::string> prediction_paths;
  std::vector<std::string> metrics;  // empty = default set
  std::vector<std::string> forms;    // empty = all forms
  std::uint64_t seed = 0;
  int k = 5;
  std::vector<std::string> learners;  // empty = command default
  std::string out_dir = ".";
  std::string format = "json";  // json | csv
  long approx_budget = 0;
  double kappa = 0.5;
  double alpha = 2.0;
  double epsilon = 1.0;
  double tau = 0.8;
  bool emit_timings = false;
  // bench grid
  std::vector<long> sizes;
  std::vector<int> value_counts;
  int repetitions = 5;
};

int cmd_validate(const RunConfig& config);
int cmd_audit(const RunConfig& config);
int cmd_bench(const RunConfig& config);
int cmd_experiment(const RunConfig& config);

/// Dispatches on config.command and maps exceptions to exit codes.
int run_cli(const RunConfig& config);

}  // namespace fairlens
