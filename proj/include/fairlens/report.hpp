#pragma once

#include <nlohmann/json.hpp>

#include "fairlens/experiments.hpp"
#include "fairlens/group.hpp"
#include "fairlens/intersectional.hpp"

namespace fairlens {

/// Metric families the audit knows. Probe families expand over the selected
/// forms; the rest are single rows per source (and per attribute where the
/// metric is attribute-scoped).
const std::vector<std::string>& known_metric_ids();
std::vector<std::string> default_metric_ids();

struct AuditConfig {
  std::vector<std::string> metrics;  // empty = default set
  std::vector<Form> forms;           // empty = every applicable form
  std::vector<LearnerSpec> learners;
  std::vector<PredictionSet> predictions;  // external sources
  int k = 5;
  std::uint64_t seed = 0;
  double kappa = 0.5;    // EDF smoothing
  double alpha = 2.0;    // GEI exponent; also the multiaccuracy threshold
  double epsilon = 1.0;  // Lipschitz ratio threshold and BER threshold
  double tau = 0.8;      // disparate-impact pass threshold
  double xi = 0.5;       // bounded-group-loss level
  long approx_budget = 0;  // 0 = exact HFM
  bool emit_timings = false;  // wall times vary run to run; off by default
  int threads = 0;            // 0 = max_workers()
};

struct MetricRow {
  std::string id;
  std::string source;
  std::string attribute;  // attribute name, or "*" for joint/global metrics
  std::optional<double> value;
  std::vector<int> skipped_groups;
  std::vector<std::string> flags;
  std::string error;  // non-empty when the metric could not be computed
  std::int64_t wall_time_ns = 0;
  nlohmann::json details;  // metric-specific extras (ratios, pass flags, ...)

  bool skipped() const { return !value.has_value() && error.empty(); }
};

struct FairnessReport {
  std::uint64_t fingerprint = 0;
  long n = 0;
  long n_features = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;
  std::vector<std::string> dataset_flags;
  std::map<std::string, PerformanceTriple> performance;  // per source
  std::vector<MetricRow> rows;
  bool emit_timings = false;

  bool has_errors() const;
  nlohmann::json to_json() const;
  std::string to_csv() const;  // id,source,attribute,value,error
};

/// Computes every selected metric for every source; failures become error
/// rows and the rest of the report still fills in. Independent metric tasks
/// run concurrently (capped by FAIRLENS_THREADS) into pre-assigned slots, so
/// output order never depends on scheduling.
FairnessReport run_audit(const Dataset& dataset, const AuditConfig& config);

}  // namespace fairlens
