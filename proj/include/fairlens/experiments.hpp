#pragma once

#include <optional>

#include "fairlens/group.hpp"
#include "fairlens/hfm.hpp"
#include "fairlens/learners.hpp"

namespace fairlens {

// ---------------------------------------------------------------------------
// Synthetic substrate: datasets with planted group structure, used by the
// benchmark grids and the acceptance suite when licensed datasets are absent.

struct SyntheticSpec {
  long n = 1000;
  int n_features = 6;
  std::vector<int> value_counts = {2};  // one entry per sensitive attribute
  // Optional planted structure on attribute 0 (uniform groups otherwise):
  std::vector<double> group_weights;
  std::vector<double> group_label_rates;  // per-group P(y = 1), default 0.5
  std::uint64_t seed = 0;
};

Dataset make_synthetic(const SyntheticSpec& spec);

/// Predictions with planted per-group positive rates on one attribute:
/// group j gets floor(rate_j * |D_j|) positive predictions, assigned by a
/// seeded shuffle of the group's rows.
PredictionSet planted_predictions(const Dataset& dataset, int attribute,
                                  const std::vector<double>& group_rates,
                                  std::uint64_t seed);

/// Pure-function model with tunable dependence on a sensitive attribute:
/// each row hashes its features to u in [0,1); rows with u < theta predict
/// the attribute code's parity, the rest threshold feature 0. Discriminative
/// risk approaches theta under flip-all perturbation of a binary attribute.
class PlantedDependenceModel : public Model {
 public:
  PlantedDependenceModel(double theta, int attribute)
      : theta_(theta), attribute_(attribute) {}

  IntVector predict(const Matrix& x, const IntMatrix& a) const override;
  std::string id() const override;

 private:
  double theta_;
  int attribute_;
};

/// A model that never reads the sensitive inputs (thresholds feature 0);
/// its discriminative risk is exactly zero.
class SensitiveBlindModel : public Model {
 public:
  IntVector predict(const Matrix& x, const IntMatrix& a) const override;
  std::string id() const override { return "planted:blind"; }
};

/// f(x, a) = parity of the attribute code; flips everywhere under flip-all
/// perturbation of a binary attribute.
class AttributeEchoModel : public Model {
 public:
  explicit AttributeEchoModel(int attribute) : attribute_(attribute) {}
  IntVector predict(const Matrix& x, const IntMatrix& a) const override;
  std::string id() const override { return "planted:echo"; }

 private:
  int attribute_;
};

// ---------------------------------------------------------------------------
// Underestimation family (binarised vs extension forms, per fold)

struct FormValueRow {
  std::string candidate;
  int fold = 0;
  int attribute = 0;
  ProbeKind kind = ProbeKind::DP;
  Form form = Form::Orig;
  double value = 0.0;
  bool available = false;
  std::string note;
};

struct UnderestimationTable {
  std::vector<FormValueRow> rows;
  long folds_compared = 0;          // (candidate, fold, kind) cells
  long folds_binarised_lt_alt = 0;  // strictly smaller binarised value
};

UnderestimationTable underestimation_table(
    const Dataset& dataset, const std::vector<LearnerSpec>& learners, int k,
    std::uint64_t seed, const std::vector<ProbeKind>& kinds, int attribute);

/// Same table over an existing full-dataset prediction set (fold splits
/// without training); feeds planted and externally ingested predictions.
UnderestimationTable underestimation_for_predictions(
    const Dataset& dataset, const PredictionSet& preds, int k,
    std::uint64_t seed, const std::vector<ProbeKind>& kinds, int attribute,
    const std::string& label);

// ---------------------------------------------------------------------------
// Timing benchmarks

struct TimingRecord {
  std::string metric;  // probe family, "gei", "theil", "hfm.prev", ...
  std::string form;
  std::uint64_t fingerprint = 0;
  long n = 0;
  int value_count = 0;
  int repetitions = 0;
  std::int64_t median_ns = 0;
  std::int64_t min_ns = 0;
  long term_count = 0;
};

struct TimingBenchConfig {
  std::vector<std::string> metrics = {"dp", "gei", "theil"};
  std::vector<long> sizes = {10000, 30000};
  std::vector<int> value_counts = {2, 5};
  std::vector<long> hfm_sizes = {400, 800};  // quadratic-cost metrics
  long hfm_budget = 32;                      // approximation budget column
  int repetitions = 5;
  std::uint64_t seed = 0;
};

/// Median-of-repetitions wall times with one discarded warm-up run per
/// configuration; all metric evaluations are pinned to a single worker.
std::vector<TimingRecord> timing_bench(const TimingBenchConfig& config);

// ---------------------------------------------------------------------------
// Perturbation deltas and correlation

struct DeltaPerformance {
  double d_accuracy = 0.0;
  double d_f1 = 0.0;
  double d_gmean = 0.0;
};

/// Absolute performance changes when only the sensitive inputs are perturbed
/// (same rows, same model). d_accuracy is computed from integer disagreement
/// counts so the bound d_accuracy <= DR holds exactly.
DeltaPerformance delta_performance(const Model& model, const Dataset& dataset,
                                   std::uint64_t seed,
                                   PerturbPolicy policy = PerturbPolicy::flip_all());

DeltaPerformance delta_performance(const Model& model, const Dataset& dataset,
                                   const std::vector<int>& rows,
                                   const IntMatrix& perturbed_sensitive);

/// Pearson correlation, single-pass moment form. The acceptance suite checks
/// it against a two-pass textbook oracle. Returns nullopt when either series
/// has zero variance or fewer than 3 samples exist.
std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y);

struct CorrelationRow {
  std::string metric;
  std::string series;
  double r = 0.0;
  long samples = 0;
  bool defined = false;
};

std::vector<CorrelationRow> correlation_table(
    const std::map<std::string, std::vector<double>>& metric_series,
    const std::map<std::string, std::vector<double>>& delta_series);

// ---------------------------------------------------------------------------
// End-to-end experiment pipeline (the figure-family reproductions)

struct ExperimentConfig {
  std::vector<LearnerSpec> learners;
  std::vector<PredictionSet> external;  // ingested prediction files
  int k = 5;
  std::uint64_t seed = 0;
  long hfm_budget = 0;  // 0 = exact
};

struct MetricCell {
  std::string id;  // e.g. "dp.alt@race"
  double value = 0.0;
  bool available = false;
  std::string note;
};

struct ExperimentRow {
  std::string candidate;
  int fold = 0;
  PerformanceTriple perf;
  std::optional<DeltaPerformance> delta;  // absent for file candidates
  std::vector<MetricCell> metrics;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  UnderestimationTable underestimation;
  std::vector<CorrelationRow> correlations;
  std::vector<CorrelationRow> relations;
  std::vector<std::string> metric_ids;  // stable column order
  std::uint64_t fingerprint = 0;
};

ExperimentResult run_experiment(const Dataset& dataset,
                                const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Deterministic CSV emission ("%.17g" doubles, one schema per family)

std::string format_double(double v);
void write_underestimation_csv(const UnderestimationTable& t,
                               const std::string& path);
void write_timing_csv(const std::vector<TimingRecord>& records,
                      const std::string& path);
void write_correlation_csv(const std::vector<CorrelationRow>& rows,
                           const std::string& path);
void write_tradeoff_csv(const ExperimentResult& result,
                        const std::string& path);
void write_relation_csv(const std::vector<CorrelationRow>& rows,
                        const std::string& path);
void write_delta_csv(const ExperimentResult& result, const std::string& path);

}  // namespace fairlens
