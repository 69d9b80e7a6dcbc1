#pragma once

#include "fairlens/dataset.hpp"

namespace fairlens {

/// Per-group outcome counts with additive smoothing. Smoothed rate for
/// outcome y in group g is (N_{y,g} + kappa) / (N_g + 2*kappa).
struct CountTable {
  std::vector<long> n_group;
  std::vector<long> n_positive;
  double kappa = 0.0;
  bool has_zero_cell = false;

  static CountTable build(const IntVector& outcome, const GroupPartition& part,
                          double kappa);
  double smoothed(int outcome, int group) const;
};

struct EdfResult {
  double epsilon = 0.0;
  bool smoothed_zero_cell = false;  // some raw count was 0 and kappa kicked in
};

/// Empirical differential fairness: the worst |log rate ratio| across
/// outcome values and group pairs. kappa = 0 demands every cell populated.
EdfResult empirical_differential_fairness(const IntVector& yhat,
                                          const GroupPartition& part,
                                          double kappa = 0.5);

enum class RatioKind { DPR, EOppR, CSPR, GBR_INT };

struct RatioResult {
  double value = 1.0;  // min over groups / max over groups, in [0, 1]
  std::vector<int> skipped_groups;
  std::vector<int> skipped_strata;  // CSPR only
  bool flagged = false;
};

/// Worst-case min-max ratio of the kind's per-group quantity. CSPR needs the
/// stratum column and takes the worst ratio across evaluable strata.
RatioResult minmax_ratio(RatioKind kind, const IntVector& yhat,
                         const IntVector& y, const GroupPartition& part,
                         const std::vector<int>* strata = nullptr);

/// Intersectional disparate impact: min over ordered group pairs of the
/// positive-rate ratio, i.e. (min group rate) / (max group rate). A zero
/// group rate is an error naming the group.
double intersectional_disparate_impact(const IntVector& yhat,
                                       const GroupPartition& part);

struct MultiaccResult {
  std::vector<double> residuals;  // |E[1(a=j) * (score - y)]| per group
  double max_residual = 0.0;
  double alpha = 0.0;
  bool passed = false;
};

/// Multiaccuracy over the subgroup-indicator class (and its negations,
/// which carry the same absolute residual).
MultiaccResult multiaccuracy_check(const Vector& scores, const IntVector& y,
                                   const GroupPartition& part, double alpha);

struct CalibrationResult {
  int bins = 0;
  Matrix rates;       // bins x groups, NaN where a cell is empty
  IntMatrix counts;   // bins x groups
  double max_gap = 0.0;
  std::vector<std::string> flags;
};

/// Per score-bin, per group empirical P(y=1); the headline value is the max
/// over bins of the largest pairwise group gap.
CalibrationResult calibration_by_group(const Vector& scores, const IntVector& y,
                                       const GroupPartition& part,
                                       int bins = 10);

/// Worst-case per-group log loss, reported as a diagnostic only.
double worst_case_log_loss(const Vector& scores, const IntVector& y,
                           const GroupPartition& part);

}  // namespace fairlens
