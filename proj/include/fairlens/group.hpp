#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairlens/dataset.hpp"

namespace fairlens {

/// The five probe kinds factor DP / EOpp / predictive-equality / PP / NPV
/// parity into one (event, condition) pair over (yhat, y):
///   DP          event yhat=1   condition (none)
///   EOpp        event yhat=1   condition y=1
///   FPRBalance  event yhat=1   condition y=0     (predictive equality)
///   PP          event y=1      condition yhat=1
///   NPVParity   event y=0      condition yhat=0
enum class ProbeKind { DP, EOpp, FPRBalance, PP, NPVParity };

enum class Form { Orig, Binarised, Ext, Alt, ExtAvg, AltAvg };

std::string probe_family(ProbeKind kind);  // dp, eopp, peq, ppar, npv
std::string form_name(Form form);          // orig, binarised, ext, ...
std::optional<Form> parse_form(const std::string& name);

struct MetricResult {
  std::string name;  // stable identifier, e.g. "dp.alt"
  ProbeKind kind = ProbeKind::DP;
  Form form = Form::Orig;
  double value = 0.0;
  std::vector<int> skipped_groups;   // value codes with empty condition cells
  std::vector<std::string> flags;
  long term_count = 0;               // |.|-terms evaluated
  std::int64_t wall_time_ns = 0;
};

struct EmptyCellPolicy {
  bool hard_error = false;  // default: skip empty cells and flag them
};

/// Empirical frequency of the probe's event among rows of group j that
/// satisfy its condition. Throws MetricError on an empty conditioning cell.
double group_rate(ProbeKind kind, const IntVector& yhat, const IntVector& y,
                  const GroupPartition& part, int j);

/// One probe metric in the requested form. orig requires exactly two groups;
/// the other forms need at least two groups with nonempty condition cells.
/// Empty cells are skipped and flagged (or rejected under hard_error); the
/// average forms divide by the number of evaluated terms.
MetricResult probe_metric(ProbeKind kind, const IntVector& yhat,
                          const IntVector& y, const GroupPartition& part,
                          Form form, EmptyCellPolicy policy = {});

/// EO = mean of the EOpp and predictive-equality terms in the given form
/// (both evaluable: half their sum, matching the two-group
/// 0.5*(|dTPR| + |dFPR|) display; one side unevaluable: that side is
/// skipped with a flag).
MetricResult equalized_odds(const IntVector& yhat, const IntVector& y,
                            const GroupPartition& part, Form form,
                            EmptyCellPolicy policy = {});

struct DisparateImpactResult {
  double ratio = 0.0;  // marginalised rate / privileged rate
  double rate_marginalised = 0.0;
  double rate_privileged = 0.0;
  double tau = 0.8;
  bool passed = false;  // ratio >= tau
};

/// 80%-rule ratio with binarised pooling of the non-privileged groups.
/// A zero privileged rate makes the ratio undefined (error).
DisparateImpactResult disparate_impact(const IntVector& yhat,
                                       const GroupPartition& part,
                                       double tau = 0.8);

/// max_j |P(yhat=1 | a=j) - P(yhat=1)|; same math as probe_metric(DP, Ext),
/// reported under its own name.
MetricResult disparate_treatment(const IntVector& yhat,
                                 const GroupPartition& part);

struct StratumMetric {
  int stratum = 0;
  bool skipped = false;
  double value = 0.0;
  std::vector<int> skipped_groups;
};

struct ConditionalSpResult {
  double max_value = 0.0;
  std::vector<StratumMetric> strata;
  bool any_skipped = false;
};

/// Within each caller-supplied stratum, probe_metric(DP, Ext) over the
/// stratum's rows; the result is the maximum across evaluable strata.
ConditionalSpResult conditional_statistical_parity(
    const IntVector& yhat, const GroupPartition& part,
    const std::vector<int>& strata);

struct BglResult {
  std::vector<double> group_losses;   // NaN for skipped groups
  std::vector<int> skipped_groups;
  std::vector<int> offending_groups;  // loss > xi
  double xi = 0.0;
  bool passed = false;
};

/// Per-group expected losses; pass iff all evaluable groups are <= xi.
/// Default loss is |y - score|, which is 1-Lipschitz as the definition
/// requires; callers may supply any per-row loss in [0,1].
BglResult bounded_group_loss(const Vector& losses, const GroupPartition& part,
                             double xi);

struct GammaSubgroupResult {
  struct Entry {
    int group = 0;
    double alpha = 0.0;  // P(a=j, y=0)
    double beta = 0.0;   // |P(yhat=1|y=0) - P(yhat=1|a=j, y=0)|
    double product = 0.0;
  };
  std::vector<Entry> entries;
  std::vector<int> skipped_groups;  // groups without y=0 rows
  double max_product = 0.0;         // the tightest gamma that passes
};

GammaSubgroupResult gamma_subgroup_fairness(const IntVector& yhat,
                                            const IntVector& y,
                                            const GroupPartition& part);

struct MinimaxResult {
  struct Candidate {
    std::vector<double> group_errors;  // NaN for empty groups
    double max_error = 0.0;
    double gap = 0.0;  // max_error - best max_error over candidates
  };
  std::vector<Candidate> candidates;
  std::vector<int> skipped_groups;
  double best_max_error = 0.0;
};

/// Max group error per candidate and each candidate's gamma-gap to the
/// minimax-best candidate.
MinimaxResult minimax_gap(const std::vector<IntVector>& candidates,
                          const IntVector& y, const GroupPartition& part);

}  // namespace fairlens
