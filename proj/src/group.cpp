#include "fairlens/group.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace fairlens {

namespace {

inline bool event_holds(ProbeKind kind, int yhat, int y) {
  switch (kind) {
    case ProbeKind::DP:
    case ProbeKind::EOpp:
    case ProbeKind::FPRBalance:
      return yhat == 1;
    case ProbeKind::PP:
      return y == 1;
    case ProbeKind::NPVParity:
      return y == 0;
  }
  return false;
}

inline bool condition_holds(ProbeKind kind, int yhat, int y) {
  switch (kind) {
    case ProbeKind::DP:
      return true;
    case ProbeKind::EOpp:
      return y == 1;
    case ProbeKind::FPRBalance:
      return y == 0;
    case ProbeKind::PP:
      return yhat == 1;
    case ProbeKind::NPVParity:
      return yhat == 0;
  }
  return false;
}

struct CellCount {
  long conditioned = 0;
  long events = 0;
  bool empty() const { return conditioned == 0; }
  double rate() const { return static_cast<double>(events) / conditioned; }
};

// Each conditional probability is evaluated by walking its member rows; the
// extension forms re-evaluate every term as the formulas read, which is
// exactly the traversal cost the timing benchmarks measure.
CellCount count_rows(ProbeKind kind, const IntVector& yhat, const IntVector& y,
                     const std::vector<int>& rows) {
  CellCount c;
  for (int r : rows) {
    if (!condition_holds(kind, yhat[r], y[r])) continue;
    ++c.conditioned;
    if (event_holds(kind, yhat[r], y[r])) ++c.events;
  }
  return c;
}

// Pooled rate over every row the partition covers (the whole dataset for a
// full partition, the stratum for a restricted one).
CellCount count_all(ProbeKind kind, const IntVector& yhat, const IntVector& y,
                    const GroupPartition& part) {
  CellCount c;
  for (const auto& group : part.groups) {
    for (int r : group) {
      if (!condition_holds(kind, yhat[r], y[r])) continue;
      ++c.conditioned;
      if (event_holds(kind, yhat[r], y[r])) ++c.events;
    }
  }
  return c;
}

CellCount count_pooled_marginalised(ProbeKind kind, const IntVector& yhat,
                                    const IntVector& y,
                                    const GroupPartition& part) {
  CellCount c;
  for (int j = 0; j < part.n_groups(); ++j) {
    if (j == part.privileged) continue;
    CellCount g = count_rows(kind, yhat, y, part.groups[j]);
    c.conditioned += g.conditioned;
    c.events += g.events;
  }
  return c;
}

[[noreturn]] void throw_empty_cell(ProbeKind kind, const std::string& what) {
  throw MetricError("empty " + probe_family(kind) + " conditioning cell: " +
                    what);
}

using Clock = std::chrono::steady_clock;

}  // namespace

std::string probe_family(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::DP:
      return "dp";
    case ProbeKind::EOpp:
      return "eopp";
    case ProbeKind::FPRBalance:
      return "peq";
    case ProbeKind::PP:
      return "ppar";
    case ProbeKind::NPVParity:
      return "npv";
  }
  return "?";
}

std::string form_name(Form form) {
  switch (form) {
    case Form::Orig:
      return "orig";
    case Form::Binarised:
      return "binarised";
    case Form::Ext:
      return "ext";
    case Form::Alt:
      return "alt";
    case Form::ExtAvg:
      return "ext_avg";
    case Form::AltAvg:
      return "alt_avg";
  }
  return "?";
}

std::optional<Form> parse_form(const std::string& name) {
  for (Form f : {Form::Orig, Form::Binarised, Form::Ext, Form::Alt,
                 Form::ExtAvg, Form::AltAvg}) {
    if (form_name(f) == name) return f;
  }
  return std::nullopt;
}

double group_rate(ProbeKind kind, const IntVector& yhat, const IntVector& y,
                  const GroupPartition& part, int j) {
  if (j < 0 || j >= part.n_groups()) {
    throw MetricError("group index out of range");
  }
  CellCount c = count_rows(kind, yhat, y, part.groups[j]);
  if (c.empty()) throw_empty_cell(kind, "group " + std::to_string(j));
  return c.rate();
}

MetricResult probe_metric(ProbeKind kind, const IntVector& yhat,
                          const IntVector& y, const GroupPartition& part,
                          Form form, EmptyCellPolicy policy) {
  auto t0 = Clock::now();
  MetricResult res;
  res.kind = kind;
  res.form = form;
  res.name = probe_family(kind) + "." + form_name(form);

  const int g = part.n_groups();
  auto note_skip = [&](int j) {
    if (policy.hard_error) {
      throw_empty_cell(kind, "group " + std::to_string(j));
    }
    res.skipped_groups.push_back(j);
  };

  if (form == Form::Orig) {
    if (g != 2) {
      throw MetricError(res.name + " requires exactly 2 groups, got " +
                        std::to_string(g));
    }
    int marg = part.privileged == 0 ? 1 : 0;
    CellCount cm = count_rows(kind, yhat, y, part.groups[marg]);
    CellCount cp = count_rows(kind, yhat, y, part.groups[part.privileged]);
    if (cm.empty()) throw_empty_cell(kind, "marginalised group");
    if (cp.empty()) throw_empty_cell(kind, "privileged group");
    res.value = std::abs(cm.rate() - cp.rate());
    res.term_count = 1;
  } else if (form == Form::Binarised) {
    CellCount cm = count_pooled_marginalised(kind, yhat, y, part);
    CellCount cp = count_rows(kind, yhat, y, part.groups[part.privileged]);
    if (cm.empty()) throw_empty_cell(kind, "pooled marginalised groups");
    if (cp.empty()) throw_empty_cell(kind, "privileged group");
    res.value = std::abs(cm.rate() - cp.rate());
    res.term_count = 1;
  } else {
    std::vector<int> evaluable;
    for (int j = 0; j < g; ++j) {
      if (count_rows(kind, yhat, y, part.groups[j]).empty()) {
        note_skip(j);
      } else {
        evaluable.push_back(j);
      }
    }
    if (evaluable.size() < 2) {
      throw MetricError(res.name + ": fewer than 2 evaluable groups");
    }

    double max_term = 0.0;
    double sum_term = 0.0;
    if (form == Form::Ext || form == Form::ExtAvg) {
      for (int j : evaluable) {
        double rj = count_rows(kind, yhat, y, part.groups[j]).rate();
        double overall = count_all(kind, yhat, y, part).rate();
        double term = std::abs(rj - overall);
        max_term = std::max(max_term, term);
        sum_term += term;
        ++res.term_count;
      }
    } else {  // Alt, AltAvg
      for (std::size_t a = 0; a < evaluable.size(); ++a) {
        for (std::size_t b = a + 1; b < evaluable.size(); ++b) {
          double rj =
              count_rows(kind, yhat, y, part.groups[evaluable[a]]).rate();
          double rk =
              count_rows(kind, yhat, y, part.groups[evaluable[b]]).rate();
          double term = std::abs(rj - rk);
          max_term = std::max(max_term, term);
          sum_term += term;
          ++res.term_count;
        }
      }
    }
    bool avg = form == Form::ExtAvg || form == Form::AltAvg;
    // The true mean of the terms never exceeds their max; summation rounding
    // can push the quotient one ulp past it, so clamp.
    res.value = avg ? std::min(sum_term / static_cast<double>(res.term_count),
                               max_term)
                    : max_term;
    if (avg && !res.skipped_groups.empty()) {
      res.flags.push_back("divisor counts evaluated terms only");
    }
  }

  res.wall_time_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
          .count();
  return res;
}

MetricResult equalized_odds(const IntVector& yhat, const IntVector& y,
                            const GroupPartition& part, Form form,
                            EmptyCellPolicy policy) {
  auto t0 = Clock::now();
  MetricResult res;
  res.kind = ProbeKind::EOpp;
  res.form = form;
  res.name = "eo." + form_name(form);

  double sum = 0.0;
  int terms = 0;
  for (ProbeKind kind : {ProbeKind::EOpp, ProbeKind::FPRBalance}) {
    try {
      MetricResult side = probe_metric(kind, yhat, y, part, form, policy);
      sum += side.value;
      ++terms;
      res.term_count += side.term_count;
      for (int j : side.skipped_groups) res.skipped_groups.push_back(j);
      for (auto& f : side.flags) res.flags.push_back(f);
    } catch (const MetricError& e) {
      if (policy.hard_error) throw;
      res.flags.push_back(std::string("side skipped: ") + e.what());
    }
  }
  if (terms == 0) {
    throw MetricError("eo." + form_name(form) + ": neither side evaluable");
  }
  res.value = sum / terms;
  res.wall_time_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
          .count();
  return res;
}

DisparateImpactResult disparate_impact(const IntVector& yhat,
                                       const GroupPartition& part,
                                       double tau) {
  IntVector dummy = IntVector::Zero(yhat.size());
  CellCount cm = count_pooled_marginalised(ProbeKind::DP, yhat, dummy, part);
  CellCount cp =
      count_rows(ProbeKind::DP, yhat, dummy, part.groups[part.privileged]);
  if (cm.empty()) throw_empty_cell(ProbeKind::DP, "pooled marginalised groups");
  if (cp.empty()) throw_empty_cell(ProbeKind::DP, "privileged group");
  DisparateImpactResult res;
  res.rate_marginalised = cm.rate();
  res.rate_privileged = cp.rate();
  res.tau = tau;
  if (res.rate_privileged == 0.0) {
    throw MetricError("disparate impact undefined: privileged rate is 0");
  }
  res.ratio = res.rate_marginalised / res.rate_privileged;
  res.passed = res.ratio >= tau;
  return res;
}

MetricResult disparate_treatment(const IntVector& yhat,
                                 const GroupPartition& part) {
  IntVector dummy = IntVector::Zero(yhat.size());
  MetricResult res = probe_metric(ProbeKind::DP, yhat, dummy, part, Form::Ext);
  res.name = "dt";
  return res;
}

ConditionalSpResult conditional_statistical_parity(
    const IntVector& yhat, const GroupPartition& part,
    const std::vector<int>& strata) {
  if (strata.size() != static_cast<std::size_t>(part.n_rows)) {
    throw MetricError("stratum column length mismatch");
  }
  int n_strata = 0;
  for (int s : strata) n_strata = std::max(n_strata, s + 1);
  if (n_strata == 0) throw MetricError("no strata");

  ConditionalSpResult out;
  int evaluated = 0;
  for (int s = 0; s < n_strata; ++s) {
    // Restrict the partition to this stratum's rows.
    GroupPartition sub;
    sub.attribute = part.attribute;
    sub.privileged = part.privileged;
    sub.groups.resize(part.groups.size());
    sub.n_rows = 0;
    for (int j = 0; j < part.n_groups(); ++j) {
      for (int r : part.groups[j]) {
        if (strata[static_cast<std::size_t>(r)] == s) {
          sub.groups[static_cast<std::size_t>(j)].push_back(r);
          ++sub.n_rows;
        }
      }
    }
    StratumMetric m;
    m.stratum = s;
    try {
      IntVector dummy = IntVector::Zero(yhat.size());
      MetricResult r = probe_metric(ProbeKind::DP, yhat, dummy, sub, Form::Ext);
      m.value = r.value;
      m.skipped_groups = r.skipped_groups;
      ++evaluated;
    } catch (const MetricError&) {
      m.skipped = true;
      out.any_skipped = true;
    }
    out.strata.push_back(std::move(m));
  }
  if (evaluated == 0) {
    throw MetricError("csp: no stratum with 2 evaluable groups");
  }
  for (const auto& m : out.strata) {
    if (!m.skipped) out.max_value = std::max(out.max_value, m.value);
  }
  return out;
}

BglResult bounded_group_loss(const Vector& losses, const GroupPartition& part,
                             double xi) {
  if (losses.size() != part.n_rows) {
    throw MetricError("loss vector length mismatch");
  }
  BglResult res;
  res.xi = xi;
  res.passed = true;
  for (int j = 0; j < part.n_groups(); ++j) {
    const auto& rows = part.groups[j];
    if (rows.empty()) {
      res.group_losses.push_back(std::numeric_limits<double>::quiet_NaN());
      res.skipped_groups.push_back(j);
      continue;
    }
    double sum = 0.0;
    for (int r : rows) sum += losses[r];
    double mean = sum / static_cast<double>(rows.size());
    res.group_losses.push_back(mean);
    if (mean > xi) {
      res.offending_groups.push_back(j);
      res.passed = false;
    }
  }
  return res;
}

GammaSubgroupResult gamma_subgroup_fairness(const IntVector& yhat,
                                            const IntVector& y,
                                            const GroupPartition& part) {
  const Index n = yhat.size();
  long neg_total = 0;
  long neg_pos_pred = 0;
  for (Index r = 0; r < n; ++r) {
    if (y[r] == 0) {
      ++neg_total;
      if (yhat[r] == 1) ++neg_pos_pred;
    }
  }
  if (neg_total == 0) {
    throw MetricError("gamma subgroup fairness needs y=0 rows");
  }
  double base_fpr = static_cast<double>(neg_pos_pred) / neg_total;

  GammaSubgroupResult res;
  for (int j = 0; j < part.n_groups(); ++j) {
    long g_neg = 0, g_neg_pos = 0;
    for (int r : part.groups[j]) {
      if (y[r] == 0) {
        ++g_neg;
        if (yhat[r] == 1) ++g_neg_pos;
      }
    }
    if (g_neg == 0) {
      res.skipped_groups.push_back(j);
      continue;
    }
    GammaSubgroupResult::Entry e;
    e.group = j;
    e.alpha = static_cast<double>(g_neg) / static_cast<double>(n);
    e.beta = std::abs(base_fpr - static_cast<double>(g_neg_pos) / g_neg);
    e.product = e.alpha * e.beta;
    res.max_product = std::max(res.max_product, e.product);
    res.entries.push_back(e);
  }
  if (res.entries.empty()) {
    throw MetricError("gamma subgroup fairness: every group lacked y=0 rows");
  }
  return res;
}

MinimaxResult minimax_gap(const std::vector<IntVector>& candidates,
                          const IntVector& y, const GroupPartition& part) {
  if (candidates.empty()) throw MetricError("minimax gap needs >=1 candidate");
  MinimaxResult res;
  res.best_max_error = std::numeric_limits<double>::infinity();
  for (const auto& yhat : candidates) {
    if (yhat.size() != y.size()) {
      throw MetricError("candidate prediction length mismatch");
    }
    MinimaxResult::Candidate c;
    c.max_error = 0.0;
    for (int j = 0; j < part.n_groups(); ++j) {
      const auto& rows = part.groups[j];
      if (rows.empty()) {
        c.group_errors.push_back(std::numeric_limits<double>::quiet_NaN());
        if (res.candidates.empty()) res.skipped_groups.push_back(j);
        continue;
      }
      long wrong = 0;
      for (int r : rows) {
        if (yhat[r] != y[r]) ++wrong;
      }
      double err = static_cast<double>(wrong) / rows.size();
      c.group_errors.push_back(err);
      c.max_error = std::max(c.max_error, err);
    }
    res.best_max_error = std::min(res.best_max_error, c.max_error);
    res.candidates.push_back(std::move(c));
  }
  for (auto& c : res.candidates) c.gap = c.max_error - res.best_max_error;
  return res;
}

}  // namespace fairlens
