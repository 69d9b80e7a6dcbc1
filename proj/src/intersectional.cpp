#include "fairlens/intersectional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairlens {

CountTable CountTable::build(const IntVector& outcome,
                             const GroupPartition& part, double kappa) {
  if (kappa < 0.0) throw MetricError("smoothing constant must be >= 0");
  CountTable t;
  t.kappa = kappa;
  t.n_group.resize(part.groups.size(), 0);
  t.n_positive.resize(part.groups.size(), 0);
  for (int j = 0; j < part.n_groups(); ++j) {
    for (int r : part.groups[j]) {
      ++t.n_group[j];
      if (outcome[r] == 1) ++t.n_positive[j];
    }
    if (t.n_group[j] == 0 || t.n_positive[j] == 0 ||
        t.n_positive[j] == t.n_group[j]) {
      t.has_zero_cell = true;
    }
  }
  return t;
}

double CountTable::smoothed(int outcome, int group) const {
  long n_y = outcome == 1 ? n_positive[group] : n_group[group] - n_positive[group];
  return (static_cast<double>(n_y) + kappa) /
         (static_cast<double>(n_group[group]) + 2.0 * kappa);
}

EdfResult empirical_differential_fairness(const IntVector& yhat,
                                          const GroupPartition& part,
                                          double kappa) {
  if (part.n_groups() < 2) throw MetricError("EDF needs >= 2 groups");
  CountTable t = CountTable::build(yhat, part, kappa);
  if (kappa == 0.0 && t.has_zero_cell) {
    throw MetricError("EDF with kappa = 0 hit an empty count cell; "
                      "set kappa > 0 to smooth");
  }
  EdfResult res;
  res.smoothed_zero_cell = kappa > 0.0 && t.has_zero_cell;
  for (int y = 0; y <= 1; ++y) {
    for (int a = 0; a < part.n_groups(); ++a) {
      for (int b = a + 1; b < part.n_groups(); ++b) {
        double gap =
            std::abs(std::log(t.smoothed(y, a)) - std::log(t.smoothed(y, b)));
        res.epsilon = std::max(res.epsilon, gap);
      }
    }
  }
  return res;
}

namespace {

// Per-group quantity for the min-max family; NaN marks "undefined, skip".
double group_quantity(RatioKind kind, const IntVector& yhat, const IntVector& y,
                      const std::vector<int>& rows) {
  constexpr double undefined = std::numeric_limits<double>::quiet_NaN();
  long denom = 0, numer = 0;
  switch (kind) {
    case RatioKind::DPR:
    case RatioKind::CSPR:
      for (int r : rows) {
        ++denom;
        if (yhat[r] == 1) ++numer;
      }
      break;
    case RatioKind::EOppR:
      for (int r : rows) {
        if (y[r] == 1) {
          ++denom;
          if (yhat[r] == 1) ++numer;
        }
      }
      break;
    case RatioKind::GBR_INT: {
      long pred = 0, actual = 0, total = 0;
      for (int r : rows) {
        ++total;
        if (yhat[r] == 1) ++pred;
        if (y[r] == 1) ++actual;
      }
      if (total == 0 || actual == 0) return undefined;
      return (static_cast<double>(pred) / total) /
             (static_cast<double>(actual) / total);
    }
  }
  if (denom == 0) return undefined;
  return static_cast<double>(numer) / denom;
}

double min_over_max(const std::vector<double>& qs) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double q : qs) {
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (hi <= 0.0) {
    throw MetricError("min-max ratio undefined: max group quantity is 0");
  }
  return lo / hi;
}

}  // namespace

RatioResult minmax_ratio(RatioKind kind, const IntVector& yhat,
                         const IntVector& y, const GroupPartition& part,
                         const std::vector<int>* strata) {
  RatioResult res;
  if (kind == RatioKind::CSPR) {
    if (strata == nullptr) throw MetricError("CSPR needs a stratum column");
    if (strata->size() != static_cast<std::size_t>(part.n_rows)) {
      throw MetricError("stratum column length mismatch");
    }
    int n_strata = 0;
    for (int s : *strata) n_strata = std::max(n_strata, s + 1);
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n_strata; ++s) {
      std::vector<double> qs;
      for (int j = 0; j < part.n_groups(); ++j) {
        std::vector<int> rows;
        for (int r : part.groups[j]) {
          if ((*strata)[static_cast<std::size_t>(r)] == s) rows.push_back(r);
        }
        double q = group_quantity(RatioKind::CSPR, yhat, y, rows);
        if (!std::isnan(q)) qs.push_back(q);
      }
      if (qs.size() < 2) {
        res.skipped_strata.push_back(s);
        res.flagged = true;
        continue;
      }
      try {
        worst = std::min(worst, min_over_max(qs));
      } catch (const MetricError&) {
        res.skipped_strata.push_back(s);
        res.flagged = true;
      }
    }
    if (!std::isfinite(worst)) {
      throw MetricError("CSPR: no evaluable stratum");
    }
    res.value = worst;
    return res;
  }

  std::vector<double> qs;
  for (int j = 0; j < part.n_groups(); ++j) {
    double q = group_quantity(kind, yhat, y, part.groups[j]);
    if (std::isnan(q)) {
      res.skipped_groups.push_back(j);
      res.flagged = true;
    } else {
      qs.push_back(q);
    }
  }
  if (qs.empty()) throw MetricError("min-max ratio: every group skipped");
  res.value = min_over_max(qs);
  return res;
}

double intersectional_disparate_impact(const IntVector& yhat,
                                       const GroupPartition& part) {
  if (part.n_groups() < 2) throw MetricError("IDI needs >= 2 groups");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int j = 0; j < part.n_groups(); ++j) {
    const auto& rows = part.groups[j];
    long pos = 0;
    for (int r : rows) {
      if (yhat[r] == 1) ++pos;
    }
    if (rows.empty() || pos == 0) {
      throw MetricError("IDI undefined: group " + std::to_string(j) +
                        " has zero positive rate");
    }
    double rate = static_cast<double>(pos) / rows.size();
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  return lo / hi;
}

MultiaccResult multiaccuracy_check(const Vector& scores, const IntVector& y,
                                   const GroupPartition& part, double alpha) {
  if (scores.size() != part.n_rows) {
    throw MetricError("multiaccuracy: score length mismatch");
  }
  MultiaccResult res;
  res.alpha = alpha;
  const double n = static_cast<double>(part.n_rows);
  for (int j = 0; j < part.n_groups(); ++j) {
    const auto& rows = part.groups[j];
    double sum = 0.0;
    for (int r : rows) sum += scores[r] - static_cast<double>(y[r]);
    double residual = rows.empty() ? 0.0 : std::abs(sum) / n;
    res.residuals.push_back(residual);
    res.max_residual = std::max(res.max_residual, residual);
  }
  res.passed = res.max_residual <= alpha;
  return res;
}

CalibrationResult calibration_by_group(const Vector& scores, const IntVector& y,
                                       const GroupPartition& part, int bins) {
  if (!(bins >= 1)) throw MetricError("calibration needs bins >= 1");
  if (scores.size() != part.n_rows) {
    throw MetricError("calibration: score length mismatch");
  }
  CalibrationResult res;
  res.bins = bins;
  const int g = part.n_groups();
  res.rates = Matrix::Constant(bins, g, std::numeric_limits<double>::quiet_NaN());
  res.counts = IntMatrix::Zero(bins, g);
  Matrix positives = Matrix::Zero(bins, g);

  for (int j = 0; j < g; ++j) {
    for (int r : part.groups[j]) {
      int b = std::min(static_cast<int>(scores[r] * bins), bins - 1);
      res.counts(b, j) += 1;
      positives(b, j) += static_cast<double>(y[r]);
    }
  }
  if (g < 2) res.flags.push_back("single group: gap 0 by convention");
  for (int b = 0; b < bins; ++b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int populated = 0;
    for (int j = 0; j < g; ++j) {
      if (res.counts(b, j) == 0) continue;
      double rate = positives(b, j) / res.counts(b, j);
      res.rates(b, j) = rate;
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
      ++populated;
    }
    if (populated >= 2) {
      res.max_gap = std::max(res.max_gap, hi - lo);
    } else if (populated < g) {
      res.flags.push_back("bin " + std::to_string(b) + " has empty cells");
    }
  }
  return res;
}

double worst_case_log_loss(const Vector& scores, const IntVector& y,
                           const GroupPartition& part) {
  if (scores.size() != part.n_rows) {
    throw MetricError("log loss: score length mismatch");
  }
  constexpr double eps = 1e-12;
  double worst = 0.0;
  bool any = false;
  for (int j = 0; j < part.n_groups(); ++j) {
    const auto& rows = part.groups[j];
    if (rows.empty()) continue;
    double sum = 0.0;
    for (int r : rows) {
      double s = std::clamp(scores[r], eps, 1.0 - eps);
      sum += y[r] == 1 ? -std::log(s) : -std::log(1.0 - s);
    }
    worst = std::max(worst, sum / rows.size());
    any = true;
  }
  if (!any) throw MetricError("log loss: no nonempty group");
  return worst;
}

}  // namespace fairlens
