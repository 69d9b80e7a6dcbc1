#include "fairlens/individual.hpp"

#include <cmath>

namespace fairlens {

BenefitVector BenefitVector::from(const IntVector& yhat, const IntVector& y) {
  if (yhat.size() != y.size()) {
    throw MetricError("benefit vector: prediction/label length mismatch");
  }
  BenefitVector bv;
  bv.b.resize(yhat.size());
  for (Index i = 0; i < yhat.size(); ++i) {
    bv.b[i] = static_cast<double>(yhat[i] - y[i] + 1);
  }
  bv.mu = bv.b.size() > 0 ? bv.b.mean() : 0.0;
  return bv;
}

double general_entropy_index(const IntVector& yhat, const IntVector& y,
                             double alpha) {
  if (alpha == 0.0 || alpha == 1.0) {
    throw MetricError("GEI needs alpha outside {0,1}; use theil for alpha=1");
  }
  BenefitVector bv = BenefitVector::from(yhat, y);
  const Index n = bv.b.size();
  if (n == 0) throw MetricError("GEI on empty data");
  if (bv.mu == 0.0) throw MetricError("GEI undefined: all benefits are zero");
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    sum += std::pow(bv.b[i] / bv.mu, alpha) - 1.0;
  }
  return sum / (static_cast<double>(n) * alpha * (alpha - 1.0));
}

double theil_index(const IntVector& yhat, const IntVector& y) {
  BenefitVector bv = BenefitVector::from(yhat, y);
  const Index n = bv.b.size();
  if (n == 0) throw MetricError("Theil on empty data");
  if (bv.mu == 0.0) throw MetricError("Theil undefined: all benefits are zero");
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    double r = bv.b[i] / bv.mu;
    if (r > 0.0) sum += r * std::log(r);
  }
  return sum / static_cast<double>(n);
}

DrResult discriminative_risk(const Model& model, const Dataset& dataset,
                             const DrOptions& options) {
  std::vector<int> all(static_cast<std::size_t>(dataset.n()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return discriminative_risk(model, dataset, all, options);
}

DrResult discriminative_risk(const Model& model, const Dataset& dataset,
                             const std::vector<int>& rows,
                             const DrOptions& options) {
  if (options.draws < 1) throw MetricError("DR needs draws >= 1");
  if (rows.empty()) throw MetricError("DR on empty row set");

  DrResult res;
  IntVector base = model.predict(dataset.features, dataset.sensitive);
  for (int d = 0; d < options.draws; ++d) {
    std::uint64_t seed =
        options.draws == 1 ? options.seed : Rng::mix(options.seed, d);
    PerturbResult p = perturb(dataset, seed, options.policy);
    if (d == 0) res.unperturbable = p.unperturbable;
    if (p.unperturbable.size() ==
        static_cast<std::size_t>(dataset.n_attributes())) {
      throw MetricError("DR: no sensitive attribute can be perturbed");
    }
    IntVector flipped = model.predict(dataset.features, p.sensitive);
    for (int r : rows) {
      if (base[r] != flipped[r]) ++res.disagreements;
    }
  }
  res.rows_evaluated = static_cast<long>(rows.size()) * options.draws;
  res.value = static_cast<double>(res.disagreements) / res.rows_evaluated;
  return res;
}

LipschitzResult lipschitz_audit(const Vector& scores, const Matrix& features,
                                const LipschitzOptions& options) {
  const Index n = scores.size();
  if (n < 2) throw MetricError("Lipschitz audit needs n >= 2");
  if (features.rows() != n) throw MetricError("feature row count mismatch");

  LipschitzResult res;
  long violations = 0;

  auto eval_pair = [&](Index i, Index j) {
    double dx = (features.row(i) - features.row(j)).norm();
    double dy = std::abs(scores[i] - scores[j]);
    ++res.pairs_evaluated;
    if (dx == 0.0) {
      if (dy > 0.0) {
        ++res.hard_violations;
        ++violations;
      }
      return;
    }
    double ratio = dy / dx;
    res.constant = std::max(res.constant, ratio);
    if (ratio >= options.epsilon) ++violations;
  };

  if (n <= options.full_pair_limit) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) eval_pair(i, j);
    }
  } else {
    res.sampled = true;
    Rng rng(options.seed);
    for (long k = 0; k < options.pair_budget; ++k) {
      Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
      Index j = static_cast<Index>(
          rng.below(static_cast<std::uint64_t>(n - 1)));
      if (j >= i) ++j;
      eval_pair(i, j);
    }
  }
  res.violation_rate =
      static_cast<double>(violations) / static_cast<double>(res.pairs_evaluated);
  return res;
}

}  // namespace fairlens
