#include "fairlens/hfm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairlens {

namespace {

constexpr long kUnlimited = std::numeric_limits<long>::max();

// Min squared distance from row p to the rows in `to`.
double min_sq_dist(const Matrix& points, int p, const std::vector<int>& to) {
  double best = std::numeric_limits<double>::infinity();
  const auto row = points.row(p);
  for (int q : to) {
    double d = (row - points.row(q)).squaredNorm();
    if (d < best) best = d;
  }
  return best;
}

// Anchor rows for one (group, direction): the whole group when the budget
// covers it, otherwise the first `budget` entries of a seeded permutation.
// Permutations depend only on the seed, so anchor sets are nested in the
// budget.
std::vector<int> anchor_rows(const std::vector<int>& group, long budget,
                             std::uint64_t seed) {
  if (budget >= static_cast<long>(group.size())) return group;
  std::vector<int> perm = group;
  Rng rng(seed);
  rng.shuffle(perm);
  perm.resize(static_cast<std::size_t>(budget));
  return perm;
}

// Per-anchor min distances, filled into independent slots so the result does
// not depend on the parallel schedule.
std::vector<double> min_dists(const Matrix& points,
                              const std::vector<int>& from,
                              const std::vector<int>& to, int threads) {
  if (to.empty()) throw MetricError("hfm: empty complement side");
  std::vector<double> out(from.size());
  parallel_for(static_cast<Index>(from.size()), threads, [&](Index i) {
    out[static_cast<std::size_t>(i)] =
        min_sq_dist(points, from[static_cast<std::size_t>(i)], to);
  });
  return out;
}

double directed_term(const Matrix& points, const std::vector<int>& from,
                     const std::vector<int>& to, long budget,
                     std::uint64_t seed, int threads) {
  if (from.empty()) throw MetricError("hfm: empty group side");
  std::vector<int> anchors = anchor_rows(from, budget, seed);
  std::vector<double> d = min_dists(points, anchors, to, threads);
  double best = 0.0;
  for (double v : d) best = std::max(best, v);
  return std::sqrt(best);
}

// Sum over the group of nearest-complement distances, estimated from the
// anchor subsample when the budget is partial.
double avg_sum_term(const Matrix& points, const std::vector<int>& from,
                    const std::vector<int>& to, long budget,
                    std::uint64_t seed, int threads) {
  if (from.empty()) return 0.0;
  std::vector<int> anchors = anchor_rows(from, budget, seed);
  std::vector<double> d = min_dists(points, anchors, to, threads);
  double sum = 0.0;
  for (double v : d) sum += std::sqrt(v);
  if (anchors.size() == from.size()) return sum;
  return sum / static_cast<double>(anchors.size()) *
         static_cast<double>(from.size());
}

std::uint64_t direction_seed(std::uint64_t seed, int attribute, int group,
                             int direction) {
  return Rng::mix(seed, (static_cast<std::uint64_t>(attribute) << 24) ^
                            (static_cast<std::uint64_t>(group) << 2) ^
                            static_cast<std::uint64_t>(direction));
}

// g for one attribute, max flavour: max over groups of the directed term
// from the group to its complement.
double attribute_g_max(const Matrix& points, const GroupPartition& part,
                       long budget, std::uint64_t seed, int threads) {
  double g = 0.0;
  bool any = false;
  for (int j = 0; j < part.n_groups(); ++j) {
    if (part.groups[j].empty()) continue;
    std::vector<int> comp = part.complement(j);
    if (comp.empty()) continue;
    g = std::max(g, directed_term(points, part.groups[j], comp, budget,
                                  direction_seed(seed, part.attribute, j, 0),
                                  threads));
    any = true;
  }
  if (!any) throw MetricError("hfm: attribute has a single nonempty group");
  return g;
}

// g for one attribute, avg flavour: (1/n) * sum over all points of the
// distance to the nearest complement point.
double attribute_g_avg(const Matrix& points, const GroupPartition& part,
                       long budget, std::uint64_t seed, int threads) {
  double sum = 0.0;
  bool any = false;
  for (int j = 0; j < part.n_groups(); ++j) {
    if (part.groups[j].empty()) continue;
    std::vector<int> comp = part.complement(j);
    if (comp.empty()) continue;
    sum += avg_sum_term(points, part.groups[j], comp, budget,
                        direction_seed(seed, part.attribute, j, 0), threads);
    any = true;
  }
  if (!any) throw MetricError("hfm: attribute has a single nonempty group");
  return sum / static_cast<double>(part.n_rows);
}

struct GPair {
  double g_f;
  double g_y;
};

GPair compute_g(const Dataset& dataset, const PredictionSet& preds,
                const std::vector<int>& attributes, HfmVersion version,
                long budget, std::uint64_t seed, const HfmOptions& options) {
  if (attributes.empty()) throw MetricError("hfm needs >= 1 attribute");
  Matrix pf = augment(dataset.features, preds.hard, options.outcome_weight);
  Matrix py = augment(dataset.features, dataset.labels, options.outcome_weight);

  GPair out{0.0, 0.0};
  if (version == HfmVersion::Avg) {
    for (int a : attributes) {
      GroupPartition part = partition(dataset, a);
      out.g_f += attribute_g_avg(pf, part, budget, seed, options.threads);
      out.g_y += attribute_g_avg(py, part, budget, seed, options.threads);
    }
    out.g_f /= static_cast<double>(attributes.size());
    out.g_y /= static_cast<double>(attributes.size());
  } else {
    for (int a : attributes) {
      GroupPartition part = partition(dataset, a);
      out.g_f =
          std::max(out.g_f, attribute_g_max(pf, part, budget, seed,
                                            options.threads));
      out.g_y =
          std::max(out.g_y, attribute_g_max(py, part, budget, seed,
                                            options.threads));
    }
  }
  return out;
}

void require_positive_denominator(double g_y) {
  if (g_y <= 0.0) {
    throw MetricError(
        "hfm undefined: the label-augmented groups coincide (g_y = 0); "
        "every group point has a zero-distance complement counterpart");
  }
}

}  // namespace

Matrix augment(const Matrix& features, const IntVector& outcome,
               double weight) {
  if (features.rows() != outcome.size()) {
    throw MetricError("augment: outcome length mismatch");
  }
  Matrix out(features.rows(), features.cols() + 1);
  out.leftCols(features.cols()) = features;
  for (Index i = 0; i < outcome.size(); ++i) {
    out(i, features.cols()) = weight * static_cast<double>(outcome[i]);
  }
  return out;
}

double directed_maxmin(const Matrix& points, const std::vector<int>& from,
                       const std::vector<int>& to, int threads) {
  return directed_term(points, from, to, kUnlimited, 0, threads);
}

double bidirectional_maxmin(const Matrix& points, const std::vector<int>& a,
                            const std::vector<int>& b, int threads) {
  return std::max(directed_maxmin(points, a, b, threads),
                  directed_maxmin(points, b, a, threads));
}

HfmResult hfm_prev(const Dataset& dataset, const PredictionSet& preds,
                   int attribute, const HfmOptions& options) {
  GroupPartition part = partition(dataset, attribute);
  if (part.n_groups() != 2) {
    throw MetricError("hfm.prev requires a binary attribute; '" +
                      dataset.attributes[attribute].name + "' has " +
                      std::to_string(part.n_groups()) + " values");
  }
  const auto& d1 = part.groups[part.privileged];
  std::vector<int> rest = part.complement(part.privileged);

  Matrix pf = augment(dataset.features, preds.hard, options.outcome_weight);
  Matrix py = augment(dataset.features, dataset.labels, options.outcome_weight);

  HfmResult res;
  res.version = HfmVersion::Prev;
  res.g_f = bidirectional_maxmin(pf, d1, rest, options.threads);
  res.g_y = bidirectional_maxmin(py, d1, rest, options.threads);
  require_positive_denominator(res.g_y);
  res.value = res.g_f / res.g_y - 1.0;
  return res;
}

HfmResult hfm_max(const Dataset& dataset, const PredictionSet& preds,
                  const std::vector<int>& attributes,
                  const HfmOptions& options) {
  GPair g = compute_g(dataset, preds, attributes, HfmVersion::Max, kUnlimited,
                      0, options);
  HfmResult res;
  res.version = HfmVersion::Max;
  res.g_f = g.g_f;
  res.g_y = g.g_y;
  require_positive_denominator(res.g_y);
  res.value = std::log(res.g_f / res.g_y);
  return res;
}

HfmResult hfm_avg(const Dataset& dataset, const PredictionSet& preds,
                  const std::vector<int>& attributes,
                  const HfmOptions& options) {
  GPair g = compute_g(dataset, preds, attributes, HfmVersion::Avg, kUnlimited,
                      0, options);
  HfmResult res;
  res.version = HfmVersion::Avg;
  res.g_f = g.g_f;
  res.g_y = g.g_y;
  require_positive_denominator(res.g_y);
  res.value = std::log(res.g_f / res.g_y);
  return res;
}

HfmResult hfm_approx(const Dataset& dataset, const PredictionSet& preds,
                     const std::vector<int>& attributes, HfmVersion version,
                     long budget, std::uint64_t seed,
                     const HfmOptions& options) {
  if (budget < 1) throw MetricError("hfm approximation needs budget >= 1");

  HfmResult res;
  res.version = version;
  res.exact = false;
  res.budget = budget;

  if (version == HfmVersion::Prev) {
    if (attributes.size() != 1) {
      throw MetricError("hfm.prev approximation takes exactly one attribute");
    }
    GroupPartition part = partition(dataset, attributes[0]);
    if (part.n_groups() != 2) {
      throw MetricError("hfm.prev requires a binary attribute");
    }
    const auto& d1 = part.groups[part.privileged];
    std::vector<int> rest = part.complement(part.privileged);
    Matrix pf = augment(dataset.features, preds.hard, options.outcome_weight);
    Matrix py =
        augment(dataset.features, dataset.labels, options.outcome_weight);
    auto g_of = [&](const Matrix& p) {
      double fwd = directed_term(p, d1, rest, budget,
                                 direction_seed(seed, part.attribute, 0, 0),
                                 options.threads);
      double bwd = directed_term(p, rest, d1, budget,
                                 direction_seed(seed, part.attribute, 1, 1),
                                 options.threads);
      return std::max(fwd, bwd);
    };
    res.g_f = g_of(pf);
    res.g_y = g_of(py);
    require_positive_denominator(res.g_y);
    res.value = res.g_f / res.g_y - 1.0;
    return res;
  }

  GPair g =
      compute_g(dataset, preds, attributes, version, budget, seed, options);
  res.g_f = g.g_f;
  res.g_y = g.g_y;
  require_positive_denominator(res.g_y);
  res.value = std::log(res.g_f / res.g_y);
  return res;
}

}  // namespace fairlens
