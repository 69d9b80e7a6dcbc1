#pragma once

#include "fairlens/dataset.hpp"

namespace fairlens {

enum class HfmVersion { Prev, Max, Avg };

struct HfmOptions {
  double outcome_weight = 1.0;  // weight of the appended outcome coordinate
  int threads = 1;
};

struct HfmResult {
  HfmVersion version = HfmVersion::Prev;
  double value = 0.0;  // prev: g_f/g_y - 1;  max/avg: ln(g_f/g_y)
  double g_f = 0.0;
  double g_y = 0.0;
  bool exact = true;
  long budget = 0;  // anchor budget, 0 for the exact path
};

/// Features with one outcome coordinate appended (outcome * weight).
Matrix augment(const Matrix& features, const IntVector& outcome,
               double weight);

/// max_{p in A} min_{q in B} d(p, q) over rows of the augmented matrix.
double directed_maxmin(const Matrix& points, const std::vector<int>& from,
                       const std::vector<int>& to, int threads = 1);

/// Hausdorff distance: max of the two directed max-min terms. Symmetric,
/// zero iff every point has a zero-distance counterpart across the sets.
double bidirectional_maxmin(const Matrix& points, const std::vector<int>& a,
                            const std::vector<int>& b, int threads = 1);

/// Previous (bi-valued) version: g_f / g_y - 1 with g the Hausdorff distance
/// between the privileged group and its complement. The attribute must be
/// binary and the label-augmented groups must not coincide (g_y > 0).
HfmResult hfm_prev(const Dataset& dataset, const PredictionSet& preds,
                   int attribute, const HfmOptions& options = {});

/// Maximal version over the given attributes: per attribute the max over
/// groups of the directed max-min to the group's complement, max across
/// attributes; value = ln(g_f / g_y).
HfmResult hfm_max(const Dataset& dataset, const PredictionSet& preds,
                  const std::vector<int>& attributes,
                  const HfmOptions& options = {});

/// Average version: per attribute the mean over all points of the distance
/// to the nearest complement point (single 1/n over every group's sum),
/// averaged across attributes; value = ln(g_f / g_y).
HfmResult hfm_avg(const Dataset& dataset, const PredictionSet& preds,
                  const std::vector<int>& attributes,
                  const HfmOptions& options = {});

/// Anchor-subsampled estimate: each directed term evaluates only `budget`
/// seeded anchor points per group per direction while the inner min runs
/// over the full complement. Nested by construction: a larger budget keeps
/// all previous anchors, so estimated max terms never decrease, and a budget
/// covering every group reproduces the exact value. This scheme is a
/// practical substitute, not a published algorithm.
HfmResult hfm_approx(const Dataset& dataset, const PredictionSet& preds,
                     const std::vector<int>& attributes, HfmVersion version,
                     long budget, std::uint64_t seed,
                     const HfmOptions& options = {});

}  // namespace fairlens
