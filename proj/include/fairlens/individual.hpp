#pragma once

#include "fairlens/dataset.hpp"
#include "fairlens/model.hpp"

namespace fairlens {

/// Benefits b_i = yhat_i - y_i + 1, each in {0, 1, 2}.
struct BenefitVector {
  Vector b;
  double mu = 0.0;

  static BenefitVector from(const IntVector& yhat, const IntVector& y);
};

/// Generalised entropy index over benefits, alpha not in {0, 1}.
/// Zero iff all benefits are equal; errors when the mean benefit is zero.
double general_entropy_index(const IntVector& yhat, const IntVector& y,
                             double alpha);

/// Theil index (the alpha -> 1 entropy case), natural log, 0*ln 0 = 0.
double theil_index(const IntVector& yhat, const IntVector& y);

struct DrOptions {
  std::uint64_t seed = 0;
  PerturbPolicy policy = PerturbPolicy::flip_all();
  int draws = 1;  // mean over `draws` independent perturbations
};

struct DrResult {
  double value = 0.0;             // in [0, 1]
  long disagreements = 0;         // over n * draws rows
  long rows_evaluated = 0;
  std::vector<int> unperturbable;
};

/// Empirical mean of 1(f(x,a) != f(x,a~)) with a~ drawn by perturb().
/// Needs a re-predictable model; prediction files cannot compute this.
DrResult discriminative_risk(const Model& model, const Dataset& dataset,
                             const DrOptions& options = {});

/// Same, restricted to a subset of rows (used per CV test fold).
DrResult discriminative_risk(const Model& model, const Dataset& dataset,
                             const std::vector<int>& rows,
                             const DrOptions& options);

struct LipschitzOptions {
  long pair_budget = 200000;    // sampled pairs when n > full_pair_limit
  long full_pair_limit = 2000;  // full O(n^2) enumeration up to this n
  std::uint64_t seed = 0;
  double epsilon = 1.0;  // ratio threshold for the (epsilon, delta) form
  int threads = 1;
};

struct LipschitzResult {
  double constant = 0.0;     // max d_y / d_x over evaluated pairs
  long hard_violations = 0;  // d_x = 0 with d_y > 0
  double violation_rate = 0.0;  // fraction of pairs with ratio >= epsilon
  long pairs_evaluated = 0;
  bool sampled = false;
};

/// Diagnostic audit of the Lipschitz condition: d_y = |score difference|,
/// d_x = Euclidean distance over preprocessed features.
LipschitzResult lipschitz_audit(const Vector& scores, const Matrix& features,
                                const LipschitzOptions& options = {});

}  // namespace fairlens
