#pragma once

#include <memory>

#include "fairlens/dataset.hpp"
#include "fairlens/model.hpp"

namespace fairlens {

/// Built-in desk-scale learners. Identifiers parse as "stump",
/// "bagging(B)", "adaboost(T)" and "logreg(epochs,lr)"; bare names take
/// the defaults below.
struct LearnerSpec {
  enum class Kind { Stump, Bagging, AdaBoost, LogReg };
  Kind kind = Kind::Stump;
  int rounds = 25;      // B for bagging, T for adaboost
  int epochs = 200;     // logreg
  double lr = 0.5;      // logreg

  static LearnerSpec parse(const std::string& id);
  std::string id() const;
};

/// Trains on the given rows; model inputs are the prepared features with the
/// sensitive category codes appended, so trained models can re-predict under
/// perturbed sensitive values. Deterministic given the seed. Single-class
/// training data yields a constant model with a flag.
std::unique_ptr<Model> train(const LearnerSpec& spec, const Dataset& dataset,
                             const std::vector<int>& rows, std::uint64_t seed);

/// Matrix-level variant used by the BER audit (predicting an attribute from
/// the non-sensitive features alone).
std::unique_ptr<Model> train_matrix(const LearnerSpec& spec, const Matrix& x,
                                    const IntVector& targets,
                                    const std::vector<int>& rows,
                                    std::uint64_t seed);

/// AdaBoost exposes its per-round ensemble exponential-loss bound; the
/// sequence is non-increasing by construction.
const std::vector<double>* adaboost_round_bounds(const Model& model);

// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 5;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::vector<std::vector<int>> folds;  // disjoint, exhaustive, sizes +-1

  static FoldPlan make(const IntVector& labels, int k, std::uint64_t seed,
                       bool stratified = true);
};

struct PerformanceTriple {
  double accuracy = 0.0;
  double f1 = 0.0;
  double gmean = 0.0;
  bool f1_flagged = false;     // no positive predictions or labels
  bool gmean_flagged = false;  // one class absent
};

PerformanceTriple performance(const IntVector& yhat, const IntVector& y);

struct CvFold {
  std::vector<int> test_rows;
  PredictionSet predictions;  // aligned to test_rows order
  std::shared_ptr<Model> model;
  bool single_class = false;
};

struct CvResult {
  FoldPlan plan;
  std::vector<CvFold> folds;
};

CvResult cross_validate(const Dataset& dataset, const LearnerSpec& spec,
                        int k, std::uint64_t seed);

/// Row-subset copy; fold-level metrics run on subset(dataset, test_rows).
Dataset subset(const Dataset& dataset, const std::vector<int>& rows);

// ---------------------------------------------------------------------------

struct BerResult {
  struct Entry {
    std::string learner;
    double ber = 0.5;
  };
  std::vector<Entry> entries;
  double min_ber = 0.5;
  double epsilon = 0.0;
  bool fair = false;           // min BER > epsilon for every tried learner
  bool binarized_flag = false; // attribute was multi-valued, audited priv-vs-rest
};

/// Trains each learner to predict the attribute from the non-sensitive
/// features; BER is pooled over held-out folds. The dataset is reported
/// epsilon-fair w.r.t. the tried learners iff the smallest BER exceeds
/// epsilon.
BerResult ber_audit(const Dataset& dataset, int attribute,
                    const std::vector<LearnerSpec>& learners, double epsilon,
                    std::uint64_t seed, int k = 5);

}  // namespace fairlens
