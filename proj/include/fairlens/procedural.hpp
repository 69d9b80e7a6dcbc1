#pragma once

#include <map>
#include <string>
#include <vector>

#include "fairlens/dataset.hpp"

namespace fairlens {

/// Member judgments about which features are fair to use, three boolean
/// tables over the same members: fair without a priori knowledge (apriori),
/// fair if it increases accuracy (accuracy), fair even if it increases
/// disparity (disparity). Judgments are snapshot input data, never elicited
/// here. The expected inclusions (apriori within accuracy, disparity within
/// apriori) are not enforced; the raw sets are used as given.
struct JudgmentMatrix {
  std::vector<std::string> members;
  std::vector<std::string> features;
  // member x feature, row-major; 1 = considers the feature fair to use
  std::vector<std::vector<std::uint8_t>> apriori;
  std::vector<std::vector<std::uint8_t>> accuracy;
  std::vector<std::vector<std::uint8_t>> disparity;

  /// Loads <base>.apr.csv, <base>.acc.csv and <base>.disp.csv
  /// (rows = members, columns = features, cells in {0,1}).
  static JudgmentMatrix load(const std::string& base_path);

  int feature_index(const std::string& name) const;
  std::size_t n_members() const { return members.size(); }
};

/// Accuracy or disparity of the classifier with the full feature set and
/// with one feature removed.
struct AblationPair {
  double with_feature = 0.0;
  double without_feature = 0.0;
};

/// Fraction of members approving every used feature a priori.
/// The empty feature set is vacuously approved by everyone.
double pf_apriori(const JudgmentMatrix& judgments,
                  const std::vector<std::string>& used_features);

/// Accuracy-conditioned variant: a feature whose removal hurts accuracy may
/// also be approved by the accuracy-conditional judgers.
double pf_accuracy(const JudgmentMatrix& judgments,
                   const std::vector<std::string>& used_features,
                   const std::map<std::string, AblationPair>& accuracies);

/// Disparity-conditioned variant: a feature whose use increases disparity
/// needs approval from the disparity-tolerant judgers.
double pf_disparity(const JudgmentMatrix& judgments,
                    const std::vector<std::string>& used_features,
                    const std::map<std::string, AblationPair>& disparities);

/// Computes the ablation pairs by retraining with the learners module under
/// a fixed seed: k-fold CV accuracy (and dp.binarised disparity on attribute
/// `attribute`) with the full raw-feature set and with each feature dropped.
struct AblationResult {
  std::map<std::string, AblationPair> accuracy;
  std::map<std::string, AblationPair> disparity;
};
AblationResult compute_ablations(const Dataset& dataset,
                                 const std::vector<std::string>& used_features,
                                 const std::string& learner_id, int attribute,
                                 int k, std::uint64_t seed);

}  // namespace fairlens
