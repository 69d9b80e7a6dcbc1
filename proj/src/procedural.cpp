#include "fairlens/procedural.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fairlens/group.hpp"
#include "fairlens/learners.hpp"

namespace fairlens {

namespace {

struct JudgmentCsv {
  std::vector<std::string> members;
  std::vector<std::string> features;
  std::vector<std::vector<std::uint8_t>> cells;
};

JudgmentCsv read_judgments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open judgment file '" + path + "'");
  JudgmentCsv out;
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("judgment file '" + path + "' is empty");
  }
  std::istringstream header(line);
  std::string tok;
  bool first = true;
  while (std::getline(header, tok, ',')) {
    if (first) {
      first = false;  // member-id column
    } else {
      out.features.push_back(tok);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<std::uint8_t> cells;
    std::string member;
    std::getline(row, member, ',');
    while (std::getline(row, tok, ',')) {
      if (tok != "0" && tok != "1") {
        throw ValidationError("judgment file '" + path + "': cell '" + tok +
                              "' is not 0/1");
      }
      cells.push_back(tok == "1" ? 1 : 0);
    }
    if (cells.size() != out.features.size()) {
      throw ValidationError("judgment file '" + path + "': row '" + member +
                            "' has wrong cell count");
    }
    out.members.push_back(member);
    out.cells.push_back(std::move(cells));
  }
  return out;
}

}  // namespace

JudgmentMatrix JudgmentMatrix::load(const std::string& base_path) {
  JudgmentCsv apr = read_judgments(base_path + ".apr.csv");
  JudgmentCsv acc = read_judgments(base_path + ".acc.csv");
  JudgmentCsv disp = read_judgments(base_path + ".disp.csv");
  if (acc.members != apr.members || disp.members != apr.members) {
    throw ValidationError("judgment tables disagree on the member set");
  }
  if (acc.features != apr.features || disp.features != apr.features) {
    throw ValidationError("judgment tables disagree on the feature set");
  }
  JudgmentMatrix m;
  m.members = apr.members;
  m.features = apr.features;
  m.apriori = std::move(apr.cells);
  m.accuracy = std::move(acc.cells);
  m.disparity = std::move(disp.cells);
  return m;
}

int JudgmentMatrix::feature_index(const std::string& name) const {
  auto it = std::find(features.begin(), features.end(), name);
  if (it == features.end()) {
    throw MetricError("feature '" + name + "' was never judged");
  }
  return static_cast<int>(it - features.begin());
}

namespace {

// Intersection over per-feature approval sets, as a fraction of all members.
template <typename ApprovesFeature>
double intersect_fraction(const JudgmentMatrix& judgments,
                          const std::vector<std::string>& used,
                          ApprovesFeature&& approves) {
  if (judgments.n_members() == 0) {
    throw MetricError("judgment matrix has no members");
  }
  std::vector<int> indices;
  for (const auto& name : used) indices.push_back(judgments.feature_index(name));

  std::size_t approving = 0;
  for (std::size_t m = 0; m < judgments.n_members(); ++m) {
    bool all = true;
    for (int f : indices) {
      if (!approves(m, static_cast<std::size_t>(f))) {
        all = false;
        break;
      }
    }
    if (all) ++approving;
  }
  return static_cast<double>(approving) /
         static_cast<double>(judgments.n_members());
}

const AblationPair& ablation_for(const std::map<std::string, AblationPair>& map,
                                 const std::string& feature,
                                 const char* what) {
  auto it = map.find(feature);
  if (it == map.end()) {
    throw MetricError(std::string("missing ablation ") + what +
                      " for feature '" + feature + "'");
  }
  return it->second;
}

}  // namespace

double pf_apriori(const JudgmentMatrix& judgments,
                  const std::vector<std::string>& used_features) {
  return intersect_fraction(
      judgments, used_features,
      [&](std::size_t m, std::size_t f) { return judgments.apriori[m][f] != 0; });
}

double pf_accuracy(const JudgmentMatrix& judgments,
                   const std::vector<std::string>& used_features,
                   const std::map<std::string, AblationPair>& accuracies) {
  std::vector<bool> improves(judgments.features.size(), false);
  for (const auto& name : used_features) {
    const AblationPair& a = ablation_for(accuracies, name, "accuracy");
    // Dropping the feature hurts accuracy: the accuracy-conditional
    // approvers count too.
    improves[static_cast<std::size_t>(judgments.feature_index(name))] =
        a.with_feature > a.without_feature;
  }
  return intersect_fraction(judgments, used_features,
                            [&](std::size_t m, std::size_t f) {
                              if (judgments.apriori[m][f] != 0) return true;
                              return improves[f] && judgments.accuracy[m][f] != 0;
                            });
}

double pf_disparity(const JudgmentMatrix& judgments,
                    const std::vector<std::string>& used_features,
                    const std::map<std::string, AblationPair>& disparities) {
  std::vector<bool> worsens(judgments.features.size(), false);
  for (const auto& name : used_features) {
    const AblationPair& d = ablation_for(disparities, name, "disparity");
    worsens[static_cast<std::size_t>(judgments.feature_index(name))] =
        d.with_feature > d.without_feature;
  }
  return intersect_fraction(
      judgments, used_features, [&](std::size_t m, std::size_t f) {
        if (worsens[f]) return judgments.disparity[m][f] != 0;
        return judgments.apriori[m][f] != 0 || judgments.disparity[m][f] != 0;
      });
}

namespace {

Dataset restrict_features(const Dataset& dataset,
                          const std::set<std::string>& keep) {
  std::vector<Index> cols;
  for (Index c = 0; c < dataset.features.cols(); ++c) {
    if (keep.count(dataset.feature_source[static_cast<std::size_t>(c)])) {
      cols.push_back(c);
    }
  }
  Dataset out = dataset;
  out.features.resize(dataset.features.rows(), static_cast<Index>(cols.size()));
  out.feature_names.clear();
  out.feature_source.clear();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.features.col(static_cast<Index>(i)) = dataset.features.col(cols[i]);
    out.feature_names.push_back(
        dataset.feature_names[static_cast<std::size_t>(cols[i])]);
    out.feature_source.push_back(
        dataset.feature_source[static_cast<std::size_t>(cols[i])]);
  }
  return out;
}

struct CvOutcome {
  double accuracy;
  double disparity;
};

CvOutcome evaluate_feature_set(const Dataset& dataset,
                               const std::set<std::string>& keep,
                               const LearnerSpec& spec, int attribute, int k,
                               std::uint64_t seed) {
  Dataset filtered = restrict_features(dataset, keep);
  CvResult cv = cross_validate(filtered, spec, k, seed);
  IntVector pooled(dataset.n());
  for (const auto& fold : cv.folds) {
    for (std::size_t i = 0; i < fold.test_rows.size(); ++i) {
      pooled[fold.test_rows[i]] = fold.predictions.hard[static_cast<Index>(i)];
    }
  }
  CvOutcome out{};
  out.accuracy = performance(pooled, dataset.labels).accuracy;
  GroupPartition part = partition(dataset, attribute);
  out.disparity =
      probe_metric(ProbeKind::DP, pooled, dataset.labels, part, Form::Binarised)
          .value;
  return out;
}

}  // namespace

AblationResult compute_ablations(const Dataset& dataset,
                                 const std::vector<std::string>& used_features,
                                 const std::string& learner_id, int attribute,
                                 int k, std::uint64_t seed) {
  LearnerSpec spec = LearnerSpec::parse(learner_id);
  std::set<std::string> full(used_features.begin(), used_features.end());
  CvOutcome with_all =
      evaluate_feature_set(dataset, full, spec, attribute, k, seed);

  AblationResult out;
  for (const auto& name : used_features) {
    std::set<std::string> without = full;
    without.erase(name);
    CvOutcome ablated =
        evaluate_feature_set(dataset, without, spec, attribute, k, seed);
    out.accuracy[name] = {with_all.accuracy, ablated.accuracy};
    out.disparity[name] = {with_all.disparity, ablated.disparity};
  }
  return out;
}

}  // namespace fairlens
