#include "fairlens/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace fairlens {

namespace {

// ---------------------------------------------------------------------------
// Inner models over a plain input matrix

class ColumnModel {
 public:
  virtual ~ColumnModel() = default;
  virtual IntVector predict(const Matrix& x) const = 0;
  virtual std::optional<Vector> score(const Matrix& x) const {
    return std::nullopt;
  }
};

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  // polarity 1: predict 1 iff x >= threshold; polarity 0: predict 1 iff x < t
  int polarity = 1;

  int apply(const Matrix& x, Index row) const {
    bool ge = x(row, feature) >= threshold;
    return (ge == (polarity == 1)) ? 1 : 0;
  }
};

class StumpModel : public ColumnModel {
 public:
  explicit StumpModel(Stump s) : stump_(s) {}
  IntVector predict(const Matrix& x) const override {
    IntVector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out[i] = stump_.apply(x, i);
    return out;
  }

 private:
  Stump stump_;
};

class ConstantModel : public ColumnModel {
 public:
  explicit ConstantModel(int value) : value_(value) {}
  IntVector predict(const Matrix& x) const override {
    return IntVector::Constant(x.rows(), value_);
  }
  std::optional<Vector> score(const Matrix& x) const override {
    return Vector::Constant(x.rows(), value_ == 1 ? 1.0 : 0.0);
  }

 private:
  int value_;
};

class BaggingModel : public ColumnModel {
 public:
  explicit BaggingModel(std::vector<Stump> stumps)
      : stumps_(std::move(stumps)) {}
  IntVector predict(const Matrix& x) const override {
    Vector s = *score(x);
    IntVector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out[i] = s[i] >= 0.5 ? 1 : 0;
    return out;
  }
  std::optional<Vector> score(const Matrix& x) const override {
    Vector votes = Vector::Zero(x.rows());
    for (const auto& s : stumps_) {
      for (Index i = 0; i < x.rows(); ++i) votes[i] += s.apply(x, i);
    }
    return votes / static_cast<double>(stumps_.size());
  }

 private:
  std::vector<Stump> stumps_;
};

class AdaBoostModel : public ColumnModel {
 public:
  AdaBoostModel(std::vector<Stump> stumps, std::vector<double> alphas,
                std::vector<double> bounds)
      : stumps_(std::move(stumps)),
        alphas_(std::move(alphas)),
        bounds_(std::move(bounds)),
        alpha_total_(std::accumulate(alphas_.begin(), alphas_.end(), 0.0)) {}

  IntVector predict(const Matrix& x) const override {
    IntVector out(x.rows());
    Vector m = margins(x);
    for (Index i = 0; i < x.rows(); ++i) out[i] = m[i] >= 0.0 ? 1 : 0;
    return out;
  }
  std::optional<Vector> score(const Matrix& x) const override {
    // Margin normalized into [0,1]; score >= 0.5 iff the vote is positive.
    Vector m = margins(x);
    return (m / alpha_total_).array() * 0.5 + 0.5;
  }
  const std::vector<double>& round_bounds() const { return bounds_; }

 private:
  Vector margins(const Matrix& x) const {
    Vector m = Vector::Zero(x.rows());
    for (std::size_t t = 0; t < stumps_.size(); ++t) {
      for (Index i = 0; i < x.rows(); ++i) {
        m[i] += alphas_[t] * (stumps_[t].apply(x, i) == 1 ? 1.0 : -1.0);
      }
    }
    return m;
  }

  std::vector<Stump> stumps_;
  std::vector<double> alphas_;
  std::vector<double> bounds_;
  double alpha_total_;
};

class LogRegModel : public ColumnModel {
 public:
  LogRegModel(Vector w, double b) : w_(std::move(w)), b_(b) {}
  IntVector predict(const Matrix& x) const override {
    Vector s = *score(x);
    IntVector out(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out[i] = s[i] >= 0.5 ? 1 : 0;
    return out;
  }
  std::optional<Vector> score(const Matrix& x) const override {
    Vector z = x * w_ + Vector::Constant(x.rows(), b_);
    return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }

 private:
  Vector w_;
  double b_;
};

// ---------------------------------------------------------------------------
// Weighted stump search

// Sort orders per feature are computed once and reused across boosting
// rounds and bootstrap replicates.
class StumpTrainer {
 public:
  StumpTrainer(const Matrix& x, const IntVector& y) : x_(x), y_(y) {
    const Index d = x.cols();
    order_.resize(static_cast<std::size_t>(d));
    for (Index c = 0; c < d; ++c) {
      auto& ord = order_[static_cast<std::size_t>(c)];
      ord.resize(static_cast<std::size_t>(x.rows()));
      std::iota(ord.begin(), ord.end(), 0);
      std::stable_sort(ord.begin(), ord.end(), [&](Index a, Index b) {
        return x(a, c) < x(b, c);
      });
    }
  }

  /// Lowest weighted misclassification over (feature, threshold, polarity),
  /// ties resolved toward the lowest feature index, then lowest threshold,
  /// then the >=1 polarity.
  Stump best(const Vector& w) const {
    const Index n = x_.rows();
    double w1_total = 0.0, w_total = 0.0;
    for (Index i = 0; i < n; ++i) {
      w_total += w[i];
      if (y_[i] == 1) w1_total += w[i];
    }
    double w0_total = w_total - w1_total;

    Stump best_stump;
    double best_err = std::numeric_limits<double>::infinity();
    auto consider = [&](int feature, double threshold, int polarity,
                        double err) {
      if (err < best_err) {
        best_err = err;
        best_stump = Stump{feature, threshold, polarity};
      }
    };

    for (Index c = 0; c < x_.cols(); ++c) {
      const auto& ord = order_[static_cast<std::size_t>(c)];
      // Threshold below every value: the >= side covers all rows.
      double lowest = x_(ord.front(), c);
      consider(static_cast<int>(c), lowest - 1.0, 1, w0_total);
      consider(static_cast<int>(c), lowest - 1.0, 0, w1_total);

      double left_w1 = 0.0, left_w0 = 0.0;
      for (std::size_t i = 0; i < ord.size(); ++i) {
        Index r = ord[i];
        if (y_[r] == 1) {
          left_w1 += w[r];
        } else {
          left_w0 += w[r];
        }
        if (i + 1 == ord.size()) break;
        double v = x_(r, c), next = x_(ord[i + 1], c);
        if (next == v) continue;
        double threshold = v + (next - v) / 2.0;
        double err_ge1 = left_w1 + (w0_total - left_w0);
        consider(static_cast<int>(c), threshold, 1, err_ge1);
        consider(static_cast<int>(c), threshold, 0, w_total - err_ge1);
      }
    }
    return best_stump;
  }

 private:
  const Matrix& x_;
  const IntVector& y_;
  std::vector<std::vector<Index>> order_;
};

bool single_class(const IntVector& y, int& value) {
  bool has0 = false, has1 = false;
  for (Index i = 0; i < y.size(); ++i) {
    (y[i] == 1 ? has1 : has0) = true;
  }
  if (has0 && has1) return false;
  value = has1 ? 1 : 0;
  return true;
}

std::unique_ptr<ColumnModel> train_columns(const LearnerSpec& spec,
                                           const Matrix& x, const IntVector& y,
                                           std::uint64_t seed,
                                           std::vector<std::string>& flags) {
  if (x.rows() < 2) throw MetricError("training needs >= 2 rows");
  int constant = 0;
  if (single_class(y, constant)) {
    flags.push_back("single-class training data: constant model");
    return std::make_unique<ConstantModel>(constant);
  }
  if (x.cols() == 0) {
    flags.push_back("no input columns: majority-class model");
    long pos = 0;
    for (Index i = 0; i < y.size(); ++i) pos += y[i];
    return std::make_unique<ConstantModel>(2 * pos >= y.size() ? 1 : 0);
  }

  StumpTrainer trainer(x, y);
  const Index n = x.rows();

  switch (spec.kind) {
    case LearnerSpec::Kind::Stump: {
      Vector w = Vector::Constant(n, 1.0);
      return std::make_unique<StumpModel>(trainer.best(w));
    }
    case LearnerSpec::Kind::Bagging: {
      Rng rng(seed);
      std::vector<Stump> stumps;
      for (int b = 0; b < spec.rounds; ++b) {
        // Bootstrap multiplicities double as stump weights.
        Vector w = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
          w[static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)))] +=
              1.0;
        }
        stumps.push_back(trainer.best(w));
      }
      return std::make_unique<BaggingModel>(std::move(stumps));
    }
    case LearnerSpec::Kind::AdaBoost: {
      Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
      std::vector<Stump> stumps;
      std::vector<double> alphas;
      std::vector<double> bounds;
      double bound = 1.0;
      for (int t = 0; t < spec.rounds; ++t) {
        Stump s = trainer.best(w);
        double eps = 0.0;
        for (Index i = 0; i < n; ++i) {
          if (s.apply(x, i) != y[i]) eps += w[i];
        }
        if (eps >= 0.5) break;  // no edge left over the weighted sample
        if (eps == 0.0) {
          stumps.push_back(s);
          alphas.push_back(0.5 * std::log((1.0 - 1e-10) / 1e-10));
          bounds.push_back(0.0);
          break;
        }
        double alpha = 0.5 * std::log((1.0 - eps) / eps);
        stumps.push_back(s);
        alphas.push_back(alpha);
        bound *= 2.0 * std::sqrt(eps * (1.0 - eps));
        bounds.push_back(bound);
        double norm = 0.0;
        for (Index i = 0; i < n; ++i) {
          bool correct = s.apply(x, i) == y[i];
          w[i] *= std::exp(correct ? -alpha : alpha);
          norm += w[i];
        }
        w /= norm;
      }
      if (stumps.empty()) {
        flags.push_back("adaboost found no weak edge: constant model");
        long pos = 0;
        for (Index i = 0; i < n; ++i) pos += y[i];
        return std::make_unique<ConstantModel>(2 * pos >= n ? 1 : 0);
      }
      return std::make_unique<AdaBoostModel>(std::move(stumps),
                                             std::move(alphas),
                                             std::move(bounds));
    }
    case LearnerSpec::Kind::LogReg: {
      Vector w = Vector::Zero(x.cols());
      double b = 0.0;
      Vector yd(n);
      for (Index i = 0; i < n; ++i) yd[i] = static_cast<double>(y[i]);
      for (int e = 0; e < spec.epochs; ++e) {
        Vector z = x * w + Vector::Constant(n, b);
        Vector p =
            z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Vector diff = p - yd;
        w -= spec.lr * (x.transpose() * diff) / static_cast<double>(n);
        b -= spec.lr * diff.mean();
      }
      return std::make_unique<LogRegModel>(std::move(w), b);
    }
  }
  throw MetricError("unknown learner kind");
}

// Dataset-facing adapter: assembles [features | sensitive codes] so that
// re-prediction under perturbed codes reaches the inner model.
class CombinedModel : public Model {
 public:
  CombinedModel(std::unique_ptr<ColumnModel> inner, std::string id,
                bool uses_sensitive, std::vector<std::string> flags)
      : inner_(std::move(inner)),
        id_(std::move(id)),
        uses_sensitive_(uses_sensitive) {
    flags_ = std::move(flags);
  }

  IntVector predict(const Matrix& x, const IntMatrix& a) const override {
    return inner_->predict(combine(x, a));
  }
  std::optional<Vector> score(const Matrix& x,
                              const IntMatrix& a) const override {
    return inner_->score(combine(x, a));
  }
  std::string id() const override { return id_; }
  const ColumnModel& inner() const { return *inner_; }

 private:
  Matrix combine(const Matrix& x, const IntMatrix& a) const {
    if (!uses_sensitive_) return x;
    Matrix out(x.rows(), x.cols() + a.cols());
    out.leftCols(x.cols()) = x;
    out.rightCols(a.cols()) = a.cast<double>();
    return out;
  }

  std::unique_ptr<ColumnModel> inner_;
  std::string id_;
  bool uses_sensitive_;
};

Matrix gather_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = m.row(rows[i]);
  }
  return out;
}

IntVector gather(const IntVector& v, const std::vector<int>& rows) {
  IntVector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[static_cast<Index>(i)] = v[rows[i]];
  }
  return out;
}

}  // namespace

LearnerSpec LearnerSpec::parse(const std::string& id) {
  std::string name = id;
  std::string args;
  auto open = id.find('(');
  if (open != std::string::npos) {
    if (id.back() != ')') throw ConfigError("malformed learner id '" + id + "'");
    name = id.substr(0, open);
    args = id.substr(open + 1, id.size() - open - 2);
  }
  LearnerSpec spec;
  if (name == "stump") {
    spec.kind = Kind::Stump;
    if (!args.empty()) throw ConfigError("stump takes no arguments");
  } else if (name == "bagging") {
    spec.kind = Kind::Bagging;
    if (!args.empty()) spec.rounds = std::stoi(args);
  } else if (name == "adaboost") {
    spec.kind = Kind::AdaBoost;
    spec.rounds = 50;
    if (!args.empty()) spec.rounds = std::stoi(args);
  } else if (name == "logreg") {
    spec.kind = Kind::LogReg;
    if (!args.empty()) {
      std::istringstream in(args);
      std::string tok;
      if (std::getline(in, tok, ',')) spec.epochs = std::stoi(tok);
      if (std::getline(in, tok, ',')) spec.lr = std::stod(tok);
    }
  } else {
    throw ConfigError("unknown learner '" + id + "'");
  }
  if (spec.rounds < 1 || spec.epochs < 1 || spec.lr <= 0.0) {
    throw ConfigError("learner '" + id + "' has invalid parameters");
  }
  return spec;
}

std::string LearnerSpec::id() const {
  switch (kind) {
    case Kind::Stump:
      return "stump";
    case Kind::Bagging:
      return "bagging(" + std::to_string(rounds) + ")";
    case Kind::AdaBoost:
      return "adaboost(" + std::to_string(rounds) + ")";
    case Kind::LogReg: {
      std::ostringstream out;
      out << "logreg(" << epochs << "," << lr << ")";
      return out.str();
    }
  }
  return "?";
}

std::unique_ptr<Model> train(const LearnerSpec& spec, const Dataset& dataset,
                             const std::vector<int>& rows,
                             std::uint64_t seed) {
  Matrix x(static_cast<Index>(rows.size()),
           dataset.features.cols() + dataset.sensitive.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Index>(i)).head(dataset.features.cols()) =
        dataset.features.row(rows[i]);
    x.row(static_cast<Index>(i)).tail(dataset.sensitive.cols()) =
        dataset.sensitive.row(rows[i]).cast<double>();
  }
  IntVector y = gather(dataset.labels, rows);
  std::vector<std::string> flags;
  auto inner = train_columns(spec, x, y, seed, flags);
  return std::make_unique<CombinedModel>(std::move(inner), spec.id(), true,
                                         std::move(flags));
}

std::unique_ptr<Model> train_matrix(const LearnerSpec& spec, const Matrix& x,
                                    const IntVector& targets,
                                    const std::vector<int>& rows,
                                    std::uint64_t seed) {
  Matrix xr = gather_rows(x, rows);
  IntVector yr = gather(targets, rows);
  std::vector<std::string> flags;
  auto inner = train_columns(spec, xr, yr, seed, flags);
  return std::make_unique<CombinedModel>(std::move(inner), spec.id(), false,
                                         std::move(flags));
}

const std::vector<double>* adaboost_round_bounds(const Model& model) {
  const auto* combined = dynamic_cast<const CombinedModel*>(&model);
  if (combined == nullptr) return nullptr;
  const auto* boost = dynamic_cast<const AdaBoostModel*>(&combined->inner());
  return boost == nullptr ? nullptr : &boost->round_bounds();
}

FoldPlan FoldPlan::make(const IntVector& labels, int k, std::uint64_t seed,
                        bool stratified) {
  const Index n = labels.size();
  if (k < 2 || n < k) throw MetricError("fold plan needs 2 <= k <= n");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.stratified = stratified;
  plan.folds.assign(static_cast<std::size_t>(k), {});

  Rng rng(seed);
  long counter = 0;
  auto deal = [&](std::vector<int>& rows) {
    rng.shuffle(rows);
    for (int r : rows) {
      plan.folds[static_cast<std::size_t>(counter % k)].push_back(r);
      ++counter;
    }
  };
  if (stratified) {
    std::vector<int> neg, pos;
    for (Index i = 0; i < n; ++i) {
      (labels[i] == 1 ? pos : neg).push_back(static_cast<int>(i));
    }
    deal(neg);
    deal(pos);
  } else {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    deal(all);
  }
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

PerformanceTriple performance(const IntVector& yhat, const IntVector& y) {
  if (yhat.size() == 0 || yhat.size() != y.size()) {
    throw MetricError("performance on empty or mismatched data");
  }
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (yhat[i] == 1) {
      (y[i] == 1 ? tp : fp) += 1;
    } else {
      (y[i] == 1 ? fn : tn) += 1;
    }
  }
  PerformanceTriple perf;
  perf.accuracy = static_cast<double>(tp + tn) / static_cast<double>(y.size());
  if (2 * tp + fp + fn == 0) {
    perf.f1 = 0.0;
    perf.f1_flagged = true;
  } else {
    perf.f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  if (tp + fn == 0 || tn + fp == 0) {
    perf.gmean = 0.0;
    perf.gmean_flagged = true;
  } else {
    double tpr = static_cast<double>(tp) / (tp + fn);
    double tnr = static_cast<double>(tn) / (tn + fp);
    perf.gmean = std::sqrt(tpr * tnr);
  }
  return perf;
}

Dataset subset(const Dataset& dataset, const std::vector<int>& rows) {
  Dataset out;
  out.features = gather_rows(dataset.features, rows);
  out.sensitive.resize(static_cast<Index>(rows.size()),
                       dataset.sensitive.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.sensitive.row(static_cast<Index>(i)) = dataset.sensitive.row(rows[i]);
  }
  out.labels = gather(dataset.labels, rows);
  out.attributes = dataset.attributes;
  out.feature_names = dataset.feature_names;
  out.feature_source = dataset.feature_source;
  if (!dataset.stratum.empty()) {
    out.stratum_values = dataset.stratum_values;
    out.stratum.reserve(rows.size());
    for (int r : rows) {
      out.stratum.push_back(dataset.stratum[static_cast<std::size_t>(r)]);
    }
  }
  return out;
}

CvResult cross_validate(const Dataset& dataset, const LearnerSpec& spec,
                        int k, std::uint64_t seed) {
  CvResult res;
  res.plan = FoldPlan::make(dataset.labels, k, seed);
  for (int f = 0; f < k; ++f) {
    CvFold fold;
    fold.test_rows = res.plan.folds[static_cast<std::size_t>(f)];
    std::vector<int> train_rows;
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      const auto& rows = res.plan.folds[static_cast<std::size_t>(g)];
      train_rows.insert(train_rows.end(), rows.begin(), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());

    int dummy;
    fold.single_class = single_class(gather(dataset.labels, train_rows), dummy);
    fold.model = train(spec, dataset, train_rows,
                       Rng::mix(seed, static_cast<std::uint64_t>(f)));

    Dataset test = subset(dataset, fold.test_rows);
    IntVector hard = fold.model->predict(test.features, test.sensitive);
    auto scores = fold.model->score(test.features, test.sensitive);
    if (scores) {
      fold.predictions =
          PredictionSet::from_scores(*scores, "learner:" + spec.id(), seed);
    } else {
      fold.predictions.hard = hard;
      fold.predictions.source = "learner:" + spec.id();
      fold.predictions.seed = seed;
    }
    res.folds.push_back(std::move(fold));
  }
  return res;
}

BerResult ber_audit(const Dataset& dataset, int attribute,
                    const std::vector<LearnerSpec>& learners, double epsilon,
                    std::uint64_t seed, int k) {
  if (learners.empty()) throw MetricError("BER audit needs >= 1 learner");
  if (attribute < 0 || attribute >= dataset.n_attributes()) {
    throw MetricError("attribute index out of range");
  }
  const auto& spec = dataset.attributes[static_cast<std::size_t>(attribute)];
  int priv = spec.privileged_code();

  IntVector target(dataset.n());
  bool has0 = false, has1 = false;
  for (Index i = 0; i < dataset.n(); ++i) {
    target[i] = dataset.sensitive(i, attribute) == priv ? 1 : 0;
    (target[i] == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) {
    throw MetricError("BER audit: attribute '" + spec.name +
                      "' is constant (privileged vs rest)");
  }

  BerResult res;
  res.epsilon = epsilon;
  res.binarized_flag = spec.n_values() > 2;
  res.min_ber = 1.0;

  FoldPlan plan = FoldPlan::make(target, k, seed);
  for (const auto& learner : learners) {
    long miss_priv = 0, n_priv = 0, hit_rest = 0, n_rest = 0;
    for (int f = 0; f < k; ++f) {
      std::vector<int> train_rows;
      for (int g = 0; g < k; ++g) {
        if (g == f) continue;
        const auto& rows = plan.folds[static_cast<std::size_t>(g)];
        train_rows.insert(train_rows.end(), rows.begin(), rows.end());
      }
      std::sort(train_rows.begin(), train_rows.end());
      auto model =
          train_matrix(learner, dataset.features, target, train_rows,
                       Rng::mix(seed, static_cast<std::uint64_t>(f)));
      for (int r : plan.folds[static_cast<std::size_t>(f)]) {
        Matrix row = dataset.features.row(r);
        int pred = model->predict(row, IntMatrix(1, 0))[0];
        if (target[r] == 1) {
          ++n_priv;
          if (pred == 0) ++miss_priv;
        } else {
          ++n_rest;
          if (pred == 1) ++hit_rest;
        }
      }
    }
    double ber = 0.5 * (static_cast<double>(miss_priv) / n_priv +
                        static_cast<double>(hit_rest) / n_rest);
    res.entries.push_back({learner.id(), ber});
    res.min_ber = std::min(res.min_ber, ber);
  }
  res.fair = res.min_ber > epsilon;
  return res;
}

}  // namespace fairlens
