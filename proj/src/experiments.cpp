#include "fairlens/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "fairlens/individual.hpp"

namespace fairlens {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0)
      .count();
}

double hash01_row(const Matrix& x, Index row) {
  Fnv1a h;
  for (Index c = 0; c < x.cols(); ++c) h.add(x(row, c));
  return static_cast<double>(h.value() >> 11) * 0x1.0p-53;
}

}  // namespace

// ---------------------------------------------------------------------------
// Synthetic substrate

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 2) throw MetricError("synthetic dataset needs n >= 2");
  if (spec.value_counts.empty()) {
    throw MetricError("synthetic dataset needs >= 1 attribute");
  }
  Rng rng(spec.seed);
  Dataset ds;
  const Index n = spec.n;

  // Attribute specs: values "0".."k-1", privileged = "0".
  for (std::size_t a = 0; a < spec.value_counts.size(); ++a) {
    SensitiveAttributeSpec s;
    s.name = "s" + std::to_string(a);
    s.column = s.name;
    int vc = spec.value_counts[a];
    if (vc < 2) throw MetricError("attribute needs >= 2 values");
    for (int v = 0; v < vc; ++v) s.values.push_back(std::to_string(v));
    s.privileged = "0";
    ds.attributes.push_back(std::move(s));
  }

  // Attribute 0 group sizes from the weights; remaining attributes uniform.
  ds.sensitive.resize(n, static_cast<Index>(spec.value_counts.size()));
  {
    int vc = spec.value_counts[0];
    std::vector<double> w = spec.group_weights;
    if (w.empty()) w.assign(static_cast<std::size_t>(vc), 1.0);
    if (static_cast<int>(w.size()) != vc) {
      throw MetricError("group_weights size mismatch");
    }
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<int> codes;
    codes.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < vc; ++v) {
      long count = static_cast<long>(std::floor(w[v] / total * n));
      for (long i = 0; i < count; ++i) codes.push_back(v);
    }
    while (codes.size() < static_cast<std::size_t>(n)) {
      codes.push_back(static_cast<int>(codes.size()) % vc);
    }
    rng.shuffle(codes);
    for (Index i = 0; i < n; ++i) ds.sensitive(i, 0) = codes[i];
  }
  for (std::size_t a = 1; a < spec.value_counts.size(); ++a) {
    for (Index i = 0; i < n; ++i) {
      ds.sensitive(i, static_cast<Index>(a)) = static_cast<int>(
          rng.below(static_cast<std::uint64_t>(spec.value_counts[a])));
    }
  }

  // Labels: planted per-group positive rates on attribute 0 (default 0.5).
  ds.labels = IntVector::Zero(n);
  {
    int vc = spec.value_counts[0];
    std::vector<double> rates = spec.group_label_rates;
    if (rates.empty()) rates.assign(static_cast<std::size_t>(vc), 0.5);
    if (static_cast<int>(rates.size()) != vc) {
      throw MetricError("group_label_rates size mismatch");
    }
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(vc));
    for (Index i = 0; i < n; ++i) {
      groups[static_cast<std::size_t>(ds.sensitive(i, 0))].push_back(
          static_cast<int>(i));
    }
    for (int v = 0; v < vc; ++v) {
      auto& rows = groups[static_cast<std::size_t>(v)];
      rng.shuffle(rows);
      long positives = static_cast<long>(
          std::floor(rates[static_cast<std::size_t>(v)] * rows.size()));
      for (long i = 0; i < positives; ++i) ds.labels[rows[i]] = 1;
    }
  }

  // Features uniform in [0,1]; feature 0 carries label signal so the
  // built-in learners have something to find.
  ds.features.resize(n, spec.n_features);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < spec.n_features; ++c) {
      ds.features(i, c) = rng.uniform01();
    }
    ds.features(i, 0) =
        0.3 * static_cast<double>(ds.labels[i]) + 0.7 * ds.features(i, 0);
  }
  for (Index c = 0; c < spec.n_features; ++c) {
    ds.feature_names.push_back("x" + std::to_string(c));
    ds.feature_source.push_back("x" + std::to_string(c));
  }
  return ds;
}

PredictionSet planted_predictions(const Dataset& dataset, int attribute,
                                  const std::vector<double>& group_rates,
                                  std::uint64_t seed) {
  GroupPartition part = partition(dataset, attribute);
  if (static_cast<int>(group_rates.size()) != part.n_groups()) {
    throw MetricError("planted rates: one rate per group required");
  }
  Rng rng(seed);
  PredictionSet p;
  p.hard = IntVector::Zero(dataset.n());
  p.source = "planted";
  p.seed = seed;
  for (int j = 0; j < part.n_groups(); ++j) {
    std::vector<int> rows = part.groups[j];
    rng.shuffle(rows);
    long positives = static_cast<long>(
        std::floor(group_rates[static_cast<std::size_t>(j)] * rows.size()));
    for (long i = 0; i < positives; ++i) p.hard[rows[i]] = 1;
  }
  return p;
}

IntVector PlantedDependenceModel::predict(const Matrix& x,
                                          const IntMatrix& a) const {
  IntVector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    if (hash01_row(x, i) < theta_) {
      out[i] = a(i, attribute_) % 2;
    } else {
      out[i] = x(i, 0) >= 0.5 ? 1 : 0;
    }
  }
  return out;
}

std::string PlantedDependenceModel::id() const {
  return "planted:dependence(" + format_double(theta_) + ")";
}

IntVector SensitiveBlindModel::predict(const Matrix& x,
                                       const IntMatrix& a) const {
  (void)a;
  IntVector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out[i] = x(i, 0) >= 0.5 ? 1 : 0;
  return out;
}

IntVector AttributeEchoModel::predict(const Matrix& x,
                                      const IntMatrix& a) const {
  (void)x;
  IntVector out(a.rows());
  for (Index i = 0; i < a.rows(); ++i) out[i] = a(i, attribute_) % 2;
  return out;
}

// ---------------------------------------------------------------------------
// Underestimation family

namespace {

void append_form_rows(UnderestimationTable& table, const Dataset& fold_ds,
                      const PredictionSet& preds, int attribute,
                      const std::vector<ProbeKind>& kinds,
                      const std::string& candidate, int fold) {
  GroupPartition part = partition(fold_ds, attribute);
  for (ProbeKind kind : kinds) {
    double binarised = 0.0, alt = 0.0;
    bool have_binarised = false, have_alt = false;
    for (Form form : {Form::Orig, Form::Binarised, Form::Ext, Form::Alt,
                      Form::ExtAvg, Form::AltAvg}) {
      FormValueRow row;
      row.candidate = candidate;
      row.fold = fold;
      row.attribute = attribute;
      row.kind = kind;
      row.form = form;
      try {
        MetricResult m =
            probe_metric(kind, preds.hard, fold_ds.labels, part, form);
        row.value = m.value;
        row.available = true;
        if (form == Form::Binarised) {
          binarised = m.value;
          have_binarised = true;
        }
        if (form == Form::Alt) {
          alt = m.value;
          have_alt = true;
        }
      } catch (const MetricError& e) {
        row.note = e.what();
      }
      table.rows.push_back(std::move(row));
    }
    if (have_binarised && have_alt) {
      ++table.folds_compared;
      if (binarised < alt) ++table.folds_binarised_lt_alt;
    }
  }
}

}  // namespace

UnderestimationTable underestimation_table(
    const Dataset& dataset, const std::vector<LearnerSpec>& learners, int k,
    std::uint64_t seed, const std::vector<ProbeKind>& kinds, int attribute) {
  UnderestimationTable table;
  for (const auto& spec : learners) {
    CvResult cv = cross_validate(dataset, spec, k, seed);
    for (int f = 0; f < k; ++f) {
      Dataset fold_ds = subset(dataset, cv.folds[f].test_rows);
      append_form_rows(table, fold_ds, cv.folds[f].predictions, attribute,
                       kinds, spec.id(), f);
    }
  }
  return table;
}

UnderestimationTable underestimation_for_predictions(
    const Dataset& dataset, const PredictionSet& preds, int k,
    std::uint64_t seed, const std::vector<ProbeKind>& kinds, int attribute,
    const std::string& label) {
  UnderestimationTable table;
  FoldPlan plan = FoldPlan::make(dataset.labels, k, seed);
  for (int f = 0; f < k; ++f) {
    const auto& rows = plan.folds[static_cast<std::size_t>(f)];
    Dataset fold_ds = subset(dataset, rows);
    PredictionSet fold_preds;
    fold_preds.source = preds.source;
    fold_preds.seed = preds.seed;
    fold_preds.hard.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      fold_preds.hard[static_cast<Index>(i)] = preds.hard[rows[i]];
    }
    append_form_rows(table, fold_ds, fold_preds, attribute, kinds, label, f);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Timing benchmarks

namespace {

struct Timed {
  std::int64_t median_ns;
  std::int64_t min_ns;
};

template <typename Fn>
Timed time_reps(int reps, Fn&& fn) {
  fn();  // warm-up, excluded
  std::vector<std::int64_t> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    fn();
    times.push_back(elapsed_ns(t0));
  }
  std::sort(times.begin(), times.end());
  std::size_t mid = times.size() / 2;
  std::int64_t median = times.size() % 2 == 1
                            ? times[mid]
                            : (times[mid - 1] + times[mid]) / 2;
  return {median, times.front()};
}

}  // namespace

std::vector<TimingRecord> timing_bench(const TimingBenchConfig& config) {
  if (config.repetitions < 5) {
    throw MetricError("timing bench needs >= 5 repetitions");
  }
  for (const auto& metric : config.metrics) {
    static const std::vector<std::string> known = {"dp",  "eopp",  "ppar",
                                                   "peq", "gei",   "theil",
                                                   "hfm"};
    if (std::find(known.begin(), known.end(), metric) == known.end()) {
      throw ConfigError("unknown bench metric '" + metric + "'");
    }
  }
  std::vector<TimingRecord> records;

  auto probe_rates = [](int vc) {
    std::vector<double> rates(static_cast<std::size_t>(vc));
    for (int v = 0; v < vc; ++v) {
      rates[static_cast<std::size_t>(v)] =
          0.2 + 0.6 * (vc == 1 ? 0.0 : static_cast<double>(v) / (vc - 1));
    }
    return rates;
  };

  for (int vc : config.value_counts) {
    for (long n : config.sizes) {
      SyntheticSpec spec;
      spec.n = n;
      spec.value_counts = {vc};
      spec.seed = Rng::mix(config.seed, static_cast<std::uint64_t>(n) * 131 +
                                            static_cast<std::uint64_t>(vc));
      Dataset ds = make_synthetic(spec);
      PredictionSet preds =
          planted_predictions(ds, 0, probe_rates(vc), spec.seed + 1);
      GroupPartition part = partition(ds, 0);
      std::uint64_t fp = ds.fingerprint();

      for (const std::string& metric : config.metrics) {
        if (metric == "hfm") continue;  // quadratic-cost grid below
        if (metric == "gei" || metric == "theil") {
          volatile double sink = 0.0;
          Timed t = time_reps(config.repetitions, [&] {
            sink = metric == "gei"
                       ? general_entropy_index(preds.hard, ds.labels, 2.0)
                       : theil_index(preds.hard, ds.labels);
          });
          (void)sink;
          records.push_back({metric, "", fp, n, vc, config.repetitions,
                             t.median_ns, t.min_ns, 0});
          continue;
        }
        ProbeKind kind = ProbeKind::DP;
        if (metric == "eopp") kind = ProbeKind::EOpp;
        if (metric == "ppar") kind = ProbeKind::PP;
        if (metric == "peq") kind = ProbeKind::FPRBalance;
        std::vector<Form> forms = {Form::Binarised, Form::Ext, Form::Alt,
                                   Form::ExtAvg, Form::AltAvg};
        if (vc == 2) forms.insert(forms.begin(), Form::Orig);
        for (Form form : forms) {
          long terms = 0;
          Timed t = time_reps(config.repetitions, [&] {
            terms = probe_metric(kind, preds.hard, ds.labels, part, form)
                        .term_count;
          });
          records.push_back({metric, form_name(form), fp, n, vc,
                             config.repetitions, t.median_ns, t.min_ns, terms});
        }
      }
    }
  }

  // HFM family at quadratic-cost scales: prev on a binary attribute,
  // max/avg (exact and approximate) on a multi-valued one.
  if (std::find(config.metrics.begin(), config.metrics.end(), "hfm") !=
      config.metrics.end()) {
    int multi_vc = 2;
    for (int vc : config.value_counts) multi_vc = std::max(multi_vc, vc);
    for (long n : config.hfm_sizes) {
      for (int vc : {2, multi_vc}) {
        SyntheticSpec spec;
        spec.n = n;
        spec.value_counts = {vc};
        spec.seed = Rng::mix(config.seed, 0x48464dULL + n * 7 + vc);
        Dataset ds = make_synthetic(spec);
        PredictionSet preds =
            planted_predictions(ds, 0, probe_rates(vc), spec.seed + 1);
        std::uint64_t fp = ds.fingerprint();
        HfmOptions opt;
        opt.threads = 1;

        if (vc == 2) {
          volatile double sink = 0.0;
          Timed t = time_reps(config.repetitions, [&] {
            sink = hfm_prev(ds, preds, 0, opt).value;
          });
          (void)sink;
          records.push_back({"hfm.prev", "", fp, n, vc, config.repetitions,
                             t.median_ns, t.min_ns, 0});
          continue;
        }
        for (const char* version : {"max", "avg"}) {
          bool is_max = std::string(version) == "max";
          volatile double sink = 0.0;
          Timed exact = time_reps(config.repetitions, [&] {
            sink = is_max ? hfm_max(ds, preds, {0}, opt).value
                          : hfm_avg(ds, preds, {0}, opt).value;
          });
          records.push_back({std::string("hfm.") + version, "", fp, n, vc,
                             config.repetitions, exact.median_ns, exact.min_ns,
                             0});
          Timed approx = time_reps(config.repetitions, [&] {
            sink = hfm_approx(ds, preds, {0},
                              is_max ? HfmVersion::Max : HfmVersion::Avg,
                              config.hfm_budget, config.seed, opt)
                       .value;
          });
          (void)sink;
          records.push_back({std::string("hfm.") + version,
                             "approx(" + std::to_string(config.hfm_budget) + ")",
                             fp, n, vc, config.repetitions, approx.median_ns,
                             approx.min_ns, 0});
        }
      }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Perturbation deltas and correlation

DeltaPerformance delta_performance(const Model& model, const Dataset& dataset,
                                   std::uint64_t seed, PerturbPolicy policy) {
  PerturbResult p = perturb(dataset, seed, policy);
  if (p.unperturbable.size() ==
      static_cast<std::size_t>(dataset.n_attributes())) {
    throw MetricError("delta: no sensitive attribute can be perturbed");
  }
  std::vector<int> all(static_cast<std::size_t>(dataset.n()));
  std::iota(all.begin(), all.end(), 0);
  return delta_performance(model, dataset, all, p.sensitive);
}

DeltaPerformance delta_performance(const Model& model, const Dataset& dataset,
                                   const std::vector<int>& rows,
                                   const IntMatrix& perturbed_sensitive) {
  IntVector base = model.predict(dataset.features, dataset.sensitive);
  IntVector pert = model.predict(dataset.features, perturbed_sensitive);

  long correct_base = 0, correct_pert = 0;
  IntVector yhat_base(static_cast<Index>(rows.size()));
  IntVector yhat_pert(static_cast<Index>(rows.size()));
  IntVector y(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    yhat_base[static_cast<Index>(i)] = base[r];
    yhat_pert[static_cast<Index>(i)] = pert[r];
    y[static_cast<Index>(i)] = dataset.labels[r];
    if (base[r] == dataset.labels[r]) ++correct_base;
    if (pert[r] == dataset.labels[r]) ++correct_pert;
  }
  DeltaPerformance d;
  // Integer count difference first: the accuracy delta is then exactly
  // bounded by the disagreement rate on the same rows.
  d.d_accuracy = static_cast<double>(std::abs(correct_base - correct_pert)) /
                 static_cast<double>(rows.size());
  PerformanceTriple pb = performance(yhat_base, y);
  PerformanceTriple pp = performance(yhat_pert, y);
  d.d_f1 = std::abs(pb.f1 - pp.f1);
  d.d_gmean = std::abs(pb.gmean - pp.gmean);
  return d;
}

std::optional<double> pearson(const std::vector<double>& x,
                              const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  double vx = n * sxx - sx * sx;
  double vy = n * syy - sy * sy;
  if (vx <= 0.0 || vy <= 0.0) return std::nullopt;
  double r = (n * sxy - sx * sy) / std::sqrt(vx * vy);
  return std::clamp(r, -1.0, 1.0);
}

std::vector<CorrelationRow> correlation_table(
    const std::map<std::string, std::vector<double>>& metric_series,
    const std::map<std::string, std::vector<double>>& delta_series) {
  std::vector<CorrelationRow> rows;
  for (const auto& [metric, xs] : metric_series) {
    for (const auto& [series, ys] : delta_series) {
      CorrelationRow row;
      row.metric = metric;
      row.series = series;
      row.samples = static_cast<long>(std::min(xs.size(), ys.size()));
      auto r = pearson(xs, ys);
      if (r) {
        row.r = *r;
        row.defined = true;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline

namespace {

struct Candidate {
  std::string name;
  bool trained = false;
  LearnerSpec spec;                   // when trained
  const PredictionSet* external = nullptr;  // when not trained
};

}  // namespace

ExperimentResult run_experiment(const Dataset& dataset,
                                const ExperimentConfig& config) {
  if (config.learners.empty() && config.external.empty()) {
    throw ConfigError("experiment needs at least one learner or prediction file");
  }
  ExperimentResult result;
  result.fingerprint = dataset.fingerprint();

  // Stable metric-cell order: probe families per attribute, then the
  // individual and set-distance metrics.
  const std::vector<ProbeKind> kinds = {ProbeKind::DP, ProbeKind::EOpp,
                                        ProbeKind::PP};
  int first_binary = -1;
  for (int a = 0; a < dataset.n_attributes(); ++a) {
    if (dataset.attributes[static_cast<std::size_t>(a)].n_values() == 2) {
      first_binary = a;
      break;
    }
  }
  auto cell_id = [&](ProbeKind kind, Form form, int attr) {
    return probe_family(kind) + "." + form_name(form) + "@" +
           dataset.attributes[static_cast<std::size_t>(attr)].name;
  };
  for (int a = 0; a < dataset.n_attributes(); ++a) {
    bool binary = dataset.attributes[static_cast<std::size_t>(a)].n_values() == 2;
    for (ProbeKind kind : kinds) {
      for (Form form : {Form::Orig, Form::Binarised, Form::Ext, Form::Alt,
                        Form::ExtAvg, Form::AltAvg}) {
        if (form == Form::Orig && !binary) continue;
        result.metric_ids.push_back(cell_id(kind, form, a));
      }
    }
  }
  result.metric_ids.push_back("gei");
  result.metric_ids.push_back("theil");
  result.metric_ids.push_back("dr");
  if (first_binary >= 0) result.metric_ids.push_back("hfm.prev");
  result.metric_ids.push_back("hfm.max");
  result.metric_ids.push_back("hfm.avg");

  std::vector<Candidate> candidates;
  for (const auto& spec : config.learners) {
    candidates.push_back({"learner:" + spec.id(), true, spec, nullptr});
  }
  for (const auto& ext : config.external) {
    ext.validate(dataset.n());
    candidates.push_back({ext.source, false, {}, &ext});
  }

  // One perturbation draw for the whole run: DR and the deltas see the same
  // perturbed codes, recorded via the seed in the output.
  PerturbResult perturbed = perturb(dataset, config.seed);
  bool perturbable =
      perturbed.unperturbable.size() !=
      static_cast<std::size_t>(dataset.n_attributes());

  FoldPlan plan = FoldPlan::make(dataset.labels, config.k, config.seed);
  std::vector<int> attrs_all(static_cast<std::size_t>(dataset.n_attributes()));
  std::iota(attrs_all.begin(), attrs_all.end(), 0);

  for (const auto& candidate : candidates) {
    CvResult cv;
    if (candidate.trained) {
      cv = cross_validate(dataset, candidate.spec, config.k, config.seed);
    }
    for (int f = 0; f < config.k; ++f) {
      const std::vector<int>& test_rows =
          candidate.trained ? cv.folds[static_cast<std::size_t>(f)].test_rows
                            : plan.folds[static_cast<std::size_t>(f)];
      Dataset fold_ds = subset(dataset, test_rows);
      PredictionSet fold_preds;
      if (candidate.trained) {
        fold_preds = cv.folds[static_cast<std::size_t>(f)].predictions;
      } else {
        fold_preds.source = candidate.external->source;
        fold_preds.hard.resize(static_cast<Index>(test_rows.size()));
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
          fold_preds.hard[static_cast<Index>(i)] =
              candidate.external->hard[test_rows[i]];
        }
      }

      ExperimentRow row;
      row.candidate = candidate.name;
      row.fold = f;
      row.perf = performance(fold_preds.hard, fold_ds.labels);

      auto push_cell = [&](const std::string& id, double value, bool ok,
                           std::string note = "") {
        row.metrics.push_back({id, value, ok, std::move(note)});
      };

      for (int a = 0; a < dataset.n_attributes(); ++a) {
        bool binary =
            dataset.attributes[static_cast<std::size_t>(a)].n_values() == 2;
        GroupPartition part = partition(fold_ds, a);
        for (ProbeKind kind : kinds) {
          for (Form form : {Form::Orig, Form::Binarised, Form::Ext, Form::Alt,
                            Form::ExtAvg, Form::AltAvg}) {
            if (form == Form::Orig && !binary) continue;
            try {
              MetricResult m =
                  probe_metric(kind, fold_preds.hard, fold_ds.labels, part,
                               form);
              push_cell(cell_id(kind, form, a), m.value, true);
            } catch (const MetricError& e) {
              push_cell(cell_id(kind, form, a), 0.0, false, e.what());
            }
          }
        }
      }

      try {
        push_cell("gei",
                  general_entropy_index(fold_preds.hard, fold_ds.labels, 2.0),
                  true);
      } catch (const MetricError& e) {
        push_cell("gei", 0.0, false, e.what());
      }
      try {
        push_cell("theil", theil_index(fold_preds.hard, fold_ds.labels), true);
      } catch (const MetricError& e) {
        push_cell("theil", 0.0, false, e.what());
      }

      if (candidate.trained && perturbable) {
        const Model& model = *cv.folds[static_cast<std::size_t>(f)].model;
        DrOptions dr_opt;
        dr_opt.seed = config.seed;
        DrResult dr = discriminative_risk(model, dataset, test_rows, dr_opt);
        push_cell("dr", dr.value, true);
        row.delta =
            delta_performance(model, dataset, test_rows, perturbed.sensitive);
      } else {
        push_cell("dr", 0.0, false,
                  candidate.trained ? "no perturbable attribute"
                                    : "external predictions cannot re-predict");
      }

      HfmOptions hfm_opt;
      auto hfm_cell = [&](const std::string& id, HfmVersion version,
                          const std::vector<int>& attrs) {
        try {
          HfmResult h;
          if (config.hfm_budget > 0) {
            h = hfm_approx(fold_ds, fold_preds, attrs, version,
                           config.hfm_budget, config.seed, hfm_opt);
          } else if (version == HfmVersion::Prev) {
            h = hfm_prev(fold_ds, fold_preds, attrs[0], hfm_opt);
          } else if (version == HfmVersion::Max) {
            h = hfm_max(fold_ds, fold_preds, attrs, hfm_opt);
          } else {
            h = hfm_avg(fold_ds, fold_preds, attrs, hfm_opt);
          }
          push_cell(id, h.value, true);
        } catch (const MetricError& e) {
          push_cell(id, 0.0, false, e.what());
        }
      };
      if (first_binary >= 0) {
        hfm_cell("hfm.prev", HfmVersion::Prev, {first_binary});
      }
      hfm_cell("hfm.max", HfmVersion::Max, attrs_all);
      hfm_cell("hfm.avg", HfmVersion::Avg, attrs_all);

      result.rows.push_back(std::move(row));
    }
  }

  // Underestimation rows are a re-keying of the probe cells.
  for (const auto& row : result.rows) {
    std::map<std::string, const MetricCell*> by_id;
    for (const auto& cell : row.metrics) by_id[cell.id] = &cell;
    for (int a = 0; a < dataset.n_attributes(); ++a) {
      for (ProbeKind kind : kinds) {
        const MetricCell* binarised = nullptr;
        const MetricCell* alt = nullptr;
        for (Form form : {Form::Orig, Form::Binarised, Form::Ext, Form::Alt,
                          Form::ExtAvg, Form::AltAvg}) {
          auto it = by_id.find(cell_id(kind, form, a));
          if (it == by_id.end()) continue;
          FormValueRow r;
          r.candidate = row.candidate;
          r.fold = row.fold;
          r.attribute = a;
          r.kind = kind;
          r.form = form;
          r.value = it->second->value;
          r.available = it->second->available;
          r.note = it->second->note;
          result.underestimation.rows.push_back(std::move(r));
          if (form == Form::Binarised && it->second->available) {
            binarised = it->second;
          }
          if (form == Form::Alt && it->second->available) alt = it->second;
        }
        if (binarised && alt) {
          ++result.underestimation.folds_compared;
          if (binarised->value < alt->value) {
            ++result.underestimation.folds_binarised_lt_alt;
          }
        }
      }
    }
  }

  // Correlation of each metric with the perturbation deltas, over the
  // (trained candidate, fold) samples.
  std::map<std::string, std::vector<double>> metric_series;
  std::map<std::string, std::vector<double>> delta_series;
  for (const auto& row : result.rows) {
    if (!row.delta) continue;
    delta_series["d_accuracy"].push_back(row.delta->d_accuracy);
    delta_series["d_f1"].push_back(row.delta->d_f1);
    delta_series["d_gmean"].push_back(row.delta->d_gmean);
    for (const auto& cell : row.metrics) {
      if (cell.available) metric_series[cell.id].push_back(cell.value);
    }
  }
  // Series with missing cells would misalign; drop them.
  std::size_t expected = delta_series["d_accuracy"].size();
  for (auto it = metric_series.begin(); it != metric_series.end();) {
    it = it->second.size() == expected ? std::next(it)
                                       : metric_series.erase(it);
  }
  result.correlations = correlation_table(metric_series, delta_series);

  // Individual-vs-group relation over all (candidate, fold) samples.
  std::vector<std::string> individual_ids = {"theil", "dr", "hfm.max",
                                             "hfm.avg"};
  if (first_binary >= 0) individual_ids.push_back("hfm.prev");
  for (const auto& ind : individual_ids) {
    for (const auto& grp : result.metric_ids) {
      if (grp.rfind("dp.", 0) != 0 && grp.rfind("eopp.", 0) != 0 &&
          grp.rfind("ppar.", 0) != 0) {
        continue;
      }
      std::vector<double> xs, ys;
      for (const auto& row : result.rows) {
        const MetricCell* a = nullptr;
        const MetricCell* b = nullptr;
        for (const auto& cell : row.metrics) {
          if (cell.id == ind) a = &cell;
          if (cell.id == grp) b = &cell;
        }
        if (a && b && a->available && b->available) {
          xs.push_back(a->value);
          ys.push_back(b->value);
        }
      }
      CorrelationRow r;
      r.metric = ind;
      r.series = grp;
      r.samples = static_cast<long>(xs.size());
      auto rv = pearson(xs, ys);
      if (rv) {
        r.r = *rv;
        r.defined = true;
      }
      result.relations.push_back(std::move(r));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV emission

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_underestimation_csv(const UnderestimationTable& t,
                               const std::string& path) {
  auto out = open_out(path);
  out << "candidate,fold,attribute,kind,form,value,available,note\n";
  for (const auto& r : t.rows) {
    out << r.candidate << ',' << r.fold << ',' << r.attribute << ','
        << probe_family(r.kind) << ',' << form_name(r.form) << ','
        << (r.available ? format_double(r.value) : "") << ','
        << (r.available ? 1 : 0) << ',' << r.note << '\n';
  }
}

void write_timing_csv(const std::vector<TimingRecord>& records,
                      const std::string& path) {
  auto out = open_out(path);
  out << "metric,form,n,value_count,repetitions,median_ns,min_ns,term_count,"
         "fingerprint\n";
  for (const auto& r : records) {
    char fp[17];
    std::snprintf(fp, sizeof fp, "%016llx",
                  static_cast<unsigned long long>(r.fingerprint));
    out << r.metric << ',' << r.form << ',' << r.n << ',' << r.value_count
        << ',' << r.repetitions << ',' << r.median_ns << ',' << r.min_ns << ','
        << r.term_count << ',' << fp << '\n';
  }
}

void write_correlation_csv(const std::vector<CorrelationRow>& rows,
                           const std::string& path) {
  auto out = open_out(path);
  out << "metric,series,r,samples,defined\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << r.series << ','
        << (r.defined ? format_double(r.r) : "") << ',' << r.samples << ','
        << (r.defined ? 1 : 0) << '\n';
  }
}

void write_relation_csv(const std::vector<CorrelationRow>& rows,
                        const std::string& path) {
  auto out = open_out(path);
  out << "individual,group,r,samples,defined\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << r.series << ','
        << (r.defined ? format_double(r.r) : "") << ',' << r.samples << ','
        << (r.defined ? 1 : 0) << '\n';
  }
}

void write_tradeoff_csv(const ExperimentResult& result,
                        const std::string& path) {
  auto out = open_out(path);
  out << "candidate,fold,accuracy,f1,gmean";
  for (const auto& id : result.metric_ids) out << ',' << id;
  out << '\n';
  for (const auto& row : result.rows) {
    out << row.candidate << ',' << row.fold << ','
        << format_double(row.perf.accuracy) << ',' << format_double(row.perf.f1)
        << ',' << format_double(row.perf.gmean);
    std::map<std::string, const MetricCell*> by_id;
    for (const auto& cell : row.metrics) by_id[cell.id] = &cell;
    for (const auto& id : result.metric_ids) {
      auto it = by_id.find(id);
      out << ',';
      if (it != by_id.end() && it->second->available) {
        out << format_double(it->second->value);
      }
    }
    out << '\n';
  }
}

void write_delta_csv(const ExperimentResult& result, const std::string& path) {
  auto out = open_out(path);
  out << "candidate,fold,d_accuracy,d_f1,d_gmean\n";
  for (const auto& row : result.rows) {
    if (!row.delta) continue;
    out << row.candidate << ',' << row.fold << ','
        << format_double(row.delta->d_accuracy) << ','
        << format_double(row.delta->d_f1) << ','
        << format_double(row.delta->d_gmean) << '\n';
  }
}

}  // namespace fairlens
