#include "fairlens/report.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <sstream>

#include "fairlens/hfm.hpp"
#include "fairlens/individual.hpp"

namespace fairlens {

using json = nlohmann::json;

const std::vector<std::string>& known_metric_ids() {
  static const std::vector<std::string> ids = {
      "dp",   "eopp",  "peq",     "ppar",        "npv",      "eo",
      "di",   "dt",    "csp",     "bgl",         "gammasf",  "minimax_gap",
      "gei",  "theil", "dr",      "lipschitz",   "hfm.prev", "hfm.max",
      "hfm.avg", "edf", "dpr",    "eoppr",       "cspr",     "gbr_int",
      "idi",  "multiacc", "calib", "lmax",       "ber"};
  return ids;
}

std::vector<std::string> default_metric_ids() {
  std::vector<std::string> ids = known_metric_ids();
  ids.erase(std::remove(ids.begin(), ids.end(), "ber"), ids.end());
  return ids;
}

namespace {

constexpr const char* kJoint = "*";

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Source {
  std::string name;
  PredictionSet predictions;            // full-dataset predictions
  std::shared_ptr<Model> model;         // null for external files
};

Vector scores_or_hard(const Source& src, bool& flagged) {
  if (src.predictions.scores) {
    flagged = false;
    return *src.predictions.scores;
  }
  flagged = true;
  return src.predictions.hard.cast<double>();
}

using Task = std::function<MetricRow()>;

MetricRow base_row(const std::string& id, const Source& src,
                   const std::string& attribute) {
  MetricRow row;
  row.id = id;
  row.source = src.name;
  row.attribute = attribute;
  return row;
}

}  // namespace

bool FairnessReport::has_errors() const {
  return std::any_of(rows.begin(), rows.end(),
                     [](const MetricRow& r) { return !r.error.empty(); });
}

json FairnessReport::to_json() const {
  json j;
  j["fingerprint"] = hex16(fingerprint);
  j["n"] = n;
  j["n_features"] = n_features;
  j["seed"] = seed;
  j["sources"] = sources;
  j["dataset_flags"] = dataset_flags;
  json perf = json::object();
  for (const auto& [src, p] : performance) {
    perf[src] = {{"accuracy", p.accuracy},
                 {"f1", p.f1},
                 {"gmean", p.gmean},
                 {"f1_flagged", p.f1_flagged},
                 {"gmean_flagged", p.gmean_flagged}};
  }
  j["performance"] = perf;
  json metrics = json::array();
  for (const auto& row : rows) {
    json m;
    m["id"] = row.id;
    m["source"] = row.source;
    m["attribute"] = row.attribute;
    if (row.value) {
      m["value"] = *row.value;
    } else {
      m["value"] = nullptr;
    }
    if (!row.skipped_groups.empty()) m["skipped_groups"] = row.skipped_groups;
    if (!row.flags.empty()) m["flags"] = row.flags;
    if (!row.error.empty()) m["error"] = row.error;
    if (!row.details.is_null()) m["details"] = row.details;
    if (emit_timings) m["wall_time_ns"] = row.wall_time_ns;
    metrics.push_back(std::move(m));
  }
  j["metrics"] = metrics;
  return j;
}

std::string FairnessReport::to_csv() const {
  std::ostringstream out;
  out << "id,source,attribute,value,error\n";
  for (const auto& row : rows) {
    out << row.id << ',' << row.source << ',' << row.attribute << ','
        << (row.value ? format_double(*row.value) : "") << ',' << row.error
        << '\n';
  }
  return out.str();
}

FairnessReport run_audit(const Dataset& dataset, const AuditConfig& config) {
  // Reject unknown metric ids before any work starts.
  std::vector<std::string> selected =
      config.metrics.empty() ? default_metric_ids() : config.metrics;
  for (const auto& id : selected) {
    const auto& known = known_metric_ids();
    if (std::find(known.begin(), known.end(), id) == known.end()) {
      throw ConfigError("unknown metric id '" + id + "'");
    }
  }
  auto wants = [&](const std::string& id) {
    return std::find(selected.begin(), selected.end(), id) != selected.end();
  };
  std::vector<Form> forms = config.forms;
  if (forms.empty()) {
    forms = {Form::Orig, Form::Binarised, Form::Ext,
             Form::Alt,  Form::ExtAvg,    Form::AltAvg};
  }

  FairnessReport report;
  report.fingerprint = dataset.fingerprint();
  report.n = dataset.n();
  report.n_features = dataset.n_features();
  report.seed = config.seed;
  report.dataset_flags = dataset.flags;
  report.emit_timings = config.emit_timings;

  // Sources: out-of-fold pooled predictions per learner (plus a full-data
  // model for the re-prediction metrics), and the external files as given.
  std::vector<Source> sources;
  std::vector<int> all_rows(static_cast<std::size_t>(dataset.n()));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  for (const auto& spec : config.learners) {
    Source src;
    src.name = "learner:" + spec.id();
    CvResult cv = cross_validate(dataset, spec, config.k, config.seed);
    IntVector hard(dataset.n());
    Vector scores(dataset.n());
    bool have_scores = true;
    for (const auto& fold : cv.folds) {
      for (std::size_t i = 0; i < fold.test_rows.size(); ++i) {
        hard[fold.test_rows[i]] = fold.predictions.hard[static_cast<Index>(i)];
        if (fold.predictions.scores) {
          scores[fold.test_rows[i]] =
              (*fold.predictions.scores)[static_cast<Index>(i)];
        } else {
          have_scores = false;
        }
      }
    }
    src.predictions.hard = std::move(hard);
    if (have_scores) src.predictions.scores = std::move(scores);
    src.predictions.source = src.name;
    src.predictions.seed = config.seed;
    src.model = train(spec, dataset, all_rows, config.seed);
    sources.push_back(std::move(src));
  }
  for (const auto& ext : config.predictions) {
    ext.validate(dataset.n());
    Source src;
    src.name = ext.source;
    src.predictions = ext;
    sources.push_back(std::move(src));
  }
  if (sources.empty()) {
    throw ConfigError("audit needs a learner or a prediction file");
  }
  for (const auto& src : sources) report.sources.push_back(src.name);

  std::vector<GroupPartition> parts;
  for (int a = 0; a < dataset.n_attributes(); ++a) {
    parts.push_back(partition(dataset, a));
  }
  auto attr_name = [&](int a) {
    return dataset.attributes[static_cast<std::size_t>(a)].name;
  };

  for (const auto& src : sources) {
    report.performance[src.name] =
        performance(src.predictions.hard, dataset.labels);
  }

  // Build the task list; each task owns one output row.
  std::vector<Task> tasks;
  auto add = [&](Task t) { tasks.push_back(std::move(t)); };

  // Wraps a computation so failures become error rows in place.
  auto guarded = [](MetricRow row, std::function<void(MetricRow&)> fill) {
    return [row = std::move(row), fill = std::move(fill)]() mutable {
      auto t0 = std::chrono::steady_clock::now();
      try {
        fill(row);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      row.wall_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
      return row;
    };
  };

  const std::map<std::string, ProbeKind> probe_ids = {
      {"dp", ProbeKind::DP},
      {"eopp", ProbeKind::EOpp},
      {"peq", ProbeKind::FPRBalance},
      {"ppar", ProbeKind::PP},
      {"npv", ProbeKind::NPVParity}};

  for (const auto& src : sources) {
    const IntVector& hard = src.predictions.hard;

    for (int a = 0; a < dataset.n_attributes(); ++a) {
      const GroupPartition& part = parts[static_cast<std::size_t>(a)];
      bool binary = part.n_groups() == 2;

      for (const auto& [family, kind] : probe_ids) {
        if (!wants(family)) continue;
        for (Form form : forms) {
          if (form == Form::Orig && !binary) continue;
          ProbeKind k = kind;
          add(guarded(base_row(family + "." + form_name(form), src,
                               attr_name(a)),
                      [&, k, form, a](MetricRow& row) {
                        MetricResult m = probe_metric(
                            k, hard, dataset.labels,
                            parts[static_cast<std::size_t>(a)], form);
                        row.value = m.value;
                        row.skipped_groups = m.skipped_groups;
                        row.flags = m.flags;
                      }));
        }
      }
      if (wants("eo")) {
        for (Form form : forms) {
          if (form == Form::Orig && !binary) continue;
          add(guarded(base_row("eo." + form_name(form), src, attr_name(a)),
                      [&, form, a](MetricRow& row) {
                        MetricResult m = equalized_odds(
                            hard, dataset.labels,
                            parts[static_cast<std::size_t>(a)], form);
                        row.value = m.value;
                        row.skipped_groups = m.skipped_groups;
                        row.flags = m.flags;
                      }));
        }
      }
      if (wants("di")) {
        add(guarded(base_row("di", src, attr_name(a)), [&, a](MetricRow& row) {
          DisparateImpactResult di = disparate_impact(
              hard, parts[static_cast<std::size_t>(a)], config.tau);
          row.value = di.ratio;
          row.details = {{"passed", di.passed},
                         {"tau", di.tau},
                         {"rate_marginalised", di.rate_marginalised},
                         {"rate_privileged", di.rate_privileged}};
        }));
      }
      if (wants("dt")) {
        add(guarded(base_row("dt", src, attr_name(a)), [&, a](MetricRow& row) {
          MetricResult m =
              disparate_treatment(hard, parts[static_cast<std::size_t>(a)]);
          row.value = m.value;
          row.skipped_groups = m.skipped_groups;
        }));
      }
      if (wants("csp")) {
        add(guarded(base_row("csp", src, attr_name(a)), [&, a](MetricRow& row) {
          if (dataset.stratum.empty()) {
            row.flags.push_back("skipped: no stratum column in manifest");
            return;
          }
          ConditionalSpResult csp = conditional_statistical_parity(
              hard, parts[static_cast<std::size_t>(a)], dataset.stratum);
          row.value = csp.max_value;
          json strata = json::array();
          for (const auto& s : csp.strata) {
            strata.push_back({{"stratum", s.stratum},
                              {"skipped", s.skipped},
                              {"value", s.value}});
          }
          row.details = {{"strata", strata}};
          if (csp.any_skipped) row.flags.push_back("some strata skipped");
        }));
      }
      if (wants("bgl")) {
        add(guarded(base_row("bgl", src, attr_name(a)), [&, a](MetricRow& row) {
          bool flagged = false;
          Vector s = scores_or_hard(src, flagged);
          if (flagged) row.flags.push_back("hard predictions used as scores");
          Vector losses(dataset.n());
          for (Index i = 0; i < dataset.n(); ++i) {
            losses[i] = std::abs(static_cast<double>(dataset.labels[i]) - s[i]);
          }
          BglResult b = bounded_group_loss(
              losses, parts[static_cast<std::size_t>(a)], config.xi);
          double worst = 0.0;
          json per_group = json::array();
          for (double v : b.group_losses) {
            if (std::isnan(v)) {
              per_group.push_back(nullptr);
            } else {
              per_group.push_back(v);
              worst = std::max(worst, v);
            }
          }
          row.value = worst;
          row.skipped_groups = b.skipped_groups;
          row.details = {{"xi", b.xi},
                         {"passed", b.passed},
                         {"group_losses", per_group},
                         {"offending_groups", b.offending_groups}};
        }));
      }
      if (wants("gammasf")) {
        add(guarded(base_row("gammasf", src, attr_name(a)),
                    [&, a](MetricRow& row) {
                      GammaSubgroupResult g = gamma_subgroup_fairness(
                          hard, dataset.labels,
                          parts[static_cast<std::size_t>(a)]);
                      row.value = g.max_product;
                      row.skipped_groups = g.skipped_groups;
                      json entries = json::array();
                      for (const auto& e : g.entries) {
                        entries.push_back({{"group", e.group},
                                           {"alpha", e.alpha},
                                           {"beta", e.beta},
                                           {"product", e.product}});
                      }
                      row.details = {{"entries", entries}};
                    }));
      }
      if (wants("edf")) {
        add(guarded(base_row("edf.epsilon", src, attr_name(a)),
                    [&, a](MetricRow& row) {
                      EdfResult e = empirical_differential_fairness(
                          hard, parts[static_cast<std::size_t>(a)],
                          config.kappa);
                      row.value = e.epsilon;
                      if (e.smoothed_zero_cell) {
                        row.flags.push_back("zero count smoothed with kappa");
                      }
                      row.details = {{"kappa", config.kappa}};
                    }));
      }
      const std::map<std::string, RatioKind> ratio_ids = {
          {"dpr", RatioKind::DPR},
          {"eoppr", RatioKind::EOppR},
          {"cspr", RatioKind::CSPR},
          {"gbr_int", RatioKind::GBR_INT}};
      for (const auto& [rid, rkind] : ratio_ids) {
        if (!wants(rid)) continue;
        RatioKind rk = rkind;
        add(guarded(base_row(rid, src, attr_name(a)),
                    [&, rk, a](MetricRow& row) {
                      if (rk == RatioKind::CSPR && dataset.stratum.empty()) {
                        row.flags.push_back(
                            "skipped: no stratum column in manifest");
                        return;
                      }
                      RatioResult r = minmax_ratio(
                          rk, hard, dataset.labels,
                          parts[static_cast<std::size_t>(a)],
                          rk == RatioKind::CSPR ? &dataset.stratum : nullptr);
                      row.value = r.value;
                      row.skipped_groups = r.skipped_groups;
                      if (!r.skipped_strata.empty()) {
                        row.flags.push_back("some strata skipped");
                      }
                    }));
      }
      if (wants("idi")) {
        add(guarded(base_row("idi", src, attr_name(a)), [&, a](MetricRow& row) {
          row.value = intersectional_disparate_impact(
              hard, parts[static_cast<std::size_t>(a)]);
        }));
      }
      if (wants("multiacc")) {
        add(guarded(
            base_row("multiacc.max_residual", src, attr_name(a)),
            [&, a](MetricRow& row) {
              bool flagged = false;
              Vector s = scores_or_hard(src, flagged);
              if (flagged) {
                row.flags.push_back("hard predictions used as scores");
              }
              MultiaccResult m = multiaccuracy_check(
                  s, dataset.labels, parts[static_cast<std::size_t>(a)],
                  config.alpha);
              row.value = m.max_residual;
              row.details = {{"alpha", m.alpha},
                             {"passed", m.passed},
                             {"residuals", m.residuals}};
            }));
      }
      if (wants("calib")) {
        add(guarded(
            base_row("calib.max_gap", src, attr_name(a)),
            [&, a](MetricRow& row) {
              if (!src.predictions.scores) {
                row.flags.push_back("skipped: source has no scores");
                return;
              }
              CalibrationResult c = calibration_by_group(
                  *src.predictions.scores, dataset.labels,
                  parts[static_cast<std::size_t>(a)]);
              row.value = c.max_gap;
              row.flags.insert(row.flags.end(), c.flags.begin(), c.flags.end());
              row.details = {{"bins", c.bins}};
            }));
      }
      if (wants("lmax")) {
        add(guarded(base_row("lmax", src, attr_name(a)),
                    [&, a](MetricRow& row) {
                      if (!src.predictions.scores) {
                        row.flags.push_back("skipped: source has no scores");
                        return;
                      }
                      row.value = worst_case_log_loss(
                          *src.predictions.scores, dataset.labels,
                          parts[static_cast<std::size_t>(a)]);
                      row.flags.push_back("diagnostic only");
                    }));
      }
      if (wants("hfm.prev")) {
        add(guarded(base_row("hfm.prev", src, attr_name(a)),
                    [&, a, binary](MetricRow& row) {
                      if (!binary) {
                        row.flags.push_back("skipped: attribute not binary");
                        return;
                      }
                      HfmResult h = config.approx_budget > 0
                                        ? hfm_approx(dataset, src.predictions,
                                                     {a}, HfmVersion::Prev,
                                                     config.approx_budget,
                                                     config.seed)
                                        : hfm_prev(dataset, src.predictions, a);
                      row.value = h.value;
                      row.details = {{"g_f", h.g_f},
                                     {"g_y", h.g_y},
                                     {"exact", h.exact},
                                     {"budget", h.budget}};
                    }));
      }
      if (wants("ber")) {
        add(guarded(base_row("ber", src, attr_name(a)), [&, a](MetricRow& row) {
          std::vector<LearnerSpec> learners = config.learners;
          if (learners.empty()) {
            learners = {LearnerSpec::parse("stump"),
                        LearnerSpec::parse("bagging(15)")};
          }
          BerResult b = ber_audit(dataset, a, learners, config.epsilon,
                                  config.seed, config.k);
          row.value = b.min_ber;
          if (b.binarized_flag) {
            row.flags.push_back("multi-valued attribute audited priv-vs-rest");
          }
          json entries = json::array();
          for (const auto& e : b.entries) {
            entries.push_back({{"learner", e.learner}, {"ber", e.ber}});
          }
          row.details = {{"epsilon", b.epsilon},
                         {"fair", b.fair},
                         {"entries", entries}};
        }));
      }
    }

    // Attribute-independent metrics, one row per source.
    if (wants("gei")) {
      add(guarded(base_row("gei(" + format_double(config.alpha) + ")", src,
                           kJoint),
                  [&](MetricRow& row) {
                    row.value = general_entropy_index(hard, dataset.labels,
                                                      config.alpha);
                  }));
    }
    if (wants("theil")) {
      add(guarded(base_row("theil", src, kJoint), [&](MetricRow& row) {
        row.value = theil_index(hard, dataset.labels);
      }));
    }
    if (wants("dr")) {
      add(guarded(base_row("dr", src, kJoint), [&](MetricRow& row) {
        if (!src.model) {
          row.flags.push_back(
              "skipped: external predictions cannot re-predict");
          return;
        }
        DrOptions opt;
        opt.seed = config.seed;
        DrResult dr = discriminative_risk(*src.model, dataset, opt);
        row.value = dr.value;
        if (!dr.unperturbable.empty()) {
          row.flags.push_back("some attributes unperturbable");
        }
      }));
    }
    if (wants("lipschitz")) {
      add(guarded(base_row("lipschitz.constant", src, kJoint),
                  [&](MetricRow& row) {
                    if (!src.predictions.scores) {
                      row.flags.push_back("skipped: source has no scores");
                      return;
                    }
                    LipschitzOptions opt;
                    opt.seed = config.seed;
                    opt.epsilon = config.epsilon;
                    LipschitzResult l = lipschitz_audit(
                        *src.predictions.scores, dataset.features, opt);
                    row.value = l.constant;
                    row.details = {{"pairs", l.pairs_evaluated},
                                   {"sampled", l.sampled},
                                   {"hard_violations", l.hard_violations}};
                  }));
      add(guarded(base_row("lipschitz.violations", src, kJoint),
                  [&](MetricRow& row) {
                    if (!src.predictions.scores) {
                      row.flags.push_back("skipped: source has no scores");
                      return;
                    }
                    LipschitzOptions opt;
                    opt.seed = config.seed;
                    opt.epsilon = config.epsilon;
                    LipschitzResult l = lipschitz_audit(
                        *src.predictions.scores, dataset.features, opt);
                    row.value = l.violation_rate;
                    row.details = {{"epsilon", opt.epsilon}};
                  }));
    }
    for (const char* id : {"hfm.max", "hfm.avg"}) {
      if (!wants(id)) continue;
      bool is_max = std::string(id) == "hfm.max";
      add(guarded(base_row(id, src, kJoint), [&, is_max](MetricRow& row) {
        std::vector<int> attrs(static_cast<std::size_t>(dataset.n_attributes()));
        std::iota(attrs.begin(), attrs.end(), 0);
        HfmResult h;
        if (config.approx_budget > 0) {
          h = hfm_approx(dataset, src.predictions, attrs,
                         is_max ? HfmVersion::Max : HfmVersion::Avg,
                         config.approx_budget, config.seed);
        } else {
          h = is_max ? hfm_max(dataset, src.predictions, attrs)
                     : hfm_avg(dataset, src.predictions, attrs);
        }
        row.value = h.value;
        row.details = {{"g_f", h.g_f},
                       {"g_y", h.g_y},
                       {"exact", h.exact},
                       {"budget", h.budget}};
      }));
    }
  }

  // One minimax row per attribute across every source.
  if (wants("minimax_gap")) {
    for (int a = 0; a < dataset.n_attributes(); ++a) {
      MetricRow row;
      row.id = "minimax_gap";
      row.source = kJoint;
      row.attribute = attr_name(a);
      add(guarded(std::move(row), [&, a](MetricRow& out) {
        std::vector<IntVector> candidates;
        for (const auto& src : sources) candidates.push_back(src.predictions.hard);
        MinimaxResult m = minimax_gap(candidates, dataset.labels,
                                      parts[static_cast<std::size_t>(a)]);
        double worst_gap = 0.0;
        json per_candidate = json::array();
        for (std::size_t c = 0; c < m.candidates.size(); ++c) {
          worst_gap = std::max(worst_gap, m.candidates[c].gap);
          per_candidate.push_back({{"source", sources[c].name},
                                   {"max_error", m.candidates[c].max_error},
                                   {"gap", m.candidates[c].gap}});
        }
        out.value = worst_gap;
        out.skipped_groups = m.skipped_groups;
        out.details = {{"best_max_error", m.best_max_error},
                       {"candidates", per_candidate}};
      }));
    }
  }

  // Run the task list; slots keep the report order schedule-independent.
  std::vector<MetricRow> rows(tasks.size());
  int threads = config.threads > 0 ? config.threads : max_workers();
  parallel_for(static_cast<Index>(tasks.size()), threads, [&](Index i) {
    rows[static_cast<std::size_t>(i)] = tasks[static_cast<std::size_t>(i)]();
  });
  report.rows = std::move(rows);
  return report;
}

}  // namespace fairlens
