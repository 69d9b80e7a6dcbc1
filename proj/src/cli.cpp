#include "fairlens/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fairlens/report.hpp"

namespace fairlens {

namespace {

namespace fs = std::filesystem;

Dataset load_dataset(const RunConfig& config) {
  if (config.manifest_path.empty()) {
    throw ConfigError("this command needs --manifest");
  }
  DatasetManifest manifest = DatasetManifest::from_json_file(config.manifest_path);
  return ingest(manifest);
}

std::vector<LearnerSpec> parse_learners(const std::vector<std::string>& ids) {
  std::vector<LearnerSpec> specs;
  for (const auto& id : ids) specs.push_back(LearnerSpec::parse(id));
  return specs;
}

std::vector<Form> parse_forms(const std::vector<std::string>& names) {
  std::vector<Form> forms;
  for (const auto& name : names) {
    auto f = parse_form(name);
    if (!f) throw ConfigError("unknown form '" + name + "'");
    forms.push_back(*f);
  }
  return forms;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

}  // namespace

int cmd_validate(const RunConfig& config) {
  if (config.manifest_path.empty()) {
    throw ConfigError("validate needs --manifest");
  }
  DatasetManifest manifest =
      DatasetManifest::from_json_file(config.manifest_path);
  Dataset ds;
  try {
    ds = ingest(manifest);
  } catch (const ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kMetricFailure;
  }
  std::cout << "ok: n=" << ds.n() << " prep_features=" << ds.n_features();
  for (std::size_t a = 0; a < ds.attributes.size(); ++a) {
    const auto& spec = ds.attributes[a];
    long priv = 0;
    int code = spec.privileged_code();
    for (Index i = 0; i < ds.n(); ++i) {
      if (ds.sensitive(i, static_cast<Index>(a)) == code) ++priv;
    }
    std::cout << " " << spec.name << "(values=" << spec.n_values()
              << ",privileged=" << priv << ")";
  }
  std::cout << "\n";
  for (const auto& flag : ds.flags) std::cout << "note: " << flag << "\n";
  return kOk;
}

int cmd_audit(const RunConfig& config) {
  Dataset ds = load_dataset(config);

  AuditConfig audit;
  audit.metrics = config.metrics;
  audit.forms = parse_forms(config.forms);
  audit.learners = parse_learners(config.learners);
  for (const auto& path : config.prediction_paths) {
    audit.predictions.push_back(load_predictions(path, ds.n()));
  }
  if (audit.learners.empty() && audit.predictions.empty()) {
    audit.learners.push_back(LearnerSpec::parse("bagging(25)"));
  }
  audit.k = config.k;
  audit.seed = config.seed;
  audit.kappa = config.kappa;
  audit.alpha = config.alpha;
  audit.epsilon = config.epsilon;
  audit.tau = config.tau;
  audit.approx_budget = config.approx_budget;
  audit.emit_timings = config.emit_timings;

  FairnessReport report = run_audit(ds, audit);

  ensure_out_dir(config.out_dir);
  if (config.format == "csv") {
    write_text(config.out_dir + "/report.csv", report.to_csv());
  } else if (config.format == "json") {
    write_text(config.out_dir + "/report.json", report.to_json().dump(2) + "\n");
  } else {
    throw ConfigError("unknown format '" + config.format + "'");
  }
  if (report.has_errors()) {
    for (const auto& row : report.rows) {
      if (!row.error.empty()) {
        std::cerr << row.id << " (" << row.source << ", " << row.attribute
                  << "): " << row.error << "\n";
      }
    }
    return kMetricFailure;
  }
  return kOk;
}

int cmd_bench(const RunConfig& config) {
  TimingBenchConfig bench;
  if (!config.metrics.empty()) bench.metrics = config.metrics;
  if (!config.sizes.empty()) bench.sizes = config.sizes;
  if (!config.value_counts.empty()) bench.value_counts = config.value_counts;
  bench.repetitions = config.repetitions;
  bench.seed = config.seed;
  std::vector<TimingRecord> records = timing_bench(bench);
  ensure_out_dir(config.out_dir);
  write_timing_csv(records, config.out_dir + "/timing.csv");

  // Derived ratios between the extension forms and the binarised baseline.
  std::map<std::pair<long, int>, std::map<std::string, std::int64_t>> medians;
  for (const auto& r : records) {
    medians[{r.n, r.value_count}][r.metric + "." + r.form] = r.median_ns;
  }
  std::ostringstream ratios;
  ratios << "n,value_count,ratio,value\n";
  for (const auto& [key, m] : medians) {
    for (const auto& family : {"dp", "eopp", "ppar", "peq"}) {
      auto base = m.find(std::string(family) + ".binarised");
      if (base == m.end() || base->second == 0) continue;
      for (const auto& form : {"ext", "alt"}) {
        auto it = m.find(std::string(family) + "." + form);
        if (it == m.end()) continue;
        ratios << key.first << ',' << key.second << ',' << family << '.'
               << form << "/binarised,"
               << format_double(static_cast<double>(it->second) /
                                static_cast<double>(base->second))
               << '\n';
      }
    }
  }
  write_text(config.out_dir + "/timing_ratios.csv", ratios.str());
  return kOk;
}

int cmd_experiment(const RunConfig& config) {
  Dataset ds = load_dataset(config);

  ExperimentConfig exp;
  exp.learners = parse_learners(config.learners);
  if (exp.learners.empty() && config.prediction_paths.empty()) {
    exp.learners = {LearnerSpec::parse("bagging(25)"),
                    LearnerSpec::parse("adaboost(50)")};
  }
  for (const auto& path : config.prediction_paths) {
    exp.external.push_back(load_predictions(path, ds.n()));
  }
  exp.k = config.k;
  exp.seed = config.seed;
  exp.hfm_budget = config.approx_budget;

  ExperimentResult result = run_experiment(ds, exp);

  ensure_out_dir(config.out_dir);
  write_underestimation_csv(result.underestimation,
                            config.out_dir + "/underestimation.csv");
  write_delta_csv(result, config.out_dir + "/delta.csv");
  write_correlation_csv(result.correlations,
                        config.out_dir + "/correlation.csv");
  write_tradeoff_csv(result, config.out_dir + "/tradeoff.csv");
  write_relation_csv(result.relations, config.out_dir + "/relation.csv");

  nlohmann::json summary;
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(result.fingerprint));
  summary["fingerprint"] = fp;
  summary["seed"] = config.seed;
  summary["k"] = exp.k;
  nlohmann::json candidates = nlohmann::json::array();
  nlohmann::json perf = nlohmann::json::array();
  for (const auto& row : result.rows) {
    perf.push_back({{"candidate", row.candidate},
                    {"fold", row.fold},
                    {"accuracy", row.perf.accuracy},
                    {"f1", row.perf.f1},
                    {"gmean", row.perf.gmean}});
  }
  for (const auto& spec : exp.learners) candidates.push_back(spec.id());
  for (const auto& ext : exp.external) candidates.push_back(ext.source);
  summary["candidates"] = candidates;
  summary["performance"] = perf;
  summary["underestimation"] = {
      {"folds_compared", result.underestimation.folds_compared},
      {"folds_binarised_lt_alt",
       result.underestimation.folds_binarised_lt_alt}};
  write_text(config.out_dir + "/report.json", summary.dump(2) + "\n");
  return kOk;
}

int run_cli(const RunConfig& config) {
  try {
    if (config.command == "validate") return cmd_validate(config);
    if (config.command == "audit") return cmd_audit(config);
    if (config.command == "bench") return cmd_bench(config);
    if (config.command == "experiment") return cmd_experiment(config);
    throw ConfigError("unknown command '" + config.command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kMetricFailure;
  } catch (const MetricError& e) {
    std::cerr << "metric error: " << e.what() << "\n";
    return kMetricFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  }
}

}  // namespace fairlens
