// fairlens: fairness-metric audit CLI.
//   fairlens validate   --manifest data.json
//   fairlens audit      --manifest data.json --learners bagging(25) --out run/
//   fairlens bench      --sizes 10000,30000 --out run/
//   fairlens experiment --manifest data.json --seed 7 --out run/

#include <CLI11.hpp>

#include "fairlens/cli.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string token;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-metric audit toolkit"};
  app.require_subcommand(1);

  fairlens::RunConfig config;
  std::string metrics, forms, learners, sizes, value_counts;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", config.manifest_path,
                    "dataset manifest (JSON)");
    cmd->add_option("--predictions", config.prediction_paths,
                    "external prediction CSV (repeatable)");
    cmd->add_option("--metrics", metrics, "comma-separated metric families");
    cmd->add_option("--forms", forms, "comma-separated probe forms");
    cmd->add_option("--seed", config.seed, "seed for every stochastic path");
    cmd->add_option("--k", config.k, "cross-validation folds");
    cmd->add_option("--learners", learners, "comma-separated learner ids");
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--format", config.format, "report format: json|csv");
    cmd->add_option("--approx-budget", config.approx_budget,
                    "HFM anchor budget (0 = exact)");
    cmd->add_option("--kappa", config.kappa, "EDF smoothing constant");
    cmd->add_option("--alpha", config.alpha,
                    "GEI exponent / multiaccuracy threshold");
    cmd->add_option("--epsilon", config.epsilon,
                    "Lipschitz ratio and BER threshold");
    cmd->add_option("--tau", config.tau, "disparate-impact pass threshold");
    cmd->add_flag("--emit-timings", config.emit_timings,
                  "include wall times in report.json (breaks byte-identical"
                  " reruns)");
  };

  CLI::App* validate = app.add_subcommand("validate",
                                          "ingest and check expected counts");
  add_common(validate);
  CLI::App* audit = app.add_subcommand("audit", "compute the metric suite");
  add_common(audit);
  CLI::App* bench = app.add_subcommand("bench", "timing benchmark grid");
  add_common(bench);
  bench->add_option("--sizes", sizes, "comma-separated dataset sizes");
  bench->add_option("--value-counts", value_counts,
                    "comma-separated attribute value counts");
  bench->add_option("--reps", config.repetitions, "repetitions per cell");
  CLI::App* experiment =
      app.add_subcommand("experiment", "full figure-family pipeline");
  add_common(experiment);

  CLI11_PARSE(app, argc, argv);

  config.command = app.get_subcommands().front()->get_name();
  config.metrics = split_list(metrics);
  config.forms = split_list(forms);
  config.learners = split_list(learners);
  for (const auto& s : split_list(sizes)) config.sizes.push_back(std::stol(s));
  for (const auto& s : split_list(value_counts)) {
    config.value_counts.push_back(std::stoi(s));
  }
  return fairlens::run_cli(config);
}
