#include "fairlens/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "fairlens/individual.hpp"
#include "oracle.hpp"
#include "util.hpp"

using namespace fairlens;
using testutil::close;
namespace fs = std::filesystem;

TEST_CASE("synthetic datasets have the planted structure") {
  SyntheticSpec spec;
  spec.n = 300;
  spec.value_counts = {3, 2};
  spec.group_weights = {0.5, 0.3, 0.2};
  spec.group_label_rates = {0.2, 0.5, 0.8};
  spec.seed = 1;
  Dataset ds = make_synthetic(spec);

  GroupPartition part = partition(ds, 0);
  CHECK(part.groups[0].size() == 150);
  CHECK(part.groups[1].size() == 90);
  CHECK(part.groups[2].size() == 60);
  long pos0 = 0;
  for (int r : part.groups[0]) pos0 += ds.labels[r];
  CHECK(pos0 == 30);  // floor(0.2 * 150)
  CHECK((ds.features.array() >= 0.0).all());
  CHECK((ds.features.array() <= 1.0).all());

  SUBCASE("planted predictions hit the requested rates") {
    PredictionSet p = planted_predictions(ds, 0, {0.1, 0.5, 0.9}, 2);
    long hits = 0;
    for (int r : part.groups[1]) hits += p.hard[r];
    CHECK(hits == 45);  // floor(0.5 * 90)
  }
  SUBCASE("generation is deterministic") {
    CHECK(make_synthetic(spec).fingerprint() == ds.fingerprint());
  }
}

TEST_CASE("underestimation tables") {
  SUBCASE("binary attribute: binarised equals alt in every fold") {
    SyntheticSpec spec;
    spec.n = 250;
    spec.value_counts = {2};
    spec.seed = 3;
    Dataset ds = make_synthetic(spec);
    PredictionSet p = planted_predictions(ds, 0, {0.3, 0.6}, 4);
    auto table = underestimation_for_predictions(
        ds, p, 5, 9, {ProbeKind::DP}, 0, "planted");
    std::map<int, double> binarised, alt;
    for (const auto& row : table.rows) {
      if (!row.available) continue;
      if (row.form == Form::Binarised) binarised[row.fold] = row.value;
      if (row.form == Form::Alt) alt[row.fold] = row.value;
    }
    REQUIRE(binarised.size() == 5);
    for (const auto& [fold, v] : binarised) CHECK(v == alt[fold]);
    CHECK(table.folds_binarised_lt_alt == 0);
  }
  SUBCASE("straddling rates make binarised lose in every fold") {
    // Marginalised rates straddle the privileged rate so pooling cancels.
    SyntheticSpec spec;
    spec.n = 600;
    spec.value_counts = {3};
    spec.group_label_rates = {0.5, 0.5, 0.5};
    spec.seed = 5;
    Dataset ds = make_synthetic(spec);
    PredictionSet p = planted_predictions(ds, 0, {0.5, 0.2, 0.8}, 6);
    auto table = underestimation_for_predictions(
        ds, p, 5, 10, {ProbeKind::DP}, 0, "planted");
    CHECK(table.folds_compared == 5);
    CHECK(table.folds_binarised_lt_alt == 5);
  }
  SUBCASE("equal rates give zero in every form") {
    SyntheticSpec spec;
    spec.n = 300;
    spec.value_counts = {3};
    spec.seed = 7;
    Dataset ds = make_synthetic(spec);
    PredictionSet p = planted_predictions(ds, 0, {0.5, 0.5, 0.5}, 8);
    auto table = underestimation_for_predictions(
        ds, p, 3, 11, {ProbeKind::DP}, 0, "planted");
    for (const auto& row : table.rows) {
      if (row.available) CHECK(row.value <= 0.11);  // fold noise only
    }
  }
  SUBCASE("the CV variant trains per learner and emits one block each") {
    SyntheticSpec spec;
    spec.n = 200;
    spec.value_counts = {3};
    spec.seed = 9;
    Dataset ds = make_synthetic(spec);
    auto table = underestimation_table(
        ds, {LearnerSpec::parse("stump"), LearnerSpec::parse("bagging(5)")}, 4,
        13, {ProbeKind::DP, ProbeKind::EOpp}, 0);
    // 2 learners x 4 folds x 2 kinds x 6 forms.
    CHECK(table.rows.size() == 2 * 4 * 2 * 6);
  }
}

TEST_CASE("delta performance under perturbation") {
  SyntheticSpec spec;
  spec.n = 400;
  spec.value_counts = {2};
  spec.seed = 15;
  Dataset ds = make_synthetic(spec);

  SUBCASE("a sensitive-blind model sees zero deltas") {
    SensitiveBlindModel blind;
    DeltaPerformance d = delta_performance(blind, ds, 3);
    CHECK(d.d_accuracy == 0.0);
    CHECK(d.d_f1 == 0.0);
    CHECK(d.d_gmean == 0.0);
  }
  SUBCASE("echo model: delta equals direct recomputation") {
    AttributeEchoModel echo(0);
    DeltaPerformance d = delta_performance(echo, ds, 3);
    IntVector base = echo.predict(ds.features, ds.sensitive);
    PerturbResult p = perturb(ds, 3);
    IntVector flipped = echo.predict(ds.features, p.sensitive);
    double acc1 = performance(base, ds.labels).accuracy;
    double acc2 = performance(flipped, ds.labels).accuracy;
    CHECK(close(d.d_accuracy, std::abs(acc1 - acc2)));
  }
  SUBCASE("the DR bound holds for every planted model and seed") {
    for (double theta : {0.1, 0.3, 0.7}) {
      PlantedDependenceModel m(theta, 0);
      for (std::uint64_t seed = 0; seed < 6; ++seed) {
        DrOptions opt;
        opt.seed = seed;
        CHECK(delta_performance(m, ds, seed).d_accuracy <=
              discriminative_risk(m, ds, opt).value);
      }
    }
  }
}

TEST_CASE("pearson correlation") {
  SUBCASE("identical series correlate to one") {
    std::vector<double> x = {0.1, 0.5, 0.9, 0.3};
    CHECK(*pearson(x, x) == doctest::Approx(1.0));
  }
  SUBCASE("negation correlates to minus one") {
    std::vector<double> x = {0.1, 0.5, 0.9, 0.3};
    std::vector<double> y = {-0.1, -0.5, -0.9, -0.3};
    CHECK(*pearson(x, y) == doctest::Approx(-1.0));
  }
  SUBCASE("constant series are undefined") {
    std::vector<double> x = {0.5, 0.5, 0.5};
    std::vector<double> y = {0.1, 0.2, 0.3};
    CHECK(!pearson(x, y).has_value());
    CHECK(!pearson(y, {0.1, 0.2}).has_value());  // too short
  }
  SUBCASE("matches the two-pass oracle within 1e-12") {
    Rng rng(19);
    for (int rep = 0; rep < 50; ++rep) {
      std::size_t n = 3 + rng.below(60);
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform01();
        y[i] = rng.uniform01();
      }
      auto a = pearson(x, y);
      auto b = oracle::pearson_two_pass(x, y);
      REQUIRE(a.has_value() == b.has_value());
      if (a) CHECK(close(*a, *b));
    }
  }
}

TEST_CASE("planted dependence family correlates DR with delta accuracy") {
  // Labels correlate with the attribute parity so that flipping the
  // attribute-following rows moves accuracy in proportion to theta.
  SyntheticSpec spec;
  spec.n = 500;
  spec.value_counts = {2};
  spec.group_label_rates = {0.2, 0.8};
  spec.seed = 23;
  Dataset ds = make_synthetic(spec);

  std::vector<double> drs, deltas;
  for (double theta : {0.0, 0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95}) {
    PlantedDependenceModel m(theta, 0);
    DrOptions opt;
    opt.seed = 29;
    drs.push_back(discriminative_risk(m, ds, opt).value);
    deltas.push_back(delta_performance(m, ds, 29).d_accuracy);
  }
  auto r = pearson(drs, deltas);
  REQUIRE(r.has_value());
  CHECK(*r >= 0.9);
}

TEST_CASE("timing bench smoke") {
  TimingBenchConfig config;
  config.metrics = {"dp"};
  config.sizes = {2000};
  config.value_counts = {4};
  config.repetitions = 5;
  config.seed = 31;
  auto records = timing_bench(config);
  REQUIRE(!records.empty());
  for (const auto& r : records) {
    CHECK(r.median_ns >= r.min_ns);
    CHECK(r.repetitions == 5);
    if (r.form == "binarised") CHECK(r.term_count == 1);
    if (r.form == "alt") CHECK(r.term_count <= 4 * 3 / 2);
  }
}

TEST_CASE("experiment pipeline") {
  SyntheticSpec spec;
  spec.n = 250;
  spec.value_counts = {2, 3};
  spec.seed = 37;
  Dataset ds = make_synthetic(spec);

  ExperimentConfig config;
  config.learners = {LearnerSpec::parse("stump"),
                     LearnerSpec::parse("bagging(7)")};
  config.k = 4;
  config.seed = 41;
  ExperimentResult result = run_experiment(ds, config);

  SUBCASE("one row per candidate and fold") {
    CHECK(result.rows.size() == 2 * 4);
    for (const auto& row : result.rows) {
      CHECK(row.delta.has_value());
      CHECK(!row.metrics.empty());
    }
  }
  SUBCASE("relations include individual-vs-group pairs") {
    bool found = false;
    for (const auto& rel : result.relations) {
      if (rel.metric == "dr" && rel.series.rfind("dp.", 0) == 0) found = true;
    }
    CHECK(found);
  }
  SUBCASE("external predictions join without deltas") {
    ExperimentConfig with_file = config;
    PredictionSet ext = planted_predictions(ds, 0, {0.4, 0.6}, 43);
    ext.source = "file:planted.csv";
    with_file.external = {ext};
    ExperimentResult r2 = run_experiment(ds, with_file);
    CHECK(r2.rows.size() == 3 * 4);
    int no_delta = 0;
    for (const auto& row : r2.rows) no_delta += !row.delta.has_value();
    CHECK(no_delta == 4);
  }
  SUBCASE("CSV files are deterministic and re-emit identically") {
    fs::path dir = fs::temp_directory_path() /
                   ("fairlens_exp_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto slurp = [](const std::string& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream s;
      s << in.rdbuf();
      return s.str();
    };
    std::string p1 = (dir / "a.csv").string();
    std::string p2 = (dir / "b.csv").string();
    write_tradeoff_csv(result, p1);
    write_tradeoff_csv(run_experiment(ds, config), p2);
    CHECK(slurp(p1) == slurp(p2));

    // Header + one line per (candidate, fold).
    std::istringstream lines(slurp(p1));
    std::string line;
    long count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 1 + 2 * 4);
    fs::remove_all(dir);
  }
}
