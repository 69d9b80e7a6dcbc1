// Acceptance suite: one criterion per block, one PASS/FAIL line each.
// Exit code 0 iff every criterion holds.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "fairlens/cli.hpp"
#include "fairlens/experiments.hpp"
#include "fairlens/individual.hpp"
#include "fairlens/intersectional.hpp"
#include "fairlens/report.hpp"
#include "oracle.hpp"
#include "util.hpp"

using namespace fairlens;
using testutil::close;
using testutil::partition_from;
namespace fs = std::filesystem;

namespace {

class Harness {
 public:
  void run(const std::string& name, double budget_seconds,
           const std::function<void(Harness&)>& body) {
    failures_ = 0;
    notes_.clear();
    auto t0 = std::chrono::steady_clock::now();
    try {
      body(*this);
    } catch (const std::exception& e) {
      ++failures_;
      notes_.push_back(std::string("exception: ") + e.what());
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (budget_seconds > 0 && elapsed > budget_seconds) {
      ++failures_;
      notes_.push_back("over time budget");
    }
    bool ok = failures_ == 0;
    all_ok_ = all_ok_ && ok;
    std::printf("[%s] %s (%.1fs)\n", ok ? "PASS" : "FAIL", name.c_str(),
                elapsed);
    for (const auto& n : notes_) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
  }

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      ++failures_;
      if (notes_.size() < 8) notes_.push_back(what);
    }
  }

  bool all_ok() const { return all_ok_; }

 private:
  long failures_ = 0;
  std::vector<std::string> notes_;
  bool all_ok_ = true;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// Criterion 1 helper: every group/intersectional metric against the
// brute-force counting oracle for one random case.

void check_case(Harness& h, const testutil::RandomCase& c, Rng& rng) {
  GroupPartition part = partition_from(c.a, c.n_values, c.priv);
  const double tol = 1e-12;

  struct Family {
    ProbeKind kind;
    oracle::Rates rates;
  };
  std::vector<Family> families = {
      {ProbeKind::DP, oracle::dp_rates(c.yhat, c.y, c.a, c.n_values, c.priv)},
      {ProbeKind::EOpp,
       oracle::eopp_rates(c.yhat, c.y, c.a, c.n_values, c.priv)},
      {ProbeKind::FPRBalance,
       oracle::peq_rates(c.yhat, c.y, c.a, c.n_values, c.priv)},
      {ProbeKind::PP, oracle::ppar_rates(c.yhat, c.y, c.a, c.n_values, c.priv)},
      {ProbeKind::NPVParity,
       oracle::npv_rates(c.yhat, c.y, c.a, c.n_values, c.priv)}};

  auto compare = [&](std::optional<double> got, std::optional<double> want,
                     const std::string& what) {
    h.expect(got.has_value() == want.has_value(), what + ": availability");
    if (got && want) h.expect(std::abs(*got - *want) <= tol, what + ": value");
  };

  std::optional<double> eo_sides[2];
  for (const auto& fam : families) {
    auto probe = [&](Form form) -> std::optional<double> {
      try {
        return probe_metric(fam.kind, c.yhat, c.y, part, form).value;
      } catch (const MetricError&) {
        return std::nullopt;
      }
    };
    std::string name = probe_family(fam.kind);
    if (c.n_values == 2) {
      compare(probe(Form::Orig), oracle::form_orig(fam.rates, c.priv),
              name + ".orig");
    }
    compare(probe(Form::Binarised), oracle::form_binarised(fam.rates),
            name + ".binarised");
    compare(probe(Form::Ext), oracle::form_ext(fam.rates, false),
            name + ".ext");
    compare(probe(Form::Alt), oracle::form_alt(fam.rates, false),
            name + ".alt");
    compare(probe(Form::ExtAvg), oracle::form_ext(fam.rates, true),
            name + ".ext_avg");
    compare(probe(Form::AltAvg), oracle::form_alt(fam.rates, true),
            name + ".alt_avg");
    if (fam.kind == ProbeKind::EOpp) {
      eo_sides[0] = oracle::form_ext(fam.rates, false);
    }
    if (fam.kind == ProbeKind::FPRBalance) {
      eo_sides[1] = oracle::form_ext(fam.rates, false);
    }
  }

  // Equalized odds (ext form): mean of the evaluable sides.
  {
    std::optional<double> want;
    if (eo_sides[0] && eo_sides[1]) {
      want = 0.5 * (*eo_sides[0] + *eo_sides[1]);
    } else if (eo_sides[0]) {
      want = eo_sides[0];
    } else if (eo_sides[1]) {
      want = eo_sides[1];
    }
    std::optional<double> got;
    try {
      got = equalized_odds(c.yhat, c.y, part, Form::Ext).value;
    } catch (const MetricError&) {
    }
    compare(got, want, "eo.ext");
  }

  {
    std::optional<double> got;
    try {
      got = disparate_impact(c.yhat, part).ratio;
    } catch (const MetricError&) {
    }
    compare(got, oracle::disparate_impact(c.yhat, c.a, c.priv), "di");
  }
  {
    auto dp = oracle::dp_rates(c.yhat, c.y, c.a, c.n_values, c.priv);
    std::optional<double> got;
    try {
      got = disparate_treatment(c.yhat, part).value;
    } catch (const MetricError&) {
    }
    compare(got, oracle::form_ext(dp, false), "dt");
  }
  {
    std::optional<double> got;
    try {
      got = gamma_subgroup_fairness(c.yhat, c.y, part).max_product;
    } catch (const MetricError&) {
    }
    compare(got, oracle::gamma_subgroup(c.yhat, c.y, c.a, c.n_values),
            "gammasf");
  }

  // Bounded group loss, multiaccuracy and calibration share random scores.
  {
    Vector scores(c.y.size());
    for (Index i = 0; i < scores.size(); ++i) scores[i] = rng.uniform01();
    Vector losses(c.y.size());
    for (Index i = 0; i < losses.size(); ++i) {
      losses[i] = std::abs(static_cast<double>(c.y[i]) - scores[i]);
    }
    BglResult got = bounded_group_loss(losses, part, 0.5);
    for (int j = 0; j < c.n_values; ++j) {
      double sum = 0.0;
      long n = 0;
      for (Index i = 0; i < c.a.size(); ++i) {
        if (c.a[i] == j) {
          sum += losses[i];
          ++n;
        }
      }
      if (n == 0) continue;
      h.expect(std::abs(got.group_losses[j] - sum / n) <= tol, "bgl: group");
    }

    MultiaccResult m = multiaccuracy_check(scores, c.y, part, 0.1);
    h.expect(std::abs(m.max_residual -
                      oracle::multiacc_max(scores, c.y, c.a, c.n_values)) <=
                 tol,
             "multiacc");
    CalibrationResult cal = calibration_by_group(scores, c.y, part, 10);
    h.expect(std::abs(cal.max_gap - oracle::calibration_gap(
                                        scores, c.y, c.a, c.n_values, 10)) <=
                 tol,
             "calib");
  }

  for (double kappa : {0.5, 0.0}) {
    std::optional<double> got;
    try {
      got = empirical_differential_fairness(c.yhat, part, kappa).epsilon;
    } catch (const MetricError&) {
    }
    compare(got, oracle::edf_epsilon(c.yhat, c.a, c.n_values, kappa), "edf");
  }
  {
    std::optional<double> got;
    try {
      got = minmax_ratio(RatioKind::DPR, c.yhat, c.y, part).value;
    } catch (const MetricError&) {
    }
    compare(got, oracle::dpr(c.yhat, c.a, c.n_values), "dpr");
  }
  {
    std::optional<double> got;
    try {
      got = minmax_ratio(RatioKind::EOppR, c.yhat, c.y, part).value;
    } catch (const MetricError&) {
    }
    compare(got, oracle::eoppr(c.yhat, c.y, c.a, c.n_values), "eoppr");
  }
  {
    std::optional<double> got;
    try {
      got = minmax_ratio(RatioKind::GBR_INT, c.yhat, c.y, part).value;
    } catch (const MetricError&) {
    }
    compare(got, oracle::gbr_int(c.yhat, c.y, c.a, c.n_values), "gbr_int");
  }
  {
    std::optional<double> got;
    try {
      got = intersectional_disparate_impact(c.yhat, part);
    } catch (const MetricError&) {
    }
    compare(got, oracle::idi(c.yhat, c.a, c.n_values), "idi");
  }

  // Conditional statistical parity over a random stratum column.
  {
    int n_strata = 2 + static_cast<int>(rng.below(2));
    std::vector<int> strata(static_cast<std::size_t>(c.a.size()));
    for (auto& s : strata) s = static_cast<int>(rng.below(n_strata));

    std::optional<double> want;
    for (int s = 0; s < n_strata; ++s) {
      std::vector<int> rows;
      for (Index i = 0; i < c.a.size(); ++i) {
        if (strata[static_cast<std::size_t>(i)] == s) {
          rows.push_back(static_cast<int>(i));
        }
      }
      IntVector yh(static_cast<Index>(rows.size()));
      IntVector yy(static_cast<Index>(rows.size()));
      IntVector aa(static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        yh[static_cast<Index>(i)] = c.yhat[rows[i]];
        yy[static_cast<Index>(i)] = c.y[rows[i]];
        aa[static_cast<Index>(i)] = c.a[rows[i]];
      }
      auto rates = oracle::dp_rates(yh, yy, aa, c.n_values, c.priv);
      auto v = oracle::form_ext(rates, false);
      if (v) want = std::max(want.value_or(0.0), *v);
    }
    std::optional<double> got;
    try {
      got = conditional_statistical_parity(c.yhat, part, strata).max_value;
    } catch (const MetricError&) {
    }
    compare(got, want, "csp");
  }

  // Minimax gap over two candidates.
  {
    IntVector other(c.yhat.size());
    for (Index i = 0; i < other.size(); ++i) {
      other[i] = rng.below(2) == 0 ? 0 : 1;
    }
    MinimaxResult got = minimax_gap({c.yhat, other}, c.y, part);
    double best = 2.0;
    std::vector<double> maxes;
    std::vector<const IntVector*> cands = {&c.yhat, &other};
    for (const IntVector* cand : cands) {
      double worst = 0.0;
      for (int j = 0; j < c.n_values; ++j) {
        long n = 0, wrong = 0;
        for (Index i = 0; i < c.a.size(); ++i) {
          if (c.a[i] != j) continue;
          ++n;
          if ((*cand)[i] != c.y[i]) ++wrong;
        }
        if (n > 0) worst = std::max(worst, static_cast<double>(wrong) / n);
      }
      maxes.push_back(worst);
      best = std::min(best, worst);
    }
    for (std::size_t k = 0; k < maxes.size(); ++k) {
      h.expect(std::abs(got.candidates[k].max_error - maxes[k]) <= tol,
               "minimax: max error");
      h.expect(std::abs(got.candidates[k].gap - (maxes[k] - best)) <= tol,
               "minimax: gap");
    }
  }
}

struct CliFixture {
  fs::path dir;
  std::string manifest;

  explicit CliFixture(const std::string& tag) {
    dir = fs::temp_directory_path() /
          ("fairlens_acc_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    Rng rng(2024);
    std::ostringstream csv;
    csv << "f0,f1,f2,sex,race,outcome\n";
    for (int i = 0; i < 200; ++i) {
      int sex = static_cast<int>(rng.below(2));
      int race = static_cast<int>(rng.below(3));
      int label = rng.uniform01() < 0.25 + 0.2 * race ? 1 : 0;
      csv << rng.uniform01() << ',' << rng.uniform01() << ','
          << (0.4 * label + 0.6 * rng.uniform01()) << ','
          << (sex == 0 ? "M" : "F") << ',' << static_cast<char>('A' + race)
          << ',' << (label == 1 ? "yes" : "no") << '\n';
    }
    std::ofstream(dir / "data.csv") << csv.str();
    std::ofstream(dir / "manifest.json") << R"({
      "csv_path": "data.csv",
      "feature_columns": ["f0", "f1", "f2"],
      "sensitive": [
        {"name": "sex", "values": ["M", "F"], "privileged": "M"},
        {"name": "race", "values": ["A", "B", "C"], "privileged": "A"}
      ],
      "label_column": "outcome",
      "positive_label": "yes"
    })";
    manifest = (dir / "manifest.json").string();
  }
  ~CliFixture() { fs::remove_all(dir); }
};

}  // namespace

int main() {
  Harness h;

  h.run("criterion 1: oracle equivalence on 100 random datasets", 60.0,
        [](Harness& h) {
          Rng rng(20250810);
          for (int rep = 0; rep < 100; ++rep) {
            // Up to 3 attribute columns; metrics run per attribute.
            int n_attrs = 1 + static_cast<int>(rng.below(3));
            auto base = testutil::random_case(rng, 200, 6);
            check_case(h, base, rng);
            for (int extra = 1; extra < n_attrs; ++extra) {
              testutil::RandomCase c = base;
              c.n_values = 2 + static_cast<int>(rng.below(5));
              c.priv = static_cast<int>(
                  rng.below(static_cast<std::uint64_t>(c.n_values)));
              for (Index i = 0; i < c.a.size(); ++i) {
                c.a[i] = static_cast<int>(
                    rng.below(static_cast<std::uint64_t>(c.n_values)));
              }
              check_case(h, c, rng);
            }
          }
        });

  h.run("criterion 2: form ordering on 1000 random prediction sets", 120.0,
        [](Harness& h) {
          Rng rng(42);
          long evaluated = 0;
          for (int rep = 0; rep < 1000; ++rep) {
            auto c = testutil::random_case(rng, 200, 6);
            GroupPartition part = partition_from(c.a, c.n_values, c.priv);
            for (ProbeKind kind :
                 {ProbeKind::DP, ProbeKind::EOpp, ProbeKind::PP,
                  ProbeKind::FPRBalance}) {
              double alt, ext, binarised, alt_avg, ext_avg;
              try {
                alt = probe_metric(kind, c.yhat, c.y, part, Form::Alt).value;
                ext = probe_metric(kind, c.yhat, c.y, part, Form::Ext).value;
                binarised =
                    probe_metric(kind, c.yhat, c.y, part, Form::Binarised)
                        .value;
                alt_avg =
                    probe_metric(kind, c.yhat, c.y, part, Form::AltAvg).value;
                ext_avg =
                    probe_metric(kind, c.yhat, c.y, part, Form::ExtAvg).value;
              } catch (const MetricError&) {
                continue;
              }
              ++evaluated;
              h.expect(alt >= ext, "alt >= ext violated");
              h.expect(alt >= binarised, "alt >= binarised violated");
              h.expect(alt >= alt_avg, "alt >= alt_avg violated");
              h.expect(ext >= ext_avg, "ext >= ext_avg violated");
            }
          }
          h.expect(evaluated > 2000, "too few evaluable draws");
        });

  h.run("criterion 3: binarised equals the two-group original exactly", 60.0,
        [](Harness& h) {
          Rng rng(7);
          long evaluated = 0;
          for (int rep = 0; rep < 500; ++rep) {
            auto c = testutil::random_case(rng, 200, 2);
            GroupPartition part = partition_from(c.a, 2, c.priv);
            for (ProbeKind kind :
                 {ProbeKind::DP, ProbeKind::EOpp, ProbeKind::PP,
                  ProbeKind::FPRBalance, ProbeKind::NPVParity}) {
              double orig, binarised;
              try {
                orig = probe_metric(kind, c.yhat, c.y, part, Form::Orig).value;
                binarised =
                    probe_metric(kind, c.yhat, c.y, part, Form::Binarised)
                        .value;
              } catch (const MetricError&) {
                continue;
              }
              ++evaluated;
              h.expect(orig == binarised, "binarised != orig bitwise");
            }
          }
          h.expect(evaluated > 1000, "too few evaluable draws");
        });

  h.run("criterion 4: |delta accuracy| <= DR for every model and seed", 120.0,
        [](Harness& h) {
          SyntheticSpec spec;
          spec.n = 300;
          spec.value_counts = {2, 3};
          spec.group_label_rates = {0.3, 0.7};
          spec.seed = 99;
          Dataset ds = make_synthetic(spec);
          std::vector<int> rows(static_cast<std::size_t>(ds.n()));
          std::iota(rows.begin(), rows.end(), 0);

          std::vector<std::shared_ptr<Model>> models;
          for (const char* id :
               {"stump", "bagging(15)", "adaboost(20)", "logreg(60,0.5)"}) {
            models.emplace_back(train(LearnerSpec::parse(id), ds, rows, 1));
          }
          for (double theta : {0.2, 0.5, 0.8}) {
            models.emplace_back(
                std::make_shared<PlantedDependenceModel>(theta, 0));
          }
          for (const auto& model : models) {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
              DrOptions opt;
              opt.seed = seed;
              double dr = discriminative_risk(*model, ds, opt).value;
              double delta = delta_performance(*model, ds, seed).d_accuracy;
              h.expect(delta <= dr, model->id() + ": bound violated");
            }
          }
        });

  h.run("criterion 5: traversal timing direction at n=30000", 300.0,
        [](Harness& h) {
          TimingBenchConfig config;
          config.metrics = {"dp"};
          config.sizes = {30000};
          config.value_counts = {5};
          config.repetitions = 5;
          config.seed = 11;
          auto records = timing_bench(config);
          std::int64_t t_alt = 0, t_bin = 0;
          long terms_alt = 0;
          for (const auto& r : records) {
            if (r.form == "alt") {
              t_alt = r.median_ns;
              terms_alt = r.term_count;
            }
            if (r.form == "binarised") t_bin = r.median_ns;
          }
          h.expect(t_alt > t_bin, "median(alt) <= median(binarised)");
          h.expect(terms_alt == 5 * 4 / 2, "alt term count != v(v-1)/2");

          // Growth with the super-attribute value count: attributes of 2, 6
          // and 3 values degenerate into 12- and 36-valued super attributes.
          SyntheticSpec spec;
          spec.n = 30000;
          spec.value_counts = {2, 6, 3};
          spec.seed = 13;
          Dataset ds = make_synthetic(spec);
          Dataset with12 = with_super_attribute(
              ds, degenerate_super_attribute(ds, {0, 1}));
          Dataset with36 = with_super_attribute(
              with12, degenerate_super_attribute(with12, {0, 1, 2}));
          PredictionSet preds = planted_predictions(ds, 0, {0.3, 0.7}, 14);

          auto median_alt = [&](const Dataset& d, int attribute) {
            GroupPartition part = partition(d, attribute);
            MetricResult warm =
                probe_metric(ProbeKind::DP, preds.hard, d.labels, part,
                             Form::Alt);
            h.expect(warm.term_count ==
                         static_cast<long>(part.n_groups()) *
                             (part.n_groups() - 1) / 2,
                     "term count mismatch at vc=" +
                         std::to_string(part.n_groups()));
            std::vector<std::int64_t> times;
            for (int r = 0; r < 5; ++r) {
              times.push_back(probe_metric(ProbeKind::DP, preds.hard, d.labels,
                                           part, Form::Alt)
                                  .wall_time_ns);
            }
            std::sort(times.begin(), times.end());
            return times[2];
          };
          std::int64_t t2 = median_alt(ds, 0);
          std::int64_t t6 = median_alt(ds, 1);
          std::int64_t t12 = median_alt(with36, 3);
          std::int64_t t36 = median_alt(with36, 4);
          h.expect(t2 < t6, "time(2) !< time(6)");
          h.expect(t6 < t12, "time(6) !< time(12)");
          h.expect(t12 < t36, "time(12) !< time(36)");
        });

  h.run("criterion 6: HFM oracle, invariants and timing direction", 120.0,
        [](Harness& h) {
          SyntheticSpec spec;
          spec.n = 50;
          spec.value_counts = {2, 3};
          spec.seed = 3;
          Dataset ds = make_synthetic(spec);
          PredictionSet preds = planted_predictions(ds, 0, {0.3, 0.7}, 4);

          auto g_max = [&](const IntVector& outcome) {
            Matrix p = augment(ds.features, outcome, 1.0);
            double best = 0.0;
            for (int a : {0, 1}) {
              GroupPartition part = partition(ds, a);
              for (int j = 0; j < part.n_groups(); ++j) {
                if (part.groups[j].empty()) continue;
                best = std::max(best, oracle::directed(p, part.groups[j],
                                                       part.complement(j)));
              }
            }
            return best;
          };
          auto g_avg = [&](const IntVector& outcome) {
            Matrix p = augment(ds.features, outcome, 1.0);
            double total = 0.0;
            for (int a : {0, 1}) {
              GroupPartition part = partition(ds, a);
              double sum = 0.0;
              for (int j = 0; j < part.n_groups(); ++j) {
                if (part.groups[j].empty()) continue;
                sum += oracle::avg_min_sum(p, part.groups[j],
                                           part.complement(j));
              }
              total += sum / static_cast<double>(ds.n());
            }
            return total / 2.0;
          };

          HfmResult mx = hfm_max(ds, preds, {0, 1});
          h.expect(
              close(mx.value, std::log(g_max(preds.hard) / g_max(ds.labels))),
              "hfm.max != oracle");
          HfmResult av = hfm_avg(ds, preds, {0, 1});
          h.expect(
              close(av.value, std::log(g_avg(preds.hard) / g_avg(ds.labels))),
              "hfm.avg != oracle");
          GroupPartition p0 = partition(ds, 0);
          Matrix pf = augment(ds.features, preds.hard, 1.0);
          Matrix py = augment(ds.features, ds.labels, 1.0);
          HfmResult pv = hfm_prev(ds, preds, 0);
          double gf = oracle::hausdorff(pf, p0.groups[p0.privileged],
                                        p0.complement(p0.privileged));
          double gy = oracle::hausdorff(py, p0.groups[p0.privileged],
                                        p0.complement(p0.privileged));
          h.expect(close(pv.value, gf / gy - 1.0), "hfm.prev != oracle");

          PredictionSet same;
          same.hard = ds.labels;
          same.source = "planted";
          h.expect(hfm_prev(ds, same, 0).value == 0.0, "prev(y)!=0");
          h.expect(hfm_max(ds, same, {0, 1}).value == 0.0, "max(y)!=0");
          h.expect(hfm_avg(ds, same, {0, 1}).value == 0.0, "avg(y)!=0");

          HfmResult exact = hfm_max(ds, preds, {0, 1});
          HfmResult full =
              hfm_approx(ds, preds, {0, 1}, HfmVersion::Max, 50, 9);
          h.expect(full.value == exact.value, "full budget != exact");
          double prev_g = 0.0;
          for (long budget : {1L, 2L, 4L, 8L, 16L, 32L, 50L}) {
            HfmResult r =
                hfm_approx(ds, preds, {0, 1}, HfmVersion::Max, budget, 13);
            h.expect(r.g_f >= prev_g, "nested budgets not monotone");
            prev_g = r.g_f;
          }

          // Timing direction: maximal version on a 6-valued attribute vs the
          // previous version on its privileged-vs-rest binarisation.
          SyntheticSpec big;
          big.n = 1200;
          big.value_counts = {6};
          big.seed = 5;
          Dataset multi = make_synthetic(big);
          PredictionSet mp =
              planted_predictions(multi, 0, {0.2, 0.3, 0.4, 0.5, 0.6, 0.7}, 6);
          Dataset binary = multi;
          SensitiveAttributeSpec b;
          b.name = "bin";
          b.values = {"rest", "priv"};
          b.privileged = "priv";
          binary.attributes = {b};
          binary.sensitive.resize(multi.n(), 1);
          int priv = multi.attributes[0].privileged_code();
          for (Index i = 0; i < multi.n(); ++i) {
            binary.sensitive(i, 0) = multi.sensitive(i, 0) == priv ? 1 : 0;
          }

          auto median_of = [](const std::function<void()>& fn) {
            fn();  // warm-up
            std::vector<std::int64_t> times;
            for (int r = 0; r < 5; ++r) {
              auto t0 = std::chrono::steady_clock::now();
              fn();
              times.push_back(
                  std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count());
            }
            std::sort(times.begin(), times.end());
            return times[2];
          };
          volatile double sink = 0.0;
          std::int64_t t_prev =
              median_of([&] { sink = hfm_prev(binary, mp, 0).value; });
          std::int64_t t_max =
              median_of([&] { sink = hfm_max(multi, mp, {0}).value; });
          h.expect(t_max > t_prev, "hfm.max not slower than hfm.prev");

          SyntheticSpec half = big;
          half.n = 600;
          Dataset small = make_synthetic(half);
          PredictionSet sp =
              planted_predictions(small, 0, {0.2, 0.3, 0.4, 0.5, 0.6, 0.7}, 6);
          std::int64_t t_small =
              median_of([&] { sink = hfm_max(small, sp, {0}).value; });
          (void)sink;
          h.expect(t_max > 2 * t_small, "cost growth not superlinear");
        });

  h.run("criterion 7: GEI and Theil closed forms", 10.0, [](Harness& h) {
    IntVector yhat(3), y(3);
    yhat << 0, 0, 1;
    y << 1, 0, 0;  // benefits (0, 1, 2)
    h.expect(
        std::abs(general_entropy_index(yhat, y, 2.0) - 1.0 / 3.0) <= 1e-12,
        "GEI(b=(0,1,2), alpha=2) != 1/3");
    IntVector yh2(2), y2(2);
    yh2 << 0, 1;
    y2 << 1, 0;  // benefits (0, 2)
    h.expect(std::abs(theil_index(yh2, y2) - std::log(2.0)) <= 1e-12,
             "Theil(b=(0,2)) != ln 2");
  });

  h.run("criterion 8: dataset-statistics validation (conditional)", 120.0,
        [](Harness& h) {
          const char* env = std::getenv("FAIRLENS_DATA_DIR");
          fs::path data_dir = env != nullptr ? fs::path(env) : fs::path("data");
          struct Entry {
            const char* manifest;
            const char* csv;
          };
          const Entry entries[] = {
              {"manifests/income.json", "income.csv"},
              {"manifests/compas_ppr.json", "compas_ppr.csv"},
              {"manifests/compas_ppvr.json", "compas_ppvr.csv"}};
          bool any = false;
          for (const auto& e : entries) {
            if (!fs::exists(data_dir / e.csv)) {
              std::printf("       skipped %s: %s not present\n", e.manifest,
                          (data_dir / e.csv).string().c_str());
              continue;
            }
            any = true;
            RunConfig config;
            config.command = "validate";
            config.manifest_path = e.manifest;
            h.expect(run_cli(config) == 0,
                     std::string(e.manifest) + ": validation failed");
          }
          if (!any) {
            std::printf(
                "       notice: canonical CSVs absent; place them under %s "
                "to enable this criterion\n",
                data_dir.string().c_str());
          }
        });

  h.run("criterion 9: Pearson oracle and the DR correlation direction", 120.0,
        [](Harness& h) {
          Rng rng(17);
          for (int rep = 0; rep < 200; ++rep) {
            std::size_t n = 3 + rng.below(80);
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
              x[i] = rng.uniform01();
              y[i] = rng.uniform01();
            }
            auto a = pearson(x, y);
            auto b = oracle::pearson_two_pass(x, y);
            h.expect(a.has_value() == b.has_value(), "pearson availability");
            if (a && b) h.expect(std::abs(*a - *b) <= 1e-12, "pearson value");
          }

          SyntheticSpec spec;
          spec.n = 600;
          spec.value_counts = {2};
          spec.group_label_rates = {0.2, 0.8};
          spec.seed = 23;
          Dataset ds = make_synthetic(spec);
          std::vector<double> drs, deltas;
          for (int g = 0; g <= 9; ++g) {
            double theta = 0.1 * g;
            PlantedDependenceModel m(theta, 0);
            DrOptions opt;
            opt.seed = 29;
            drs.push_back(discriminative_risk(m, ds, opt).value);
            deltas.push_back(delta_performance(m, ds, 29).d_accuracy);
          }
          auto r = pearson(drs, deltas);
          h.expect(r.has_value(), "r(DR, dAcc) undefined");
          if (r) h.expect(*r >= 0.9, "r(DR, dAcc) < 0.9");
        });

  h.run("criterion 10: byte-identical audit and experiment reruns", 300.0,
        [](Harness& h) {
          CliFixture fx("det");
          auto run_to = [&](const std::string& command, const fs::path& out) {
            RunConfig config;
            config.command = command;
            config.manifest_path = fx.manifest;
            config.learners = {"stump", "bagging(9)"};
            config.seed = 31;
            config.k = 5;
            config.out_dir = out.string();
            return run_cli(config);
          };
          h.expect(run_to("audit", fx.dir / "a1") == 0, "audit run 1 failed");
          h.expect(run_to("audit", fx.dir / "a2") == 0, "audit run 2 failed");
          h.expect(slurp(fx.dir / "a1" / "report.json") ==
                       slurp(fx.dir / "a2" / "report.json"),
                   "audit reports differ");

          h.expect(run_to("experiment", fx.dir / "e1") == 0,
                   "experiment run 1 failed");
          h.expect(run_to("experiment", fx.dir / "e2") == 0,
                   "experiment run 2 failed");
          for (const char* name :
               {"underestimation.csv", "delta.csv", "correlation.csv",
                "tradeoff.csv", "relation.csv", "report.json"}) {
            h.expect(slurp(fx.dir / "e1" / name) == slurp(fx.dir / "e2" / name),
                     std::string(name) + " differs across runs");
          }
        });

  return h.all_ok() ? 0 : 1;
}
