#include "fairlens/intersectional.hpp"

#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "util.hpp"

using namespace fairlens;
using testutil::close;
using testutil::partition_from;
using testutil::planted_groups;

namespace {

IntVector iv(std::initializer_list<int> v) {
  IntVector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (int x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("empirical differential fairness") {
  SUBCASE("identical rates give zero") {
    IntVector yhat, a;
    planted_groups({10, 10, 10}, {0.5, 0.5, 0.5}, yhat, a);
    CHECK(empirical_differential_fairness(yhat, partition_from(a, 3, 0), 0.0)
              .epsilon == 0.0);
  }
  SUBCASE("rates 0.8 vs 0.4 at kappa 0: the y=0 row dominates with ln 3") {
    IntVector yhat, a;
    planted_groups({10, 10}, {0.8, 0.4}, yhat, a);
    auto e = empirical_differential_fairness(yhat, partition_from(a, 2, 0), 0.0);
    CHECK(close(e.epsilon, std::log(3.0)));
    CHECK(std::log(3.0) > std::log(2.0));  // the y=1 pair alone gives ln 2
  }
  SUBCASE("an empty group stays finite under smoothing") {
    IntVector yhat, a;
    planted_groups({10, 0, 10}, {0.8, 0.0, 0.4}, yhat, a);
    auto e = empirical_differential_fairness(yhat, partition_from(a, 3, 0), 0.5);
    CHECK(std::isfinite(e.epsilon));
    CHECK(e.smoothed_zero_cell);
  }
  SUBCASE("kappa 0 with a zero cell is an error") {
    IntVector yhat, a;
    planted_groups({10, 10}, {1.0, 0.4}, yhat, a);
    CHECK_THROWS_AS(
        empirical_differential_fairness(yhat, partition_from(a, 2, 0), 0.0),
        MetricError);
  }
  SUBCASE("matches the counting oracle on random data") {
    Rng rng(17);
    for (int rep = 0; rep < 40; ++rep) {
      auto c = testutil::random_case(rng, 120, 4);
      GroupPartition part = partition_from(c.a, c.n_values, c.priv);
      for (double kappa : {0.0, 0.5, 1.0}) {
        auto expected = oracle::edf_epsilon(c.yhat, c.a, c.n_values, kappa);
        std::optional<double> got;
        try {
          got = empirical_differential_fairness(c.yhat, part, kappa).epsilon;
        } catch (const MetricError&) {
        }
        REQUIRE(got.has_value() == expected.has_value());
        if (got) CHECK(close(*got, *expected));
      }
    }
  }
  SUBCASE("marginal attribute never exceeds the super attribute") {
    // Planted 2x2 intersection with all cells populated, kappa = 0.
    // Super-attribute codes 0..3 = (s0, s1) pairs; marginal s0 pools them.
    IntVector yhat, super_a;
    planted_groups({8, 8, 8, 8}, {0.25, 0.5, 0.5, 0.75}, yhat, super_a);
    IntVector marginal(32);
    for (Index i = 0; i < 32; ++i) marginal[i] = super_a[i] / 2;
    double eps_super =
        empirical_differential_fairness(yhat, partition_from(super_a, 4, 0), 0.0)
            .epsilon;
    double eps_marginal =
        empirical_differential_fairness(yhat, partition_from(marginal, 2, 0), 0.0)
            .epsilon;
    CHECK(eps_marginal <= eps_super + 1e-12);
  }
}

TEST_CASE("min-max ratios") {
  SUBCASE("identical quantities give the fairest value 1") {
    IntVector yhat, a;
    planted_groups({10, 10, 10}, {0.4, 0.4, 0.4}, yhat, a);
    IntVector y = yhat;
    GroupPartition part = partition_from(a, 3, 0);
    CHECK(minmax_ratio(RatioKind::DPR, yhat, y, part).value == 1.0);
    CHECK(minmax_ratio(RatioKind::EOppR, yhat, y, part).value == 1.0);
  }
  SUBCASE("DPR with rates (0.2, 0.4, 0.6) is exactly 1/3") {
    IntVector yhat, a;
    planted_groups({10, 10, 10}, {0.2, 0.4, 0.6}, yhat, a);
    IntVector y = IntVector::Zero(30);
    auto r = minmax_ratio(RatioKind::DPR, yhat, y, partition_from(a, 3, 0));
    CHECK(close(r.value, 1.0 / 3.0));
  }
  SUBCASE("GBR is 1 when predicted rates equal actual rates everywhere") {
    IntVector yhat, a, y, a2;
    planted_groups({10, 10}, {0.3, 0.7}, yhat, a);
    planted_groups({10, 10}, {0.3, 0.7}, y, a2);
    auto r = minmax_ratio(RatioKind::GBR_INT, yhat, y, partition_from(a, 2, 0));
    CHECK(r.value == 1.0);
  }
  SUBCASE("undefined group quantities are skipped with a flag") {
    // Group 1 has no y=1 rows: EOppR skips it.
    IntVector yhat = iv({1, 0, 1, 0});
    IntVector y = iv({1, 1, 0, 0});
    IntVector a = iv({0, 0, 1, 1});
    auto r = minmax_ratio(RatioKind::EOppR, yhat, y, partition_from(a, 2, 0));
    CHECK(r.skipped_groups == std::vector<int>{1});
    CHECK(r.flagged);
    CHECK(r.value == 1.0);  // single evaluable group
  }
  SUBCASE("CSPR takes the worst ratio across strata") {
    IntVector yhat, a;
    planted_groups({10, 10}, {0.5, 0.5}, yhat, a);
    IntVector y = IntVector::Zero(20);
    // Stratum 0 = first half of each group (rates 1.0 vs 1.0);
    // stratum 1 = second half (rates 0 vs 0 -> undefined ratio, skipped).
    std::vector<int> strata(20);
    for (int i = 0; i < 20; ++i) strata[static_cast<std::size_t>(i)] = (i % 10) < 5 ? 0 : 1;
    auto r = minmax_ratio(RatioKind::CSPR, yhat, y, partition_from(a, 2, 0),
                          &strata);
    CHECK(r.value == 1.0);
    CHECK(r.skipped_strata == std::vector<int>{1});
  }
  SUBCASE("all groups skipped is an error") {
    IntVector yhat = iv({1, 0});
    IntVector y = iv({0, 0});
    IntVector a = iv({0, 1});
    CHECK_THROWS_AS(
        minmax_ratio(RatioKind::EOppR, yhat, y, partition_from(a, 2, 0)),
        MetricError);
  }
  SUBCASE("matches the counting oracle on random data") {
    Rng rng(23);
    for (int rep = 0; rep < 40; ++rep) {
      auto c = testutil::random_case(rng, 100, 5);
      GroupPartition part = partition_from(c.a, c.n_values, c.priv);
      struct Kind {
        RatioKind kind;
        std::optional<double> expected;
      };
      std::vector<Kind> kinds = {
          {RatioKind::DPR, oracle::dpr(c.yhat, c.a, c.n_values)},
          {RatioKind::EOppR, oracle::eoppr(c.yhat, c.y, c.a, c.n_values)},
          {RatioKind::GBR_INT, oracle::gbr_int(c.yhat, c.y, c.a, c.n_values)}};
      for (const auto& k : kinds) {
        std::optional<double> got;
        try {
          got = minmax_ratio(k.kind, c.yhat, c.y, part).value;
        } catch (const MetricError&) {
        }
        REQUIRE(got.has_value() == k.expected.has_value());
        if (got) CHECK(close(*got, *k.expected));
      }
    }
  }
}

TEST_CASE("intersectional disparate impact") {
  SUBCASE("equal rates give 1") {
    IntVector yhat, a;
    planted_groups({10, 10}, {0.5, 0.5}, yhat, a);
    CHECK(intersectional_disparate_impact(yhat, partition_from(a, 2, 0)) ==
          1.0);
  }
  SUBCASE("rates (0.2, 0.4) give 0.5") {
    IntVector yhat, a;
    planted_groups({10, 10}, {0.2, 0.4}, yhat, a);
    CHECK(close(intersectional_disparate_impact(yhat, partition_from(a, 2, 0)),
                0.5));
  }
  SUBCASE("IDI equals min rate over max rate") {
    Rng rng(29);
    for (int rep = 0; rep < 30; ++rep) {
      auto c = testutil::random_case(rng, 100, 6);
      GroupPartition part = partition_from(c.a, c.n_values, c.priv);
      auto expected = oracle::idi(c.yhat, c.a, c.n_values);
      std::optional<double> got;
      try {
        got = intersectional_disparate_impact(c.yhat, part);
      } catch (const MetricError&) {
      }
      REQUIRE(got.has_value() == expected.has_value());
      if (got) CHECK(close(*got, *expected));
    }
  }
  SUBCASE("a twelve-value super attribute is the same math") {
    IntVector yhat, a;
    std::vector<int> sizes(12, 6);
    std::vector<double> rates;
    for (int j = 0; j < 12; ++j) rates.push_back((1.0 + j % 4) / 6.0);
    planted_groups(sizes, rates, yhat, a);
    double idi = intersectional_disparate_impact(yhat, partition_from(a, 12, 0));
    CHECK(close(idi, (1.0 / 6.0) / (4.0 / 6.0)));
  }
  SUBCASE("a zero rate names the group") {
    IntVector yhat, a;
    planted_groups({10, 10}, {0.0, 0.4}, yhat, a);
    CHECK_THROWS_WITH_AS(
        intersectional_disparate_impact(yhat, partition_from(a, 2, 0)),
        doctest::Contains("group 0"), MetricError);
  }
}

TEST_CASE("multiaccuracy over subgroup indicators") {
  SUBCASE("calibrated scores have zero residuals") {
    IntVector y = iv({1, 0, 1, 0});
    Vector scores(4);
    scores << 1.0, 0.0, 1.0, 0.0;
    IntVector a = iv({0, 0, 1, 1});
    auto m = multiaccuracy_check(scores, y, partition_from(a, 2, 0), 0.1);
    CHECK(m.max_residual == 0.0);
    CHECK(m.passed);
  }
  SUBCASE("one group over-scored by 0.2 at fraction 0.5 gives 0.1") {
    IntVector y = IntVector::Zero(20);
    Vector scores = Vector::Zero(20);
    IntVector a(20);
    for (int i = 0; i < 20; ++i) {
      a[i] = i < 10 ? 0 : 1;
      scores[i] = i < 10 ? 0.2 : 0.0;
    }
    auto m = multiaccuracy_check(scores, y, partition_from(a, 2, 0), 0.05);
    CHECK(close(m.residuals[0], 0.1));
    CHECK(!m.passed);
  }
  SUBCASE("alpha 1 always passes") {
    IntVector y = iv({0, 1});
    Vector scores(2);
    scores << 1.0, 0.0;
    auto m = multiaccuracy_check(scores, y, partition_from(iv({0, 1}), 2, 0), 1.0);
    CHECK(m.passed);
  }
  SUBCASE("single full-population group equals |mean(score - y)|") {
    Rng rng(37);
    IntVector y(50), a = IntVector::Zero(50);
    Vector scores(50);
    double mean = 0.0;
    for (Index i = 0; i < 50; ++i) {
      y[i] = rng.below(2) == 0 ? 0 : 1;
      scores[i] = rng.uniform01();
      mean += scores[i] - y[i];
    }
    auto m = multiaccuracy_check(scores, y, partition_from(a, 1, 0), 0.5);
    CHECK(close(m.max_residual, std::abs(mean / 50.0)));
  }
}

TEST_CASE("calibration by group") {
  SUBCASE("scores equal to labels have zero gaps") {
    IntVector y = iv({1, 0, 1, 0});
    Vector scores(4);
    scores << 1.0, 0.0, 1.0, 0.0;
    auto c = calibration_by_group(scores, y, partition_from(iv({0, 0, 1, 1}), 2, 0));
    CHECK(c.max_gap == 0.0);
  }
  SUBCASE("same-bin positive rates 0.7 vs 0.5 give gap 0.2") {
    IntVector y(20), a(20);
    Vector scores = Vector::Constant(20, 0.55);  // everyone lands in bin 5
    for (int i = 0; i < 20; ++i) {
      a[i] = i < 10 ? 0 : 1;
      y[i] = (i < 10 ? i % 10 < 7 : i % 10 < 5) ? 1 : 0;
    }
    auto c = calibration_by_group(scores, y, partition_from(a, 2, 0));
    CHECK(close(c.max_gap, 0.2));
  }
  SUBCASE("single group is flagged with gap zero") {
    IntVector y = iv({1, 0});
    Vector scores(2);
    scores << 0.6, 0.4;
    auto c = calibration_by_group(scores, y, partition_from(iv({0, 0}), 1, 0));
    CHECK(c.max_gap == 0.0);
    CHECK(!c.flags.empty());
  }
  SUBCASE("matches the counting oracle") {
    Rng rng(41);
    for (int rep = 0; rep < 20; ++rep) {
      auto c = testutil::random_case(rng, 100, 4);
      Vector scores(c.y.size());
      for (Index i = 0; i < scores.size(); ++i) scores[i] = rng.uniform01();
      auto got = calibration_by_group(scores, c.y,
                                      partition_from(c.a, c.n_values, c.priv));
      CHECK(close(got.max_gap, oracle::calibration_gap(scores, c.y, c.a,
                                                       c.n_values, 10)));
    }
  }
}

TEST_CASE("worst-case log loss is a max over group means") {
  IntVector y = iv({1, 1, 0, 0});
  Vector scores(4);
  scores << 0.9, 0.9, 0.5, 0.5;
  IntVector a = iv({0, 0, 1, 1});
  double v = worst_case_log_loss(scores, y, partition_from(a, 2, 0));
  CHECK(close(v, -std::log(0.5)));
}
