#include <gtest/gtest.h>

#include "idos/analytics.hpp"
#include "oracles.hpp"

using namespace idos;

namespace {
ClosedFormContext ctx1() { return ClosedFormContext::from_scenario(oracle::condition1().scenario); }
}  // namespace

TEST(Erlang, TrivialCases) {
  EXPECT_NEAR(erlang_completion(0, 0.3, 2.0), std::exp(-0.6), 1e-15);
  EXPECT_EQ(erlang_completion(4, 0.3, 0.0), 1.0);
}

TEST(Erlang, MatchesQuadratureTail) {
  EXPECT_NEAR(erlang_completion(5, 1.5, 2.0), oracle::erlang_tail_quadrature(5, 1.5, 2.0), 1e-8);
  for (int m : {0, 1, 3, 7})
    for (double x : {0.1, 1.0, 4.0, 9.0})
      EXPECT_NEAR(erlang_completion(m, 0.5, x / 0.5), oracle::erlang_tail_quadrature(m, 0.5, x / 0.5), 1e-8) << m << ' ' << x;
}

TEST(Erlang, StableForLargeProducts) {
  // Regularised upper incomplete gamma: Pr(Poisson(x) <= m) = Q(m+1, x).
  for (double x : {100.0, 500.0, 1000.0})
    for (int m : {0, 50, 900, 1000, 1100}) {
      const double ref = boost::math::gamma_q(m + 1.0, x);
      const double got = erlang_completion(m, 1.0, x);
      EXPECT_NEAR(got, ref, 1e-10 + 1e-9 * ref) << x << ' ' << m;
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
    }
}

TEST(Erlang, MonotoneInMAndD) {
  for (int m = 0; m < 20; ++m) {
    EXPECT_GE(erlang_completion(m + 1, 0.2, 30.0), erlang_completion(m, 0.2, 30.0));
    EXPECT_LE(erlang_completion(m, 0.2, 31.0), erlang_completion(m, 0.2, 30.0));
  }
  EXPECT_NEAR(erlang_completion(200, 0.2, 30.0), 1.0, 1e-15);
}

TEST(Adl, EqualsPosteriorWeightedSum) {
  const auto c = ctx1();
  const auto& post = c.post(0);
  double ref = 0.0;
  for (std::size_t p = 0; p < post.size(); ++p)
    ref += post[p] * (1.0 - 0.9 * boost::math::gamma_q(3.0, c.beta * c.d(0, p)));
  EXPECT_NEAR(adl_closed_form(c, 0, 2), ref, 1e-12);
}

TEST(Adl, LimitExamples) {
  auto c = ctx1();
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(adl_limit(c, s), 0.1, 1e-12);
  c.success_prob = Table(4, 4, 1.0);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_EQ(adl_limit(c, s), 0.0);
}

TEST(Adl, GapToLimitShrinksStrictly) {
  const auto c = ctx1();
  double dmax = 0.0;
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t p = 0; p < 4; ++p) dmax = std::max(dmax, c.d(s, p));
  const int m_big = static_cast<int>(std::ceil(10 * c.beta * dmax));
  for (std::size_t s = 0; s < 4; ++s) {
    for (int m = 0; m < m_big; ++m) EXPECT_LT(adl_closed_form(c, s, m + 1), adl_closed_form(c, s, m));
    EXPECT_LT(adl_closed_form(c, s, m_big) - adl_limit(c, s), 1e-6);
  }
}

TEST(Adl, UndefinedLabelThrows) {
  auto c = ctx1();
  c.posterior[1].clear();
  EXPECT_THROW(adl_closed_form(c, 1, 0), InsufficientData);
}

TEST(Ecoc, TrivialCases) {
  auto c = ctx1();
  c.success_prob = Table(4, 4, 0.0);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_DOUBLE_EQ(ecoc_closed_form(c, s, 0).value, 300.0);
  c = ctx1();
  Table zero_rewards = c.costs.table();
  for (std::size_t s = 0; s < 4; ++s) zero_rewards(0, s) = zero_rewards(1, s) = 0.0;
  c.costs = StageCostTable(c.labels, zero_rewards);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto e = ecoc_closed_form(c, s, 1);
    EXPECT_NEAR(e.value, adl_closed_form(c, s, 1) * 300.0 + 300.0, 1e-9);
    EXPECT_EQ(e.reward, 0.0);
  }
}

TEST(Ecoc, DecompositionAddsUp) {
  const auto c = ctx1();
  for (std::size_t s = 0; s < 4; ++s)
    for (int m = 0; m <= 6; ++m) {
      const auto e = ecoc_closed_form(c, s, m);
      EXPECT_NEAR(e.adl_term + e.inattention + e.reward, e.value, 1e-9);
      EXPECT_EQ(e.inattention, m * 300.0);
      if (m) {
        const auto prev = ecoc_closed_form(c, s, m - 1);
        EXPECT_LE(e.adl_term, prev.adl_term);
        EXPECT_LE(e.reward, prev.reward);
      }
    }
}

TEST(Bounds, MinDeemphasisMatchesLinearScan) {
  auto c = ctx1();
  EXPECT_EQ(min_deemphasis(c, 0, 1.0), 0);
  // Force beta*d = 2 for every pair.
  c.beta = 0.1;
  c.d = Table(4, 4, 20.0);
  int scan = 0;
  while (boost::math::gamma_q(scan + 1.0, 2.0) < 0.99) ++scan;
  EXPECT_EQ(min_deemphasis(c, 0, 0.01), scan);
}

TEST(Bounds, ContainmentAndSlope) {
  const auto c = ctx1();
  for (std::size_t s = 0; s < 4; ++s) {
    const int ml = ecoc_bounds(c, s, 0.01, 0).m_lower;
    for (int m = ml; m < ml + 10; ++m) {
      const auto b = ecoc_bounds(c, s, 0.01, m);
      const auto b1 = ecoc_bounds(c, s, 0.01, m + 1);
      const double e = ecoc_closed_form(c, s, m).value;
      EXPECT_LE(b.c_min, e + 1e-9);
      EXPECT_GE(b.c_max, e - 1e-9);
      EXPECT_NEAR(b1.c_max - b.c_max, 300.0, 1e-9);
      EXPECT_NEAR(b1.c_min - b.c_min, 300.0, 1e-9);
      EXPECT_LE(b.c_min, b.c_max);
      EXPECT_NEAR(b.risk_min, b.c_min / (1 - c.gamma), 1e-9);
    }
  }
}

TEST(Ppoa, ProductOnlyDependence) {
  const auto c = ctx1();
  auto c2 = c;
  c2.beta = c.beta * 2.0;
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t p = 0; p < 4; ++p) c2.d(s, p) = c.d(s, p) / 2.0;
  for (std::size_t s = 0; s < 4; ++s)
    for (int m = 0; m <= 3; ++m) EXPECT_NEAR(adl_closed_form(c, s, m), adl_closed_form(c2, s, m), 1e-12);
}

TEST(Ppoa, IncreasingAlongGridAndLimit) {
  const auto c = ctx1();
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.1 * std::pow(100.0, i / 40.0));
  for (std::size_t s = 0; s < 4; ++s) {
    const auto rows = ppoa_curve(c, s, 2, grid);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].adl, rows[i - 1].adl);
    const auto tiny = ppoa_curve(c, s, 2, {1e-9});
    EXPECT_NEAR(tiny[0].adl, adl_limit(c, s), 1e-9);
  }
}

TEST(Context, RefusesMixedRates) {
  EXPECT_THROW(ClosedFormContext::from_scenario(oracle::benchmark().scenario), ConfigError);
}

TEST(Oracle, SimulatedAdlAtA2MatchesClosedForm) {
  const auto sc = oracle::condition1().scenario;
  const auto c = ClosedFormContext::from_scenario(sc);
  const auto logs = evaluate_policy(sc, constant_policy(4, 2), 8, 31);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_NEAR(estimate_adl(logs, s, AmAction{2}).value, adl_closed_form(c, s, 2), 0.01);
}
