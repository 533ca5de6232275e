#include <gtest/gtest.h>

#include "idos/operator.hpp"
#include "oracles.hpp"

using namespace idos;

namespace {

OperatorProfile one_label_profile() {
  OperatorProfile p;
  p.mean_inspection = Table(1, 2, 10.0);
  p.success_prob = Table(1, 2, 0.9);
  p.attention_threshold = {0.0};
  p.mad = {60.0};
  return p;
}

}  // namespace

TEST(Loe, TrapezoidExamples) {
  auto p = one_label_profile();
  EXPECT_DOUBLE_EQ(loe(4, p, 0), 0.0);
  EXPECT_DOUBLE_EQ(loe(2, p, 0), 0.5);
  EXPECT_DOUBLE_EQ(loe(0, p, 0), 1.0);
  p.attention_threshold = {2.0};
  EXPECT_DOUBLE_EQ(loe(2, p, 0), 1.0);
  EXPECT_DOUBLE_EQ(loe(3, p, 0), 0.75);
  p.loe_floor = 0.3;
  EXPECT_DOUBLE_EQ(loe(100, p, 0), 0.3);
}

TEST(Loe, NonIncreasingInDistractions) {
  auto p = one_label_profile();
  p.attention_threshold = {1.5};
  p.loe_slope = 0.1;
  for (int n = 0; n < 30; ++n) EXPECT_LE(loe(n + 1, p, 0), loe(n, p, 0));
}

TEST(Aitn, ClampedUniformAroundMean) {
  auto p = one_label_profile();
  p.mean_inspection(0, 0) = 3.0;
  Rng rng(1);
  double lo = 1e9, hi = -1e9;
  std::size_t clamped = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = sample_aitn(p, 0, 0, rng);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    if (a == 0.1) ++clamped;
  }
  EXPECT_EQ(lo, 0.1);
  EXPECT_LE(hi, 8.0);
  EXPECT_GT(hi, 7.99);
  // Pr(3 + U[-5,5] < 0.1) = Pr(U < -2.9) = 2.1 / 10.
  EXPECT_NEAR(static_cast<double>(clamped) / 1e5, 0.21, 0.005);
}

TEST(Aitn, ZeroNoiseIsDeterministic) {
  auto p = one_label_profile();
  p.aitn_noise = 0.0;
  Rng rng(1);
  EXPECT_EQ(sample_aitn(p, 0, 1, rng), 10.0);
}

TEST(Eit, PiecewiseIntegral) {
  const LoeSegment segs[] = {{1.0, 4.0}, {0.75, 4.0}, {0.5, 2.0}};
  EXPECT_DOUBLE_EQ(accumulate_eit(0.0, segs), 8.0);
  AttentionState st;
  st.aitn = 8.0;
  accumulate_eit(st, segs);
  EXPECT_TRUE(st.finished());
}

TEST(Eit, AdvanceUsesCurrentLoe) {
  AttentionState st;
  st.aitn = 10.0;
  st.loe = 0.5;
  st.advance_to(4.0);
  EXPECT_DOUBLE_EQ(st.eit, 2.0);
  st.advance_to(3.0);  // never backwards
  EXPECT_DOUBLE_EQ(st.eit, 2.0);
}

TEST(Switching, AmbitiousFollowsEmphasis) {
  auto p = one_label_profile();
  Rng rng(1);
  EXPECT_EQ(switch_decision(p, {0, 1, 0, true}, rng), SwitchChoice::Switch);
  EXPECT_EQ(switch_decision(p, {0, 1, 0, false}, rng), SwitchChoice::Stay);
}

TEST(Switching, TabularFrequenciesAndLastRowReuse) {
  auto p = one_label_profile();
  Table t1(1, 1, 0.3), t2(1, 1, 0.1);
  p.switching = SwitchingModel::tabular({t1, t2}, 0.5);
  Rng rng(7);
  auto freq = [&](std::size_t dk, bool emph) {
    int n = 0;
    for (int i = 0; i < 100000; ++i) n += switch_decision(p, {0, dk, 0, emph}, rng) == SwitchChoice::Switch;
    return n / 1e5;
  };
  EXPECT_NEAR(freq(1, true), 0.3, 0.005);
  EXPECT_NEAR(freq(2, true), 0.1, 0.004);
  EXPECT_NEAR(freq(9, true), 0.1, 0.004);
  EXPECT_NEAR(freq(1, false), 0.15, 0.004);
}

TEST(Switching, ImpliedMeasureSumsToOne) {
  Table t1(2, 2), t2(2, 2);
  t1(0, 0) = 0.2; t1(0, 1) = 0.6; t1(1, 0) = 0.1; t1(1, 1) = 0.5;
  t2(0, 0) = 0.1; t2(0, 1) = 0.3; t2(1, 0) = 0.05; t2(1, 1) = 0.2;
  const auto sw = SwitchingModel::tabular({t1, t2});
  const double probs[] = {0.7, 0.3};
  for (std::size_t cur = 0; cur < 2; ++cur) {
    const auto mass = switch_measure(sw, cur, probs, 50);
    double total = 0.0;
    for (double v : mass) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mass[0], 0.7 * t1(cur, 0) + 0.3 * t1(cur, 1), 1e-15);
  }
  const auto amb = switch_measure(SwitchingModel::ambitious(), 0, probs, 5);
  EXPECT_EQ(amb[0], 1.0);
}

TEST(Switching, RejectsProbabilityAboveOne) {
  EXPECT_THROW(SwitchingModel::tabular({Table(1, 1, 1.2)}), ConfigError);
  EXPECT_THROW(SwitchingModel::tabular({}), ConfigError);
}

TEST(Resolve, PrudentOperatorNeverMislabels) {
  auto p = one_label_profile();
  AttentionState st;
  st.aitn = 1.0;
  st.eit = 2.0;
  st.pair = 1;
  Rng rng(4);
  int complete = 0;
  for (int i = 0; i < 100000; ++i) {
    st.type = (i % 2) ? AttackType::Real : AttackType::Feint;
    const auto w = resolve_response(st, p, rng);
    ASSERT_TRUE(w == complete_response_for(st.type) || w == AlertResponse::Incomplete);
    complete += w != AlertResponse::Incomplete;
  }
  EXPECT_NEAR(complete / 1e5, 0.9, 0.004);
}

TEST(Resolve, UnfinishedIsIncomplete) {
  auto p = one_label_profile();
  p.success_prob = Table(1, 2, 1.0);
  AttentionState st;
  st.aitn = 5.0;
  st.eit = 4.999;
  Rng rng(1);
  EXPECT_EQ(resolve_response(st, p, rng), AlertResponse::Incomplete);
  st.eit = 5.0;
  EXPECT_EQ(resolve_response(st, p, rng), AlertResponse::Dismiss);
}

TEST(Profile, ValidationNamesTheKey) {
  auto p = one_label_profile();
  p.mad = {0.0};
  try {
    p.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.where(), "operator.mad");
  }
}
