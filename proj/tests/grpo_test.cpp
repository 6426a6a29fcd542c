#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "georeward/grpo.hpp"

using namespace georeward;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

PolicyLogProbs ratio(double rho) { return {std::log(rho) - 1.0, -1.0, -1.0}; }

}  // namespace

TEST(AggregateReward, WeightedSum) {
  const auto b = aggregate_reward({1.0, 0.8, 0.5});
  EXPECT_NEAR(b.total, 0.76, 1e-12);
  EXPECT_EQ(aggregate_reward({0, 0, 0}, {0.3, 0.3, 0.4}).total, 0.0);
  EXPECT_NEAR(aggregate_reward({1, 1, 1}).total, 1.0, 1e-12);
  EXPECT_EQ(b.r_rpcr, 0.8);
  EXPECT_NEAR(aggregate_reward({1.0, 0.5, 0.25}, {2.0, -1.0, 4.0}).total, 2.0 - 0.5 + 1.0, 1e-12);
}

TEST(RewardWeights, Validity) {
  EXPECT_TRUE(RewardWeights{}.valid());
  EXPECT_FALSE((RewardWeights{std::nan(""), 0.7, 0.2}.valid()));
}

TEST(GroupAdvantages, Examples) {
  const std::vector<double> two{1.0, 0.0};
  EXPECT_EQ(group_advantages(two), (std::vector<double>{1.0, -1.0}));
  const std::vector<double> flat{0.7, 0.7, 0.7};
  EXPECT_EQ(group_advantages(flat), (std::vector<double>{0.0, 0.0, 0.0}));
  const std::vector<double> three{0.0, 0.5, 1.0};
  const auto a = group_advantages(three);
  EXPECT_NEAR(a[0], -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(a[1], 0.0, 1e-12);
  EXPECT_NEAR(a[2], std::sqrt(1.5), 1e-12);
  const std::vector<double> single{0.3};
  EXPECT_EQ(group_advantages(single), (std::vector<double>{0.0}));
  EXPECT_THROW(group_advantages(std::vector<double>{}), std::invalid_argument);
}

TEST(GroupAdvantages, ScoreGroupStats) {
  const std::vector<double> r{0.0, 0.5, 1.0};
  const auto g = score_group(r);
  EXPECT_DOUBLE_EQ(g.mean, 0.5);
  EXPECT_NEAR(g.std, std::sqrt(1.0 / 6.0), 1e-15);
  EXPECT_EQ(g.rewards, r);
}

TEST(GroupAdvantages, NormalizationAndInvariances) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(15);
    for (auto& x : r) x = u(rng);
    const auto a = group_advantages(r);
    EXPECT_NEAR(mean_of(a), 0.0, 1e-9);
    EXPECT_NEAR(population_std(a), 1.0, 1e-9);

    const double c = shift(rng), k = scale(rng);
    std::vector<double> moved = r, scaled = r;
    for (auto& x : moved) x += c;
    for (auto& x : scaled) x *= k;
    const auto am = group_advantages(moved);
    const auto as = group_advantages(scaled);
    for (std::size_t i = 0; i < r.size(); ++i) {
      EXPECT_NEAR(am[i], a[i], 1e-9);
      EXPECT_NEAR(as[i], a[i], 1e-9);
    }
  }
}

TEST(SurrogateTerm, Examples) {
  EXPECT_DOUBLE_EQ(surrogate_term({-2.0, -2.0, -2.0}, 0.5), 0.5);
  EXPECT_NEAR(surrogate_term(ratio(2.0), 1.0), 1.2, 1e-12);
  EXPECT_NEAR(surrogate_term(ratio(0.5), -1.0), -0.8, 1e-12);
  EXPECT_NEAR(surrogate_term(ratio(0.5), 1.0), 0.5, 1e-12);   // below the clip, unclipped wins
  EXPECT_NEAR(surrogate_term(ratio(2.0), -1.0), -2.0, 1e-12);  // pessimistic branch
}

TEST(SurrogateTerm, UnitRatioReturnsAdvantage) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> adv(-3, 3);
  std::uniform_real_distribution<double> eps(0.01, 0.99);
  for (int i = 0; i < 500; ++i) {
    GrpoConfig cfg;
    cfg.epsilon_clip = eps(rng);
    const double a = adv(rng);
    EXPECT_EQ(surrogate_term({-1.5, -1.5, -0.5}, a, cfg), a);
  }
}

TEST(KlPenalty, Examples) {
  GrpoConfig exact;
  exact.kl_estimator = KlEstimator::kExactRatio;
  EXPECT_EQ(kl_penalty({-1.0, -2.0, -1.0}), 0.0);
  EXPECT_EQ(kl_penalty({-1.0, -2.0, -1.0}, exact), 0.0);
  // r = pi_ref / pi_new = 2
  EXPECT_NEAR(kl_penalty({-2.0, -2.0, -2.0 + std::log(2.0)}), 2.0 - std::log(2.0) - 1.0, 1e-12);
  EXPECT_NEAR(kl_penalty({-1.0, -1.0, -3.0}, exact), 2.0, 1e-12);
  EXPECT_NEAR(kl_penalty({-3.0, -1.0, -1.0}, exact), -2.0, 1e-12);
}

TEST(KlPenalty, K3NonNegativeZeroOnlyAtEquality) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lp(-50.0, 0.0);
  for (int i = 0; i < 5000; ++i) {
    const PolicyLogProbs p{lp(rng), lp(rng), lp(rng)};
    const double k = kl_penalty(p);
    EXPECT_GE(k, 0.0);
    if (p.logp_new != p.logp_ref) EXPECT_GT(k, 0.0);
  }
  EXPECT_GT(kl_penalty({-1.0, -1.0, -1.0 - 1e-6}), 0.0);
}

TEST(LogProbs, RejectInvalid) {
  EXPECT_THROW(kl_penalty({0.5, -1.0, -1.0}), std::invalid_argument);
  EXPECT_THROW(surrogate_term({std::numeric_limits<double>::quiet_NaN(), -1.0, -1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(kl_penalty({-1.0, -1.0, -std::numeric_limits<double>::infinity()}), std::invalid_argument);
}

TEST(GrpoObjective, Examples) {
  const std::vector<double> rewards{0.2, 0.9, 0.4, 0.4};
  const auto adv = group_advantages(rewards);
  std::vector<RolloutTerms> group;
  for (double a : adv) group.push_back({{-1.0, -1.0, -1.0}, a});
  EXPECT_NEAR(grpo_objective(group), 0.0, 1e-12);

  const std::vector<RolloutTerms> single{{{-1.0, -1.0, -1.0}, 0.0}};
  EXPECT_EQ(grpo_objective(single), 0.0);
  EXPECT_THROW(grpo_objective(std::vector<RolloutTerms>{}), std::invalid_argument);
}

TEST(GrpoObjective, ZeroBetaIsMeanSurrogate) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> lp(-5.0, 0.0);
  std::uniform_real_distribution<double> adv(-2.0, 2.0);
  GrpoConfig cfg;
  cfg.beta_kl = 0.0;
  std::vector<RolloutTerms> group;
  double sum = 0.0;
  for (int i = 0; i < 15; ++i) {
    group.push_back({{lp(rng), lp(rng), lp(rng)}, adv(rng)});
    sum += surrogate_term(group.back().logprobs, group.back().advantage, cfg);
  }
  EXPECT_NEAR(grpo_objective(group, cfg), sum / 15.0, 1e-12);

  GrpoConfig with_kl;
  double expected = 0.0;
  for (const auto& t : group) {
    expected += surrogate_term(t.logprobs, t.advantage, with_kl) - 0.04 * kl_penalty(t.logprobs, with_kl);
  }
  EXPECT_NEAR(grpo_objective(group, with_kl), expected / 15.0, 1e-12);
}

TEST(GrpoConfig, Validity) {
  EXPECT_TRUE(GrpoConfig{}.valid());
  GrpoConfig bad;
  bad.epsilon_clip = 1.0;
  EXPECT_FALSE(bad.valid());
  bad.epsilon_clip = 0.2;
  bad.beta_kl = -0.1;
  EXPECT_FALSE(bad.valid());
  EXPECT_EQ(parse_kl_estimator("k3"), KlEstimator::kK3);
  EXPECT_EQ(parse_kl_estimator(to_string(KlEstimator::kExactRatio)), KlEstimator::kExactRatio);
  EXPECT_FALSE(parse_kl_estimator("forward"));
}
