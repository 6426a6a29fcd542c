#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace georeward {

struct RewardWeights {
  double srar = 0.1;
  double rpcr = 0.7;
  double evol = 0.2;

  bool valid() const;
};

struct RewardComponents {
  double r_srar = 0.0;
  double r_rpcr = 0.0;
  double r_evol = 0.0;
};

struct RewardBreakdown {
  double r_srar = 0.0;
  double r_rpcr = 0.0;
  double r_evol = 0.0;
  double total = 0.0;
};

RewardBreakdown aggregate_reward(const RewardComponents& components, const RewardWeights& weights = {});

enum class KlEstimator {
  kExactRatio,  // log pi_new - log pi_ref on the sampled sequence; signed
  kK3,          // r - log r - 1, r = pi_ref / pi_new; non-negative
};

std::string_view to_string(KlEstimator estimator);
std::optional<KlEstimator> parse_kl_estimator(std::string_view text);

struct GrpoConfig {
  double epsilon_clip = 0.2;
  double beta_kl = 0.04;
  KlEstimator kl_estimator = KlEstimator::kK3;
  double epsilon_std = 1e-8;

  bool valid() const;
};

struct GroupScore {
  std::vector<double> rewards;
  std::vector<double> advantages;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

/// Group-relative advantages (r_i - mean) / std with the population std.
/// Groups whose std is at most epsilon_std get all-zero advantages.
GroupScore score_group(std::span<const double> rewards, const GrpoConfig& config = {});
std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& config = {});

/// Sequence-level log-probabilities of one rollout under the current, the
/// sampling and the reference policy.
struct PolicyLogProbs {
  double logp_new = 0.0;
  double logp_old = 0.0;
  double logp_ref = 0.0;
};

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A) with rho = exp(new - old).
double surrogate_term(const PolicyLogProbs& lp, double advantage, const GrpoConfig& config = {});
double kl_penalty(const PolicyLogProbs& lp, const GrpoConfig& config = {});

struct RolloutTerms {
  PolicyLogProbs logprobs;
  double advantage = 0.0;
};

/// Mean over the group of surrogate_term - beta * kl_penalty.
double grpo_objective(std::span<const RolloutTerms> group, const GrpoConfig& config = {});

}  // namespace georeward
