#include "georeward/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "georeward/types.hpp"

namespace georeward {

bool RewardWeights::valid() const {
  return std::isfinite(srar) && std::isfinite(rpcr) && std::isfinite(evol) && srar >= 0.0 &&
         rpcr >= 0.0 && evol >= 0.0;
}

RewardBreakdown aggregate_reward(const RewardComponents& c, const RewardWeights& w) {
  return RewardBreakdown{c.r_srar, c.r_rpcr, c.r_evol,
                         w.srar * c.r_srar + w.rpcr * c.r_rpcr + w.evol * c.r_evol};
}

std::string_view to_string(KlEstimator estimator) {
  return estimator == KlEstimator::kExactRatio ? "exact" : "k3";
}

std::optional<KlEstimator> parse_kl_estimator(std::string_view text) {
  const std::string lowered = ascii_lower(trim(text));
  if (lowered == "exact" || lowered == "exact_ratio") return KlEstimator::kExactRatio;
  if (lowered == "k3" || lowered == "unbiased_k3") return KlEstimator::kK3;
  return std::nullopt;
}

bool GrpoConfig::valid() const {
  return epsilon_clip > 0.0 && epsilon_clip < 1.0 && std::isfinite(beta_kl) && beta_kl >= 0.0 &&
         std::isfinite(epsilon_std) && epsilon_std > 0.0;
}

GroupScore score_group(std::span<const double> rewards, const GrpoConfig& config) {
  if (rewards.empty()) throw std::invalid_argument("score_group: empty reward list");
  GroupScore out;
  out.rewards.assign(rewards.begin(), rewards.end());
  const auto n = static_cast<double>(rewards.size());
  double sum = 0.0;
  for (double r : rewards) sum += r;
  out.mean = sum / n;
  double sq = 0.0;
  for (double r : rewards) sq += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(sq / n);
  out.advantages.assign(rewards.size(), 0.0);
  if (out.std > config.epsilon_std) {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      out.advantages[i] = (rewards[i] - out.mean) / out.std;
    }
  }
  return out;
}

std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& config) {
  return score_group(rewards, config).advantages;
}

namespace {
void require_finite(const PolicyLogProbs& lp) {
  if (!std::isfinite(lp.logp_new) || !std::isfinite(lp.logp_old) || !std::isfinite(lp.logp_ref)) {
    throw std::invalid_argument("log-probabilities must be finite");
  }
  if (lp.logp_new > 0.0 || lp.logp_old > 0.0 || lp.logp_ref > 0.0) {
    throw std::invalid_argument("log-probabilities must be <= 0");
  }
}
}  // namespace

double surrogate_term(const PolicyLogProbs& lp, double advantage, const GrpoConfig& config) {
  require_finite(lp);
  const double ratio = std::exp(lp.logp_new - lp.logp_old);
  const double clipped = std::clamp(ratio, 1.0 - config.epsilon_clip, 1.0 + config.epsilon_clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(const PolicyLogProbs& lp, const GrpoConfig& config) {
  require_finite(lp);
  if (config.kl_estimator == KlEstimator::kExactRatio) return lp.logp_new - lp.logp_ref;
  const double log_r = lp.logp_ref - lp.logp_new;
  // r - log r - 1 with r = exp(log_r); expm1 keeps precision near r = 1.
  return std::max(0.0, std::expm1(log_r) - log_r);
}

double grpo_objective(std::span<const RolloutTerms> group, const GrpoConfig& config) {
  if (group.empty()) throw std::invalid_argument("grpo_objective: empty group");
  double sum = 0.0;
  for (const auto& item : group) {
    sum += surrogate_term(item.logprobs, item.advantage, config) -
           config.beta_kl * kl_penalty(item.logprobs, config);
  }
  return sum / static_cast<double>(group.size());
}

}  // namespace georeward
