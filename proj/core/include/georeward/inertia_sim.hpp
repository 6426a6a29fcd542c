#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "georeward/grpo.hpp"
#include "georeward/path_evolution.hpp"

namespace georeward {

/// One reasoning template of the toy policy. Choosing it yields a fixed
/// correctness reward and the template's reasoning text.
struct ReasoningTemplate {
  std::string think_text;
  EmbeddingVector embedding;
  double correctness = 0.0;
};

struct TemplateWorld {
  std::vector<ReasoningTemplate> templates;

  std::size_t size() const { return templates.size(); }
  /// Index of the unique template with maximal correctness.
  std::size_t salient_index() const;
  /// Throws std::invalid_argument unless M >= 2 and every correctness lies
  /// in (rpcr_gate, 1]. With `require_salient`, exactly one template must
  /// also be strictly best. simulate() skips the salient check so that
  /// equal-correctness worlds can be run as a control.
  void validate(double rpcr_gate = 0.80, bool require_salient = true) const;
};

/// Template 0 is salient. Reasoning texts use vocabularies whose hashed
/// buckets are pairwise disjoint under `embedder`, so cross-template cosine
/// similarity is exactly 0.
TemplateWorld make_template_world(std::size_t count, const HashedTokenEmbedder& embedder,
                                  double salient_correctness = 0.95, double other_correctness = 0.90);

struct SimConfig {
  std::size_t template_count = 8;
  std::size_t group_size = 15;
  std::size_t steps = 300;
  double learning_rate = 0.1;
  RewardWeights weights;
  std::uint64_t seed = 0;
  bool stochastic_correctness = false;
  /// Clipped-surrogate update through surrogate_term, with `clip_epochs`
  /// passes per sampled group against the pre-step policy.
  bool clipped_surrogate = false;
  std::size_t clip_epochs = 2;
  GrpoConfig grpo;
  EvolutionParams evolution;
};

struct SimStep {
  std::size_t step = 0;  // 1-based
  double entropy = 0.0;  // after the update
  double mean_reward = 0.0;
  double mean_evol = 0.0;
  double top_template_prob = 0.0;
  std::size_t top_template = 0;
  std::vector<std::size_t> visits;  // template histogram of this step's group
};

struct SimTrajectory {
  std::vector<SimStep> steps;
  std::vector<double> final_logits;
};

std::vector<double> softmax(std::span<const double> logits);
/// Shannon entropy (nats) of softmax(logits).
double policy_entropy(std::span<const double> logits);

SimTrajectory simulate(const TemplateWorld& world, const SimConfig& config, const Embedder& embedder);

/// step,entropy,mean_reward,mean_evol,top_template_prob
void write_csv(std::ostream& out, const SimTrajectory& trajectory);
nlohmann::json summary_json(const SimTrajectory& trajectory, const SimConfig& config);

/// Paired runs on identical seeds: configured weights vs the same weights
/// with evol = 0.
struct PairedSeedResult {
  std::uint64_t seed = 0;
  double entropy_with_evol = 0.0;
  double entropy_without_evol = 0.0;
  double first_reward_with_evol = 0.0;
  double last_reward_with_evol = 0.0;
};

struct EvolComparison {
  std::vector<PairedSeedResult> seeds;
  double median_with_evol = 0.0;
  double median_without_evol = 0.0;
  double paired_win_fraction = 0.0;  // share of seeds where with > without
};

EvolComparison compare_evol(const TemplateWorld& world, const SimConfig& config,
                            std::span<const std::uint64_t> seeds, const Embedder& embedder,
                            std::size_t parallel = 1);
nlohmann::json to_json(const EvolComparison& comparison);

double median(std::vector<double> values);

}  // namespace georeward
