#include "georeward/inertia_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

namespace georeward {
namespace {

// Scene-analysis words used to build template reasoning texts.
constexpr std::string_view kVocabulary[] = {
    "harbor",    "vessel",   "pier",      "wake",       "runway",    "taxiway",  "apron",
    "hangar",    "farmland", "furrow",    "irrigation", "orchard",   "bridge",   "river",
    "embankment", "shadow",  "roof",      "parking",    "lane",      "vehicle",  "stadium",
    "track",     "oval",     "bleachers", "tank",       "storage",   "pipeline", "refinery",
    "forest",    "canopy",   "clearing",  "trail",      "coastline", "beach",    "surf",
    "dune",      "residential", "courtyard", "grid",    "block",     "railway",  "platform",
    "depot",     "container", "crane",    "quay",       "golf",      "fairway",  "bunker",
    "green",     "reservoir", "dam",      "spillway",   "terrace",   "texture",  "contour",
    "gradient",  "symmetry", "cluster",   "boundary",   "corner",    "center",   "north",
    "south",     "east",     "west",      "scale",      "outline",   "color",    "edge"};

constexpr std::size_t kWordsPerTemplate = 4;

double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

std::size_t sample_index(std::span<const double> probs, std::mt19937_64& engine) {
  const double u = uniform01(engine);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return probs.size() - 1;
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

std::size_t TemplateWorld::salient_index() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < templates.size(); ++i) {
    if (templates[i].correctness > templates[best].correctness) best = i;
  }
  return best;
}

void TemplateWorld::validate(double rpcr_gate, bool require_salient) const {
  if (templates.size() < 2) throw std::invalid_argument("template world needs at least two templates");
  const std::size_t best = salient_index();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (!(templates[i].correctness > rpcr_gate) || templates[i].correctness > 1.0) {
      throw std::invalid_argument("template correctness must lie in (gate, 1]");
    }
    if (require_salient && i != best && !(templates[i].correctness < templates[best].correctness)) {
      throw std::invalid_argument("exactly one template must have maximal correctness");
    }
  }
}

TemplateWorld make_template_world(std::size_t count, const HashedTokenEmbedder& embedder,
                                  double salient_correctness, double other_correctness) {
  TemplateWorld world;
  std::set<std::size_t> used_buckets;
  std::size_t next_word = 0;
  std::size_t synthetic = 0;
  auto take_word = [&](std::size_t index) {
    while (true) {
      std::string word;
      if (next_word < std::size(kVocabulary)) {
        word = std::string(kVocabulary[next_word++]);
      } else {
        word = "path" + std::to_string(index) + "cue" + std::to_string(synthetic++);
      }
      if (used_buckets.insert(embedder.bucket_of(word)).second) return word;
    }
  };
  for (std::size_t m = 0; m < count; ++m) {
    std::string text;
    for (std::size_t w = 0; w < kWordsPerTemplate; ++w) {
      if (!text.empty()) text += ' ';
      text += take_word(m);
    }
    ReasoningTemplate t;
    t.think_text = text;
    t.embedding = embedder.embed(text);
    t.correctness = m == 0 ? salient_correctness : other_correctness;
    world.templates.push_back(std::move(t));
  }
  world.validate();
  return world;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

double policy_entropy(std::span<const double> logits) {
  double h = 0.0;
  for (double p : softmax(logits)) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(0.0, h);
}

SimTrajectory simulate(const TemplateWorld& world, const SimConfig& config, const Embedder& embedder) {
  world.validate(config.evolution.rpcr_gate, /*require_salient=*/false);
  if (config.steps == 0) throw std::invalid_argument("simulate: steps must be at least 1");
  if (config.group_size == 0) throw std::invalid_argument("simulate: group_size must be at least 1");

  const std::size_t m_count = world.size();
  std::mt19937_64 engine(config.seed);
  std::vector<double> logits(m_count, 0.0);
  SimTrajectory trajectory;
  trajectory.steps.reserve(config.steps);

  std::vector<std::size_t> choices(config.group_size);
  std::vector<EvolutionSample> samples(config.group_size);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const std::vector<double> probs = softmax(logits);
    SimStep record;
    record.step = step;
    record.visits.assign(m_count, 0);
    for (std::size_t i = 0; i < config.group_size; ++i) {
      choices[i] = sample_index(probs, engine);
      ++record.visits[choices[i]];
      const auto& tmpl = world.templates[choices[i]];
      samples[i].think_text = tmpl.think_text;
      samples[i].r_srar = 1.0;
      samples[i].r_rpcr = config.stochastic_correctness
                              ? (uniform01(engine) < tmpl.correctness ? 1.0 : 0.0)
                              : tmpl.correctness;
    }

    const EvolutionResult evol = evolution_rewards(samples, embedder, config.evolution);
    std::vector<double> totals(config.group_size);
    double evol_sum = 0.0;
    for (std::size_t i = 0; i < config.group_size; ++i) {
      totals[i] = aggregate_reward({samples[i].r_srar, samples[i].r_rpcr, evol.rewards[i]}, config.weights).total;
      evol_sum += evol.rewards[i];
    }
    const GroupScore group = score_group(totals, config.grpo);
    record.mean_reward = group.mean;
    record.mean_evol = evol_sum / static_cast<double>(config.group_size);

    if (!config.clipped_surrogate) {
      // Categorical score function: d log pi(a) / d logit_m = 1[a = m] - p_m.
      std::vector<double> grad(m_count, 0.0);
      for (std::size_t i = 0; i < config.group_size; ++i) {
        for (std::size_t m = 0; m < m_count; ++m) {
          grad[m] += group.advantages[i] * ((choices[i] == m ? 1.0 : 0.0) - probs[m]);
        }
      }
      for (std::size_t m = 0; m < m_count; ++m) logits[m] += config.learning_rate * grad[m];
    } else {
      const std::vector<double> old_probs = probs;
      for (std::size_t epoch = 0; epoch < config.clip_epochs; ++epoch) {
        const std::vector<double> cur = softmax(logits);
        std::vector<double> grad(m_count, 0.0);
        for (std::size_t i = 0; i < config.group_size; ++i) {
          const double lp_new = std::log(cur[choices[i]]);
          const double lp_old = std::log(old_probs[choices[i]]);
          const PolicyLogProbs lp{lp_new, lp_old, lp_old};
          const double ratio = std::exp(lp_new - lp_old);
          const double adv = group.advantages[i];
          // The clipped branch is constant in the logits.
          if (surrogate_term(lp, adv, config.grpo) != ratio * adv) continue;
          for (std::size_t m = 0; m < m_count; ++m) {
            grad[m] += adv * ratio * ((choices[i] == m ? 1.0 : 0.0) - cur[m]);
          }
        }
        for (std::size_t m = 0; m < m_count; ++m) logits[m] += config.learning_rate * grad[m];
      }
    }

    const std::vector<double> after = softmax(logits);
    record.entropy = policy_entropy(logits);
    record.top_template = argmax(after);
    record.top_template_prob = after[record.top_template];
    trajectory.steps.push_back(std::move(record));
  }
  trajectory.final_logits = logits;
  return trajectory;
}

void write_csv(std::ostream& out, const SimTrajectory& trajectory) {
  out << "step,entropy,mean_reward,mean_evol,top_template_prob\n";
  const auto old_precision = out.precision(17);
  for (const auto& s : trajectory.steps) {
    out << s.step << ',' << s.entropy << ',' << s.mean_reward << ',' << s.mean_evol << ','
        << s.top_template_prob << '\n';
  }
  out.precision(old_precision);
}

nlohmann::json summary_json(const SimTrajectory& trajectory, const SimConfig& config) {
  nlohmann::json out{
      {"seed", config.seed},
      {"steps", trajectory.steps.size()},
      {"group_size", config.group_size},
      {"learning_rate", config.learning_rate},
      {"weights", {{"srar", config.weights.srar}, {"rpcr", config.weights.rpcr}, {"evol", config.weights.evol}}},
      {"final_logits", trajectory.final_logits},
  };
  if (!trajectory.steps.empty()) {
    const auto& first = trajectory.steps.front();
    const auto& last = trajectory.steps.back();
    std::vector<std::size_t> visits(last.visits.size(), 0);
    for (const auto& s : trajectory.steps) {
      for (std::size_t m = 0; m < s.visits.size(); ++m) visits[m] += s.visits[m];
    }
    out["initial_mean_reward"] = first.mean_reward;
    out["final_mean_reward"] = last.mean_reward;
    out["final_entropy"] = last.entropy;
    out["final_mean_evol"] = last.mean_evol;
    out["top_template"] = last.top_template;
    out["top_template_prob"] = last.top_template_prob;
    out["visit_histogram"] = visits;
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

EvolComparison compare_evol(const TemplateWorld& world, const SimConfig& config,
                            std::span<const std::uint64_t> seeds, const Embedder& embedder,
                            std::size_t parallel) {
  EvolComparison out;
  out.seeds.resize(seeds.size());
  auto run_one = [&](std::size_t idx) {
    SimConfig with = config;
    with.seed = seeds[idx];
    SimConfig without = with;
    without.weights.evol = 0.0;
    const SimTrajectory a = simulate(world, with, embedder);
    const SimTrajectory b = simulate(world, without, embedder);
    out.seeds[idx] = PairedSeedResult{seeds[idx], a.steps.back().entropy, b.steps.back().entropy,
                                      a.steps.front().mean_reward, a.steps.back().mean_reward};
  };
  const std::size_t workers = std::clamp<std::size_t>(parallel, 1, std::max<std::size_t>(1, seeds.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < seeds.size(); i += workers) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<double> with, without;
  std::size_t wins = 0;
  for (const auto& s : out.seeds) {
    with.push_back(s.entropy_with_evol);
    without.push_back(s.entropy_without_evol);
    if (s.entropy_with_evol > s.entropy_without_evol) ++wins;
  }
  out.median_with_evol = median(with);
  out.median_without_evol = median(without);
  out.paired_win_fraction =
      seeds.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(seeds.size());
  return out;
}

nlohmann::json to_json(const EvolComparison& c) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : c.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"entropy_with_evol", s.entropy_with_evol},
                     {"entropy_without_evol", s.entropy_without_evol},
                     {"first_reward_with_evol", s.first_reward_with_evol},
                     {"last_reward_with_evol", s.last_reward_with_evol}});
  }
  return nlohmann::json{{"median_entropy_with_evol", c.median_with_evol},
                        {"median_entropy_without_evol", c.median_without_evol},
                        {"entropy_gap", c.median_with_evol - c.median_without_evol},
                        {"paired_win_fraction", c.paired_win_fraction},
                        {"seeds", std::move(seeds)}};
}

}  // namespace georeward
