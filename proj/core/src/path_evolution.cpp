#include "georeward/path_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace georeward {

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double c : components) sum += c * c;
  return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.components.size(); ++i) dot += a.components[i] * b.components[i];
  return dot / (na * nb);
}

HashedTokenEmbedder::HashedTokenEmbedder(HashedEmbedderConfig config) : config_(config) {
  if (config_.dimension == 0) throw std::invalid_argument("embedder dimension must be positive");
}

std::vector<std::string> HashedTokenEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
      current.push_back(raw);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t HashedTokenEmbedder::token_hash(std::string_view token, std::uint64_t seed) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffU;
    h *= kPrime;
  }
  for (const char c : token) {
    h ^= static_cast<unsigned char>(c);
    h *= kPrime;
  }
  return h;
}

std::size_t HashedTokenEmbedder::bucket_of(std::string_view token) const {
  return static_cast<std::size_t>(token_hash(token, config_.seed) % config_.dimension);
}

EmbeddingVector HashedTokenEmbedder::embed(std::string_view text) const {
  EmbeddingVector out{std::vector<double>(config_.dimension, 0.0)};
  for (const auto& token : tokenize(text)) out.components[bucket_of(token)] += 1.0;
  const double n = out.norm();
  if (n > 0.0) {
    for (double& c : out.components) c /= n;
  }
  return out;
}

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> vectors) {
  SimilarityMatrix m{vectors.size(), std::vector<double>(vectors.size() * vectors.size(), 0.0)};
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double s = cosine_similarity(vectors[i], vectors[j]);
      m.values[i * m.size + j] = s;
      m.values[j * m.size + i] = s;
    }
  }
  return m;
}

bool is_eligible(double r_srar, double r_rpcr, const EvolutionParams& params) {
  return !params.gating || (r_srar > params.srar_gate && r_rpcr > params.rpcr_gate);
}

EvolutionResult evolution_rewards(std::span<const EvolutionSample> group, const Embedder& embedder,
                                  const EvolutionParams& params) {
  if (group.empty()) throw std::invalid_argument("evolution_rewards: empty group");
  EvolutionResult result;
  result.rewards.assign(group.size(), 0.0);

  auto& sim = result.similarity;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (is_eligible(group[i].r_srar, group[i].r_rpcr, params)) {
      sim.eligible_indices.push_back(i);
    }
  }
  const std::size_t k = sim.eligible_indices.size();
  if (k == 0) return result;
  if (k == 1) {
    sim.matrix = SimilarityMatrix{1, {0.0}};
    sim.mean_similarity = {0.0};
    result.rewards[sim.eligible_indices.front()] = params.sole_eligible_reward;
    return result;
  }

  std::vector<EmbeddingVector> vectors;
  vectors.reserve(k);
  for (std::size_t idx : sim.eligible_indices) vectors.push_back(embedder.embed(group[idx].think_text));
  sim.matrix = similarity_matrix(vectors);
  sim.mean_similarity.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += sim.matrix(i, j);
    sim.mean_similarity[i] = sum / static_cast<double>(k - 1);
    result.rewards[sim.eligible_indices[i]] = std::clamp(1.0 - sim.mean_similarity[i], 0.0, 1.0);
  }
  return result;
}

}  // namespace georeward
