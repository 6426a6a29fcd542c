#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace georeward {

struct EmbeddingVector {
  std::vector<double> components;

  std::size_t dimension() const { return components.size(); }
  double norm() const;
  /// Zero vector; produced for text without tokens.
  bool degenerate() const { return norm() == 0.0; }
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Maps a reasoning text to a vector. Implementations must be deterministic
/// for a fixed configuration and safe to call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::size_t dimension() const = 0;
};

struct HashedEmbedderConfig {
  std::size_t dimension = 256;
  std::uint64_t seed = 0;
};

/// Reference embedder: hashed bag of words.
///
/// Text is ASCII case-folded and split on runs of characters that are not
/// [a-z0-9]; bytes >= 0x80 count as token characters so UTF-8 words stay
/// intact. Each token goes to bucket token_hash(token, seed) % dimension, the
/// bucket counts are scaled to unit Euclidean norm. Text with no tokens maps
/// to the zero vector.
///
/// token_hash is 64-bit FNV-1a (offset 0xcbf29ce484222325, prime
/// 0x100000001b3) fed first with the 8 seed bytes in little-endian order and
/// then with the token bytes, so bucket indices are identical on every
/// platform.
class HashedTokenEmbedder final : public Embedder {
 public:
  explicit HashedTokenEmbedder(HashedEmbedderConfig config = {});

  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dimension() const override { return config_.dimension; }
  std::size_t bucket_of(std::string_view token) const;

  static std::vector<std::string> tokenize(std::string_view text);
  static std::uint64_t token_hash(std::string_view token, std::uint64_t seed);

 private:
  HashedEmbedderConfig config_;
};

/// Symmetric k x k cosine matrix with a zero diagonal. Pairs involving a
/// zero vector score 0.
struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> vectors);

struct EvolutionParams {
  double srar_gate = 0.99;  // eligible iff r_srar > srar_gate
  double rpcr_gate = 0.80;  // and r_rpcr > rpcr_gate
  bool gating = true;       // disable only for tests
  double sole_eligible_reward = 1.0;
};

struct EvolutionSample {
  std::string think_text;
  double r_srar = 0.0;
  double r_rpcr = 0.0;
};

struct GroupSimilarity {
  std::vector<std::size_t> eligible_indices;
  SimilarityMatrix matrix;               // over eligible samples only
  std::vector<double> mean_similarity;   // per eligible sample
  std::size_t eligible_count() const { return eligible_indices.size(); }
};

struct EvolutionResult {
  std::vector<double> rewards;  // one per input sample
  GroupSimilarity similarity;
};

bool is_eligible(double r_srar, double r_rpcr, const EvolutionParams& params = {});

/// Path-evolution reward: 1 - mean cosine similarity of an eligible sample's
/// reasoning text to the other eligible samples, clamped to [0, 1].
/// Ineligible samples score 0; a lone eligible sample scores
/// `sole_eligible_reward`.
EvolutionResult evolution_rewards(std::span<const EvolutionSample> group, const Embedder& embedder,
                                  const EvolutionParams& params = {});

}  // namespace georeward
