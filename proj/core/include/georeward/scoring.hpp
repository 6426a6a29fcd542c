#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "georeward/grpo.hpp"
#include "georeward/path_evolution.hpp"
#include "georeward/rollout.hpp"
#include "georeward/task_rewards.hpp"
#include "georeward/types.hpp"

namespace georeward {

/// Everything that determines a group score. Shared, immutable.
struct EngineConfig {
  RewardWeights weights;
  GrpoConfig grpo;
  TaskRewardConfig task;
  EvolutionParams evolution;
  FormatPolicy format = FormatPolicy::kStrict;
  HashedEmbedderConfig embedder;
};

nlohmann::json to_json(const EngineConfig& config);

struct ScoreRequest {
  std::string request_id;
  TaskType task = TaskType::kRec;
  std::optional<std::string> query;
  GroundTruth ground_truth;
  std::vector<std::string> rollouts;
  std::optional<RewardWeights> weights;
  std::optional<GrpoConfig> grpo;
};

struct RolloutScore {
  bool format_valid = false;
  double r_srar = 0.0;
  double r_rpcr = 0.0;
  double r_evol = 0.0;
  double total = 0.0;
  double advantage = 0.0;
  bool eligible = false;
};

struct ScoreResponse {
  std::string request_id;
  std::vector<RolloutScore> per_rollout;
  double mean = 0.0;
  double std = 0.0;
  std::size_t eligible_count = 0;
};

enum class ErrorCode { kInvalidRequest, kTaskMismatch, kInternal };
std::string_view to_string(ErrorCode code);

class RequestError : public std::runtime_error {
 public:
  RequestError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Throws RequestError. A ground truth that fits another task's schema is
/// TASK_MISMATCH; anything else malformed is INVALID_REQUEST.
ScoreRequest score_request_from_json(const nlohmann::json& value);
nlohmann::json to_json(const ScoreRequest& request);
nlohmann::json to_json(const ScoreResponse& response);
nlohmann::json error_json(ErrorCode code, std::string_view message);

/// Result of handling one serialized request.
struct HandledRequest {
  int http_status = 200;
  std::string body;
  std::optional<ScoreResponse> response;
  std::optional<ScoreRequest> request;
};

/// Parse -> format reward -> routed correctness -> gated path evolution ->
/// weighted total -> group advantages. Stateless and thread-safe.
class ScoringEngine {
 public:
  explicit ScoringEngine(EngineConfig config = {}, std::shared_ptr<const Embedder> embedder = nullptr);

  const EngineConfig& config() const { return config_; }
  const Embedder& embedder() const { return *embedder_; }

  ScoreResponse score(const ScoreRequest& request) const;
  /// Never throws; errors come back as an error body with a 4xx/5xx status.
  HandledRequest handle(std::string_view body) const;

 private:
  EngineConfig config_;
  std::shared_ptr<const Embedder> embedder_;
};

}  // namespace georeward
