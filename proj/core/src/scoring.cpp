#include "georeward/scoring.hpp"

#include "georeward/json_io.hpp"

namespace georeward {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& message) {
  throw RequestError(ErrorCode::kInvalidRequest, message);
}

double number_field(const json& obj, const char* key, double fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) invalid(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

RewardWeights weights_from_json(const json& value) {
  RewardWeights w;
  if (value.is_array()) {
    if (value.size() != 3 || !value[0].is_number() || !value[1].is_number() || !value[2].is_number()) {
      invalid("'weights' array must hold three numbers");
    }
    w = {value[0].get<double>(), value[1].get<double>(), value[2].get<double>()};
  } else if (value.is_object()) {
    w.srar = number_field(value, "srar", w.srar);
    w.rpcr = number_field(value, "rpcr", w.rpcr);
    w.evol = number_field(value, "evol", w.evol);
  } else {
    invalid("'weights' must be an object or a three-element array");
  }
  if (!w.valid()) invalid("'weights' must be finite and non-negative");
  return w;
}

GrpoConfig grpo_from_json(const json& value, const GrpoConfig& base) {
  if (!value.is_object()) invalid("'grpo' must be an object");
  GrpoConfig g = base;
  g.epsilon_clip = number_field(value, "epsilon_clip", g.epsilon_clip);
  g.beta_kl = number_field(value, "beta_kl", g.beta_kl);
  g.epsilon_std = number_field(value, "epsilon_std", g.epsilon_std);
  if (const auto it = value.find("kl_estimator"); it != value.end()) {
    if (!it->is_string()) invalid("'kl_estimator' must be a string");
    const auto est = parse_kl_estimator(it->get<std::string>());
    if (!est) invalid("unknown kl_estimator '" + it->get<std::string>() + "'");
    g.kl_estimator = *est;
  }
  if (!g.valid()) invalid("'grpo' values out of range");
  return g;
}

json to_json(const GrpoConfig& g) {
  return json{{"epsilon_clip", g.epsilon_clip},
              {"beta_kl", g.beta_kl},
              {"kl_estimator", to_string(g.kl_estimator)},
              {"epsilon_std", g.epsilon_std}};
}

json to_json(const RewardWeights& w) {
  return json{{"srar", w.srar}, {"rpcr", w.rpcr}, {"evol", w.evol}};
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidRequest:
      return "INVALID_REQUEST";
    case ErrorCode::kTaskMismatch:
      return "TASK_MISMATCH";
    case ErrorCode::kInternal:
      return "INTERNAL";
  }
  return "INTERNAL";
}

json to_json(const EngineConfig& c) {
  return json{
      {"weights", to_json(c.weights)},
      {"grpo", to_json(c.grpo)},
      {"rec", {{"full_iou", c.task.rec.full_iou},
               {"partial_iou", c.task.rec.partial_iou},
               {"partial_factor", c.task.rec.partial_factor}}},
      {"match", {{"full_iou", c.task.match.full_iou},
                 {"soft_iou", c.task.match.soft_iou},
                 {"soft_score", c.task.match.soft_score},
                 {"policy", to_string(c.task.matching)}}},
      {"evolution", {{"srar_gate", c.evolution.srar_gate},
                     {"rpcr_gate", c.evolution.rpcr_gate},
                     {"gating", c.evolution.gating},
                     {"sole_eligible_reward", c.evolution.sole_eligible_reward}}},
      {"format", c.format == FormatPolicy::kStrict ? "strict" : "lenient"},
      {"embedder", {{"dimension", c.embedder.dimension}, {"seed", c.embedder.seed}}},
  };
}

ScoreRequest score_request_from_json(const json& value) {
  if (!value.is_object()) invalid("request body must be a JSON object");
  ScoreRequest req;

  const auto id = value.find("request_id");
  if (id == value.end()) invalid("missing 'request_id'");
  if (id->is_string()) {
    req.request_id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    req.request_id = id->dump();
  } else {
    invalid("'request_id' must be a string or integer");
  }

  const auto task = value.find("task");
  if (task == value.end() || !task->is_string()) invalid("missing 'task'");
  const auto parsed_task = parse_task_type(task->get<std::string>());
  if (!parsed_task) invalid("unknown task '" + task->get<std::string>() + "'");
  req.task = *parsed_task;

  if (const auto q = value.find("query"); q != value.end() && !q->is_null()) {
    if (!q->is_string()) invalid("'query' must be a string");
    req.query = q->get<std::string>();
  }

  const auto gt = value.find("ground_truth");
  if (gt == value.end()) invalid("missing 'ground_truth'");
  if (auto payload = payload_from_json(req.task, *gt)) {
    req.ground_truth = std::move(*payload);
  } else {
    for (TaskType other : {TaskType::kRec, TaskType::kOvd, TaskType::kVqa}) {
      if (other != req.task && payload_from_json(other, *gt)) {
        throw RequestError(ErrorCode::kTaskMismatch,
                           "'ground_truth' is a " + std::string(to_string(other)) +
                               " payload but task is " + std::string(to_string(req.task)));
      }
    }
    invalid("'ground_truth' does not match the " + std::string(to_string(req.task)) + " schema");
  }

  const auto rollouts = value.find("rollouts");
  if (rollouts == value.end() || !rollouts->is_array()) invalid("'rollouts' must be an array");
  if (rollouts->empty()) invalid("'rollouts' must not be empty");
  for (const auto& r : *rollouts) {
    if (!r.is_string()) invalid("every rollout must be a string");
    req.rollouts.push_back(r.get<std::string>());
  }

  if (const auto w = value.find("weights"); w != value.end() && !w->is_null()) {
    req.weights = weights_from_json(*w);
  }
  if (const auto g = value.find("grpo"); g != value.end() && !g->is_null()) {
    req.grpo = grpo_from_json(*g, GrpoConfig{});
  }
  return req;
}

json to_json(const ScoreRequest& req) {
  json out{{"request_id", req.request_id},
           {"task", to_string(req.task)},
           {"ground_truth", to_json(req.ground_truth)},
           {"rollouts", req.rollouts}};
  if (req.query) out["query"] = *req.query;
  if (req.weights) out["weights"] = to_json(*req.weights);
  if (req.grpo) out["grpo"] = to_json(*req.grpo);
  return out;
}

json to_json(const ScoreResponse& resp) {
  json rollouts = json::array();
  for (const auto& r : resp.per_rollout) {
    rollouts.push_back(json{{"format_valid", r.format_valid},
                            {"r_srar", r.r_srar},
                            {"r_rpcr", r.r_rpcr},
                            {"r_evol", r.r_evol},
                            {"total", r.total},
                            {"advantage", r.advantage},
                            {"eligible", r.eligible}});
  }
  return json{{"request_id", resp.request_id},
              {"per_rollout", std::move(rollouts)},
              {"group", {{"mean", resp.mean}, {"std", resp.std}, {"eligible_count", resp.eligible_count}}}};
}

json error_json(ErrorCode code, std::string_view message) {
  return json{{"error", {{"code", to_string(code)}, {"message", message}}}};
}

ScoringEngine::ScoringEngine(EngineConfig config, std::shared_ptr<const Embedder> embedder)
    : config_(config),
      embedder_(embedder ? std::move(embedder)
                         : std::make_shared<const HashedTokenEmbedder>(config.embedder)) {}

ScoreResponse ScoringEngine::score(const ScoreRequest& request) const {
  if (request.rollouts.empty()) invalid("'rollouts' must not be empty");
  const RewardWeights weights = request.weights.value_or(config_.weights);
  const GrpoConfig grpo = request.grpo.value_or(config_.grpo);

  std::vector<EvolutionSample> samples;
  std::vector<bool> valid;
  samples.reserve(request.rollouts.size());
  for (const auto& raw : request.rollouts) {
    const RolloutRecord record = parse_rollout(raw, config_.format);
    std::optional<ParsedAnswer> parsed;
    if (record.answer_text) parsed = parse_answer(request.task, *record.answer_text);
    EvolutionSample sample;
    sample.r_srar = record.format_valid ? 1.0 : 0.0;
    sample.r_rpcr = route_reward(request.task, parsed, request.ground_truth, config_.task);
    sample.think_text = record.think_text.value_or("");
    samples.push_back(std::move(sample));
    valid.push_back(record.format_valid);
  }

  const EvolutionResult evolution = evolution_rewards(samples, *embedder_, config_.evolution);

  ScoreResponse response;
  response.request_id = request.request_id;
  std::vector<double> totals;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RewardBreakdown b =
        aggregate_reward({samples[i].r_srar, samples[i].r_rpcr, evolution.rewards[i]}, weights);
    RolloutScore score;
    score.format_valid = valid[i];
    score.r_srar = b.r_srar;
    score.r_rpcr = b.r_rpcr;
    score.r_evol = b.r_evol;
    score.total = b.total;
    totals.push_back(b.total);
    response.per_rollout.push_back(score);
  }
  for (std::size_t idx : evolution.similarity.eligible_indices) response.per_rollout[idx].eligible = true;
  response.eligible_count = evolution.similarity.eligible_count();

  const GroupScore group = score_group(totals, grpo);
  for (std::size_t i = 0; i < totals.size(); ++i) response.per_rollout[i].advantage = group.advantages[i];
  response.mean = group.mean;
  response.std = group.std;
  return response;
}

HandledRequest ScoringEngine::handle(std::string_view body) const {
  HandledRequest out;
  try {
    const json parsed = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) invalid("request body is not valid JSON");
    out.request = score_request_from_json(parsed);
    out.response = score(*out.request);
    out.body = to_json(*out.response).dump(-1, ' ', false, json::error_handler_t::replace);
  } catch (const RequestError& e) {
    out.http_status = e.code() == ErrorCode::kTaskMismatch ? 422 : 400;
    out.body = error_json(e.code(), e.what()).dump(-1, ' ', false, json::error_handler_t::replace);
    out.response.reset();
  } catch (const std::exception& e) {
    out.http_status = 500;
    out.body = error_json(ErrorCode::kInternal, e.what()).dump(-1, ' ', false, json::error_handler_t::replace);
    out.response.reset();
  }
  return out;
}

}  // namespace georeward
