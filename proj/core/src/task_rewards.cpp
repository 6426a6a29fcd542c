#include "georeward/task_rewards.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

#include "georeward/assignment.hpp"

namespace georeward {

std::string_view to_string(MatchingPolicy policy) {
  switch (policy) {
    case MatchingPolicy::kOneToOne:
      return "one_to_one";
    case MatchingPolicy::kLiteralPerPred:
      return "literal";
    case MatchingPolicy::kGreedy:
      return "greedy";
  }
  return "unknown";
}

std::optional<MatchingPolicy> parse_matching_policy(std::string_view text) {
  const std::string lowered = ascii_lower(trim(text));
  if (lowered == "one_to_one") return MatchingPolicy::kOneToOne;
  if (lowered == "literal" || lowered == "literal_per_pred") return MatchingPolicy::kLiteralPerPred;
  if (lowered == "greedy") return MatchingPolicy::kGreedy;
  return std::nullopt;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double rec_reward_from_iou(double overlap, const RecRewardParams& params) {
  if (overlap >= params.full_iou) return overlap;
  if (overlap >= params.partial_iou) return params.partial_factor * overlap;
  return 0.0;
}

double rec_reward(const BoundingBox& pred, const BoundingBox& gt, const RecRewardParams& params) {
  return rec_reward_from_iou(iou(pred, gt), params);
}

double match_score_from_iou(bool same_label, double overlap, const MatchParams& params) {
  if (!same_label) return 0.0;
  if (overlap >= params.full_iou) return 1.0;
  if (overlap >= params.soft_iou) return params.soft_score;
  return 0.0;
}

double match_score(const Detection& pred, const Detection& gt, const MatchParams& params) {
  return match_score_from_iou(labels_equal(pred.label, gt.label), iou(pred.box, gt.box), params);
}

namespace {

struct PairTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> score;
  std::vector<double> overlap;

  double m(std::size_t p, std::size_t g) const { return score[p * cols + g]; }
  double o(std::size_t p, std::size_t g) const { return overlap[p * cols + g]; }
};

PairTable build_pairs(std::span<const Detection> preds, std::span<const Detection> gts,
                      const MatchParams& params) {
  PairTable t{preds.size(), gts.size(), {}, {}};
  t.score.resize(t.rows * t.cols);
  t.overlap.resize(t.rows * t.cols);
  for (std::size_t p = 0; p < t.rows; ++p) {
    for (std::size_t g = 0; g < t.cols; ++g) {
      const double ov = iou(preds[p].box, gts[g].box);
      t.overlap[p * t.cols + g] = ov;
      t.score[p * t.cols + g] =
          match_score_from_iou(labels_equal(preds[p].label, gts[g].label), ov, params);
    }
  }
  return t;
}

std::vector<MatchAssignment> assign_greedy(const PairTable& t) {
  std::vector<MatchAssignment> candidates;
  for (std::size_t p = 0; p < t.rows; ++p) {
    for (std::size_t g = 0; g < t.cols; ++g) {
      if (t.m(p, g) > 0.0) candidates.push_back({p, g, t.m(p, g), t.o(p, g)});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return std::tie(b.score, b.iou, a.pred, a.gt) < std::tie(a.score, a.iou, b.pred, b.gt);
  });
  std::vector<bool> pred_used(t.rows, false), gt_used(t.cols, false);
  std::vector<MatchAssignment> out;
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = true;
    out.push_back(c);
  }
  return out;
}

// Lexicographic objective: maximize total score, then total IoU. The IoU
// term is scaled so it can never outweigh one score step.
std::vector<MatchAssignment> assign_optimal(const PairTable& t, const MatchParams& params) {
  if (t.rows == 0 || t.cols == 0) return {};
  const double step = std::min({params.soft_score, 1.0 - params.soft_score, 1.0});
  const double tie_weight = (step > 0.0 ? step : 1.0) / (2.0 * static_cast<double>(std::max(t.rows, t.cols) + 1));
  std::vector<double> weights(t.rows * t.cols);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = t.score[i] > 0.0 ? t.score[i] + tie_weight * t.overlap[i] : 0.0;
  }
  const auto rows = max_weight_assignment(weights, t.rows, t.cols);
  std::vector<MatchAssignment> out;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    if (!rows[p]) continue;
    const std::size_t g = *rows[p];
    if (t.m(p, g) > 0.0) out.push_back({p, g, t.m(p, g), t.o(p, g)});
  }
  return out;
}

std::vector<MatchAssignment> assign_literal(const PairTable& t) {
  std::vector<MatchAssignment> out;
  for (std::size_t p = 0; p < t.rows; ++p) {
    std::optional<MatchAssignment> best;
    for (std::size_t g = 0; g < t.cols; ++g) {
      if (t.m(p, g) <= 0.0) continue;
      if (!best || std::tie(t.score[p * t.cols + g], t.overlap[p * t.cols + g]) >
                       std::tie(best->score, best->iou)) {
        best = MatchAssignment{p, g, t.m(p, g), t.o(p, g)};
      }
    }
    if (best) out.push_back(*best);
  }
  return out;
}

}  // namespace

MatchResult match_sets(std::span<const Detection> preds, std::span<const Detection> gts,
                       MatchingPolicy policy, const MatchParams& params) {
  const PairTable table = build_pairs(preds, gts, params);
  MatchResult result;
  switch (policy) {
    case MatchingPolicy::kOneToOne:
      result.assignments = assign_optimal(table, params);
      break;
    case MatchingPolicy::kLiteralPerPred:
      result.assignments = assign_literal(table);
      break;
    case MatchingPolicy::kGreedy:
      result.assignments = assign_greedy(table);
      break;
  }
  std::sort(result.assignments.begin(), result.assignments.end(),
            [](const auto& a, const auto& b) { return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt); });
  for (const auto& a : result.assignments) result.tp_total += a.score;
  // Literal per-prediction credit can reuse a gt, so recall may exceed 1 there.
  if (!preds.empty()) result.precision = std::min(1.0, result.tp_total / static_cast<double>(preds.size()));
  if (!gts.empty()) result.recall = std::min(1.0, result.tp_total / static_cast<double>(gts.size()));
  const double sum = result.precision + result.recall;
  if (sum > 0.0) result.f1 = 2.0 * result.precision * result.recall / sum;
  return result;
}

double ovd_reward(std::span<const Detection> preds, std::span<const Detection> gts,
                  MatchingPolicy policy, const MatchParams& params) {
  if (preds.empty() && gts.empty()) return 1.0;
  return match_sets(preds, gts, policy, params).f1;
}

std::string normalize_answer(std::string_view answer) {
  std::string collapsed;
  collapsed.reserve(answer.size());
  bool in_space = false;
  for (const char raw : answer) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !collapsed.empty()) collapsed.push_back(' ');
    in_space = false;
    collapsed.push_back(static_cast<char>(std::tolower(c)));
  }
  while (!collapsed.empty() &&
         (collapsed.back() == '.' || collapsed.back() == '!' || collapsed.back() == '?' ||
          collapsed.back() == ' ')) {
    collapsed.pop_back();
  }
  return collapsed;
}

double vqa_reward(std::string_view pred, std::string_view gt) {
  return normalize_answer(pred) == normalize_answer(gt) ? 1.0 : 0.0;
}

double route_reward(TaskType task, const std::optional<ParsedAnswer>& parsed, const GroundTruth& gt,
                    const TaskRewardConfig& config) {
  if (task_of(gt) != task) {
    throw TaskMismatchError("ground truth payload is " + std::string(to_string(task_of(gt))) +
                            " but task is " + std::string(to_string(task)));
  }
  if (!parsed || task_of(*parsed) != task) return 0.0;
  switch (task) {
    case TaskType::kRec:
      return rec_reward(std::get<BoundingBox>(*parsed), std::get<BoundingBox>(gt), config.rec);
    case TaskType::kOvd:
      return ovd_reward(std::get<DetectionSet>(*parsed), std::get<DetectionSet>(gt),
                        config.matching, config.match);
    case TaskType::kVqa:
      return vqa_reward(std::get<std::string>(*parsed), std::get<std::string>(gt));
  }
  return 0.0;
}

}  // namespace georeward
