#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "georeward/types.hpp"

namespace georeward {

/// Piecewise REC reward: IoU above `full_iou`, `partial_factor * IoU` in
/// [partial_iou, full_iou), zero below.
struct RecRewardParams {
  double full_iou = 0.5;
  double partial_iou = 0.3;
  double partial_factor = 0.8;
};

/// OVD pair score: 1.0 for same label with IoU >= full_iou, `soft_score` for
/// same label with IoU in [soft_iou, full_iou), 0 otherwise.
struct MatchParams {
  double full_iou = 0.5;
  double soft_iou = 0.3;
  double soft_score = 0.5;
};

enum class MatchingPolicy {
  kOneToOne,        // optimal one-to-one assignment maximizing total score
  kLiteralPerPred,  // sum over predictions of the best score, gts reusable
  kGreedy,          // descending (score, IoU) greedy one-to-one; not optimal
};

std::string_view to_string(MatchingPolicy policy);
std::optional<MatchingPolicy> parse_matching_policy(std::string_view text);

struct TaskRewardConfig {
  RecRewardParams rec;
  MatchParams match;
  MatchingPolicy matching = MatchingPolicy::kOneToOne;
};

double iou(const BoundingBox& a, const BoundingBox& b);

double rec_reward_from_iou(double overlap, const RecRewardParams& params = {});
double rec_reward(const BoundingBox& pred, const BoundingBox& gt, const RecRewardParams& params = {});

double match_score_from_iou(bool same_label, double overlap, const MatchParams& params = {});
double match_score(const Detection& pred, const Detection& gt, const MatchParams& params = {});

struct MatchAssignment {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double score = 0.0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchAssignment> assignments;
  double tp_total = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

MatchResult match_sets(std::span<const Detection> preds, std::span<const Detection> gts,
                       MatchingPolicy policy = MatchingPolicy::kOneToOne,
                       const MatchParams& params = {});

/// F1 of the matched sets; both sets empty counts as perfect agreement (1.0).
double ovd_reward(std::span<const Detection> preds, std::span<const Detection> gts,
                  MatchingPolicy policy = MatchingPolicy::kOneToOne, const MatchParams& params = {});

/// Case-fold, collapse whitespace runs, trim, strip trailing . ! ?
std::string normalize_answer(std::string_view answer);
double vqa_reward(std::string_view pred, std::string_view gt);

/// Task-routed correctness reward. A missing or wrongly-typed prediction
/// scores 0; a ground truth of the wrong type throws TaskMismatchError.
double route_reward(TaskType task, const std::optional<ParsedAnswer>& parsed,
                    const GroundTruth& gt, const TaskRewardConfig& config = {});

}  // namespace georeward
