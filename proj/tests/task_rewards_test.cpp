#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "georeward/assignment.hpp"
#include "georeward/task_rewards.hpp"
#include "oracles.hpp"

using namespace georeward;

namespace {

Detection det(double x1, double y1, double x2, double y2, const char* label) {
  return {BoundingBox{x1, y1, x2, y2}, label};
}

const std::vector<std::string> kLabels{"ship", "plane", "tank"};

}  // namespace

TEST(Iou, HandComputed) {
  const BoundingBox a{0, 0, 2, 2};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_NEAR(iou(a, {1, 1, 3, 3}), 1.0 / 7.0, 1e-12);
  EXPECT_EQ(iou(a, {5, 5, 6, 6}), 0.0);
  EXPECT_EQ(iou({1, 1, 1, 1}, {1, 1, 1, 1}), 0.0);
  EXPECT_EQ(iou(a, {2, 0, 4, 2}), 0.0);  // touching edges
}

TEST(Iou, SymmetricAndBounded) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto a = oracle::random_detection(rng, kLabels).box;
    const auto b = oracle::random_detection(rng, kLabels).box;
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_NEAR(ab, oracle::box_iou(a, b), 1e-12);
  }
}

TEST(RecReward, Branches) {
  EXPECT_DOUBLE_EQ(rec_reward_from_iou(0.6), 0.6);
  EXPECT_DOUBLE_EQ(rec_reward_from_iou(0.5), 0.5);
  EXPECT_DOUBLE_EQ(rec_reward_from_iou(0.4), 0.8 * 0.4);
  EXPECT_DOUBLE_EQ(rec_reward_from_iou(0.3), 0.8 * 0.3);
  EXPECT_EQ(rec_reward_from_iou(0.29), 0.0);
  const BoundingBox gt{0, 0, 10, 10};
  EXPECT_NEAR(rec_reward({0, 0, 10, 6}, gt), 0.6, 1e-12);
  EXPECT_NEAR(rec_reward({0, 0, 10, 4}, gt), 0.32, 1e-12);
  EXPECT_EQ(rec_reward({0, 0, 10, 2.9}, gt), 0.0);
}

TEST(RecReward, MonotoneInOverlap) {
  double previous = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double r = rec_reward_from_iou(k / 10000.0);
    EXPECT_GE(r, previous);
    previous = r;
  }
}

TEST(MatchScore, Branches) {
  const auto g = det(0, 0, 10, 10, "ship");
  EXPECT_EQ(match_score(det(0, 0, 10, 7, "ship"), g), 1.0);
  EXPECT_EQ(match_score(det(0, 0, 10, 4, "Ship "), g), 0.5);
  EXPECT_EQ(match_score(det(0, 0, 10, 9, "plane"), g), 0.0);
  EXPECT_EQ(match_score(det(0, 0, 10, 2, "ship"), g), 0.0);
}

TEST(MatchSets, SingleAssignment) {
  const std::vector<Detection> preds{det(0, 0, 10, 10, "ship")};
  const std::vector<Detection> gts{det(0, 0, 10, 10, "ship"), det(50, 50, 60, 60, "ship")};
  const auto m = match_sets(preds, gts);
  EXPECT_DOUBLE_EQ(m.tp_total, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
}

TEST(MatchSets, DuplicatePredictionsByPolicy) {
  const std::vector<Detection> preds{det(0, 0, 10, 10, "ship"), det(0, 0, 10, 10, "ship")};
  const std::vector<Detection> gts{det(0, 0, 10, 10, "ship")};
  const auto one = match_sets(preds, gts, MatchingPolicy::kOneToOne);
  EXPECT_DOUBLE_EQ(one.tp_total, 1.0);
  EXPECT_DOUBLE_EQ(one.precision, 0.5);
  EXPECT_DOUBLE_EQ(one.tp_total, oracle::exhaustive_max_tp(preds, gts));
  const auto literal = match_sets(preds, gts, MatchingPolicy::kLiteralPerPred);
  EXPECT_DOUBLE_EQ(literal.tp_total, 2.0);
  EXPECT_DOUBLE_EQ(literal.precision, 1.0);
  EXPECT_DOUBLE_EQ(literal.tp_total, oracle::literal_tp(preds, gts));
}

TEST(MatchSets, EmptyPredictions) {
  const std::vector<Detection> gts{det(0, 0, 1, 1, "a"), det(0, 0, 2, 2, "a"), det(0, 0, 3, 3, "a")};
  const auto m = match_sets({}, gts);
  EXPECT_EQ(m.tp_total, 0.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

// Greedy by descending (score, IoU) takes p0-g0 first and strands p1.
TEST(MatchSets, GreedyIsNotOptimal) {
  const std::vector<Detection> gts{det(0, 0, 10, 10, "ship"), det(3, 0, 13, 10, "ship")};
  const std::vector<Detection> preds{det(1, 0, 10, 10, "ship"), det(-3, 0, 7, 10, "ship")};
  EXPECT_DOUBLE_EQ(oracle::exhaustive_max_tp(preds, gts), 2.0);
  EXPECT_DOUBLE_EQ(match_sets(preds, gts, MatchingPolicy::kGreedy).tp_total, 1.0);
  const auto optimal = match_sets(preds, gts, MatchingPolicy::kOneToOne);
  EXPECT_DOUBLE_EQ(optimal.tp_total, 2.0);
  ASSERT_EQ(optimal.assignments.size(), 2u);
  EXPECT_EQ(optimal.assignments[0].gt, 1u);
  EXPECT_EQ(optimal.assignments[1].gt, 0u);
}

TEST(MatchSets, RandomAgainstExhaustiveOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_real_distribution<double> coin(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Detection> gts, preds;
    const int ng = count(rng), np = count(rng);
    for (int g = 0; g < ng; ++g) gts.push_back(oracle::random_detection(rng, kLabels));
    for (int p = 0; p < np; ++p) {
      if (!gts.empty() && coin(rng) < 0.7) {
        preds.push_back(oracle::jitter(rng, gts[rng() % gts.size()], 6.0));
      } else {
        preds.push_back(oracle::random_detection(rng, kLabels));
      }
    }
    const double best = oracle::exhaustive_max_tp(preds, gts);
    const auto one = match_sets(preds, gts, MatchingPolicy::kOneToOne);
    ASSERT_NEAR(one.tp_total, best, 1e-12) << "trial " << trial;

    std::set<std::size_t> used_p, used_g;
    double sum = 0.0;
    for (const auto& a : one.assignments) {
      EXPECT_TRUE(used_p.insert(a.pred).second);
      EXPECT_TRUE(used_g.insert(a.gt).second);
      EXPECT_EQ(a.score, oracle::pair_score(preds[a.pred], gts[a.gt]));
      sum += a.score;
    }
    EXPECT_NEAR(sum, one.tp_total, 1e-12);
    const double pr = one.precision + one.recall;
    EXPECT_NEAR(one.f1, pr > 0 ? 2 * one.precision * one.recall / pr : 0.0, 1e-12);

    EXPECT_NEAR(match_sets(preds, gts, MatchingPolicy::kLiteralPerPred).tp_total,
                oracle::literal_tp(preds, gts), 1e-12);
    EXPECT_LE(match_sets(preds, gts, MatchingPolicy::kGreedy).tp_total, best + 1e-12);
  }
}

TEST(OvdReward, Cases) {
  const std::vector<Detection> gt{det(0, 0, 10, 10, "ship")};
  EXPECT_DOUBLE_EQ(ovd_reward(gt, gt), 1.0);
  const std::vector<Detection> soft{det(0, 0, 10, 4, "ship")};
  EXPECT_DOUBLE_EQ(ovd_reward(soft, gt), 0.5);
  EXPECT_DOUBLE_EQ(ovd_reward({}, {}), 1.0);
  EXPECT_DOUBLE_EQ(ovd_reward({}, gt), 0.0);
  EXPECT_DOUBLE_EQ(ovd_reward(gt, {}), 0.0);
}

TEST(OvdReward, UnmatchedPredictionNeverHelps) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Detection> gts, preds;
    for (int g = 0; g < 1 + trial % 4; ++g) gts.push_back(oracle::random_detection(rng, kLabels));
    for (const auto& g : gts) preds.push_back(oracle::jitter(rng, g, 4.0));
    const double before = ovd_reward(preds, gts);
    preds.push_back(det(500, 500, 510, 510, "ship"));  // far from every gt
    EXPECT_LE(ovd_reward(preds, gts), before + 1e-12);
  }
}

TEST(Vqa, NormalizeAndReward) {
  EXPECT_EQ(normalize_answer("  Yes. "), "yes");
  EXPECT_EQ(normalize_answer("Rural Area"), "rural area");
  EXPECT_EQ(normalize_answer("12"), "12");
  EXPECT_EQ(normalize_answer("a \t b\n c?!"), "a b c");
  EXPECT_EQ(vqa_reward("Yes", "yes"), 1.0);
  EXPECT_EQ(vqa_reward("yes", "no"), 0.0);
  EXPECT_EQ(vqa_reward("", "yes"), 0.0);
}

TEST(Vqa, CaseAndWhitespaceInvariance) {
  const std::vector<std::string> answers{"yes", "no", "rural area", "12", "Dense Residential"};
  for (const auto& a : answers) {
    for (const auto& b : answers) {
      std::string upper_a = a;
      for (auto& c : upper_a) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      const double base = vqa_reward(a, b);
      EXPECT_EQ(vqa_reward(upper_a, b), base);
      EXPECT_EQ(vqa_reward("  " + a + "\n", " " + b), base);
    }
  }
}

TEST(RouteReward, Delegation) {
  const GroundTruth rec_gt = BoundingBox{0, 0, 10, 10};
  EXPECT_NEAR(route_reward(TaskType::kRec, ParsedAnswer{BoundingBox{0, 0, 10, 6}}, rec_gt), 0.6, 1e-12);
  EXPECT_EQ(route_reward(TaskType::kVqa, std::nullopt, GroundTruth{std::string("yes")}), 0.0);
  const DetectionSet dets{det(0, 0, 10, 10, "ship")};
  EXPECT_EQ(route_reward(TaskType::kOvd, ParsedAnswer{dets}, GroundTruth{dets}), 1.0);
  // prediction of another task's type scores 0
  EXPECT_EQ(route_reward(TaskType::kRec, ParsedAnswer{std::string("x")}, rec_gt), 0.0);
}

TEST(RouteReward, MismatchedGroundTruthThrows) {
  EXPECT_THROW(route_reward(TaskType::kRec, std::nullopt, GroundTruth{std::string("yes")}), TaskMismatchError);
  EXPECT_THROW(route_reward(TaskType::kVqa, std::nullopt, GroundTruth{BoundingBox{}}), TaskMismatchError);
}

TEST(RouteReward, LiteralPolicyThroughConfig) {
  const DetectionSet gt{det(0, 0, 10, 10, "ship")};
  const DetectionSet preds{gt[0], gt[0]};
  TaskRewardConfig cfg;
  EXPECT_NEAR(route_reward(TaskType::kOvd, ParsedAnswer{preds}, GroundTruth{gt}, cfg), 2.0 / 3.0, 1e-12);
  cfg.matching = MatchingPolicy::kLiteralPerPred;
  EXPECT_DOUBLE_EQ(route_reward(TaskType::kOvd, ParsedAnswer{preds}, GroundTruth{gt}, cfg), 1.0);
  const auto m = match_sets(preds, gt, MatchingPolicy::kLiteralPerPred);
  EXPECT_DOUBLE_EQ(m.tp_total, 2.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
}

TEST(MatchingPolicyNames, RoundTrip) {
  for (auto p : {MatchingPolicy::kOneToOne, MatchingPolicy::kLiteralPerPred, MatchingPolicy::kGreedy}) {
    EXPECT_EQ(parse_matching_policy(to_string(p)), p);
  }
  EXPECT_FALSE(parse_matching_policy("best"));
}

TEST(Assignment, SmallMatrices) {
  // rows x cols = 2 x 3
  const std::vector<double> w{1, 5, 2,
                              4, 6, 0};
  const auto a = max_weight_assignment(w, 2, 3);
  EXPECT_EQ(a[0], 1u);
  EXPECT_EQ(a[1], 0u);
  EXPECT_TRUE(max_weight_assignment({}, 0, 0).empty());
  const auto none = max_weight_assignment({}, 2, 0);
  EXPECT_FALSE(none[0] || none[1]);
}
