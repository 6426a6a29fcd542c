#include "georeward/eval.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "georeward/json_io.hpp"
#include "georeward/task_rewards.hpp"

namespace georeward {
namespace {

void require_task(std::span<const EvalRecord> records, TaskType task) {
  for (const auto& r : records) {
    if (r.task != task || task_of(r.ground_truth) != task) {
      throw TaskMismatchError("record '" + r.id + "' is " + std::string(to_string(r.task)) +
                              ", expected " + std::string(to_string(task)));
    }
  }
}

struct RankedHit {
  std::size_t rank = 0;
  bool true_positive = false;
};

// Greedy COCO matching inside one image: detections in rank order take the
// unmatched ground truth with the highest IoU at or above the threshold.
void match_image(const std::vector<std::pair<std::size_t, BoundingBox>>& dets,
                 const std::vector<BoundingBox>& gts, double threshold,
                 std::vector<RankedHit>& out) {
  std::vector<bool> taken(gts.size(), false);
  for (const auto& [rank, box] : dets) {
    double best = -1.0;
    std::optional<std::size_t> best_gt;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double ov = iou(box, gts[g]);
      if (ov >= threshold && ov > best) {
        best = ov;
        best_gt = g;
      }
    }
    if (best_gt) taken[*best_gt] = true;
    out.push_back({rank, best_gt.has_value()});
  }
}

double interpolated_ap(std::vector<RankedHit> hits, std::size_t num_gt) {
  if (num_gt == 0) return 0.0;
  std::stable_sort(hits.begin(), hits.end(),
                   [](const RankedHit& a, const RankedHit& b) { return a.rank < b.rank; });
  std::vector<double> recall, precision;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    (hits[i].true_positive ? tp : fp) += 1;
    const bool block_end = i + 1 == hits.size() || hits[i + 1].rank != hits[i].rank;
    if (!block_end) continue;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = static_cast<double>(k) / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::string threshold_key(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

}  // namespace

double acc_at_t(std::span<const EvalRecord> records, double threshold) {
  require_task(records, TaskType::kRec);
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (!r.prediction || task_of(*r.prediction) != TaskType::kRec) continue;
    if (iou(std::get<BoundingBox>(*r.prediction), std::get<BoundingBox>(r.ground_truth)) > threshold) {
      ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back(0.5 + 0.05 * i);
  return out;
}

MapResult coco_map(std::span<const EvalRecord> records, std::span<const double> thresholds) {
  require_task(records, TaskType::kOvd);
  MapResult result;
  result.thresholds.assign(thresholds.begin(), thresholds.end());

  std::set<std::string> categories;
  for (const auto& r : records) {
    for (const auto& g : std::get<DetectionSet>(r.ground_truth)) {
      categories.insert(ascii_lower(trim(g.label)));
    }
  }
  result.categories.assign(categories.begin(), categories.end());

  for (double threshold : thresholds) {
    double ap_sum = 0.0;
    for (const auto& category : result.categories) {
      std::vector<RankedHit> hits;
      std::size_t num_gt = 0;
      for (const auto& r : records) {
        std::vector<BoundingBox> gts;
        for (const auto& g : std::get<DetectionSet>(r.ground_truth)) {
          if (ascii_lower(trim(g.label)) == category) gts.push_back(g.box);
        }
        num_gt += gts.size();
        std::vector<std::pair<std::size_t, BoundingBox>> dets;
        if (r.prediction && task_of(*r.prediction) == TaskType::kOvd) {
          const auto& pred = std::get<DetectionSet>(*r.prediction);
          for (std::size_t k = 0; k < pred.size(); ++k) {
            if (ascii_lower(trim(pred[k].label)) == category) dets.emplace_back(k, pred[k].box);
          }
        }
        match_image(dets, gts, threshold, hits);
      }
      ap_sum += interpolated_ap(std::move(hits), num_gt);
    }
    result.per_threshold.push_back(
        result.categories.empty() ? 0.0 : ap_sum / static_cast<double>(result.categories.size()));
  }
  if (!result.per_threshold.empty()) {
    double sum = 0.0;
    for (double v : result.per_threshold) sum += v;
    result.mean = sum / static_cast<double>(result.per_threshold.size());
  }
  return result;
}

double pass_at_1(std::span<const EvalRecord> records) {
  require_task(records, TaskType::kVqa);
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (!r.prediction || task_of(*r.prediction) != TaskType::kVqa) continue;
    if (vqa_reward(std::get<std::string>(*r.prediction), std::get<std::string>(r.ground_truth)) == 1.0) {
      ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

MetricReport evaluate(std::span<const EvalRecord> records, TaskType task,
                      std::span<const double> acc_thresholds) {
  require_task(records, task);
  MetricReport report;
  report.task = task;
  report.n_items = records.size();
  switch (task) {
    case TaskType::kRec:
      for (double t : acc_thresholds) report.acc_at.emplace_back(t, acc_at_t(records, t));
      break;
    case TaskType::kOvd: {
      const auto thresholds = coco_iou_thresholds();
      const auto full = coco_map(records, thresholds);
      report.map_values.emplace_back("mAP@0.5", full.per_threshold.front());
      report.map_values.emplace_back("mAP@[0.5:0.95]", full.mean);
      break;
    }
    case TaskType::kVqa:
      report.pass_at_1 = pass_at_1(records);
      break;
  }
  return report;
}

std::vector<MetricReport> evaluate_all(std::span<const EvalRecord> records,
                                       std::span<const double> acc_thresholds) {
  std::vector<MetricReport> reports;
  for (TaskType task : {TaskType::kRec, TaskType::kOvd, TaskType::kVqa}) {
    std::vector<EvalRecord> subset;
    std::copy_if(records.begin(), records.end(), std::back_inserter(subset),
                 [task](const EvalRecord& r) { return r.task == task; });
    if (!subset.empty()) reports.push_back(evaluate(subset, task, acc_thresholds));
  }
  return reports;
}

nlohmann::json to_json(const MetricReport& report) {
  nlohmann::json out{{"task", to_string(report.task)}, {"n_items", report.n_items}};
  if (!report.acc_at.empty()) {
    nlohmann::json acc = nlohmann::json::object();
    for (const auto& [t, v] : report.acc_at) acc["Acc@" + threshold_key(t)] = v;
    out["acc_at"] = acc;
  }
  if (!report.map_values.empty()) {
    nlohmann::json maps = nlohmann::json::object();
    for (const auto& [k, v] : report.map_values) maps[k] = v;
    out["map"] = maps;
  }
  if (report.pass_at_1) out["pass_at_1"] = *report.pass_at_1;
  return out;
}

std::string format_table(std::span<const MetricReport> reports) {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"task", "metric", "value", "n"});
  auto fmt = [](double v, int precision) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
  };
  for (const auto& r : reports) {
    const std::string task(to_string(r.task));
    const std::string n = std::to_string(r.n_items);
    for (const auto& [t, v] : r.acc_at) rows.push_back({task, "Acc@" + threshold_key(t), fmt(v, 2), n});
    for (const auto& [k, v] : r.map_values) rows.push_back({task, k, fmt(v, 4), n});
    if (r.pass_at_1) rows.push_back({task, "Pass@1", fmt(*r.pass_at_1, 2), n});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    os << std::left << std::setw(static_cast<int>(width[0])) << row[0] << "  "
       << std::setw(static_cast<int>(width[1])) << row[1] << "  " << std::right
       << std::setw(static_cast<int>(width[2])) << row[2] << "  "
       << std::setw(static_cast<int>(width[3])) << row[3] << '\n';
  }
  return os.str();
}

EvalFileError::EvalFileError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

EvalRecord eval_record_from_json(const nlohmann::json& value) {
  if (!value.is_object()) throw std::invalid_argument("record is not a JSON object");
  EvalRecord record;

  const auto id = value.find("id");
  if (id == value.end()) throw std::invalid_argument("missing 'id'");
  if (id->is_string()) {
    record.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    record.id = id->dump();
  } else {
    throw std::invalid_argument("'id' must be a string or integer");
  }

  const auto task = value.find("task");
  if (task == value.end() || !task->is_string()) throw std::invalid_argument("missing 'task'");
  const auto parsed_task = parse_task_type(task->get<std::string>());
  if (!parsed_task) throw std::invalid_argument("unknown task '" + task->get<std::string>() + "'");
  record.task = *parsed_task;

  const auto gt = value.find("gt");
  if (gt == value.end()) throw std::invalid_argument("missing 'gt'");
  auto gt_payload = payload_from_json(record.task, *gt);
  if (!gt_payload) throw std::invalid_argument("'gt' does not match the " + std::string(to_string(record.task)) + " schema");
  record.ground_truth = std::move(*gt_payload);

  const auto pred = value.find("pred");
  if (pred == value.end()) throw std::invalid_argument("missing 'pred'");
  if (!pred->is_null()) {
    auto pred_payload = payload_from_json(record.task, *pred);
    if (!pred_payload) {
      throw std::invalid_argument("'pred' does not match the " + std::string(to_string(record.task)) + " schema");
    }
    record.prediction = std::move(*pred_payload);
  }
  return record;
}

nlohmann::json to_json(const EvalRecord& record) {
  return nlohmann::json{{"id", record.id},
                        {"task", to_string(record.task)},
                        {"pred", record.prediction ? to_json(*record.prediction) : nlohmann::json()},
                        {"gt", to_json(record.ground_truth)}};
}

LoadResult read_eval_records(std::istream& in, bool strict) {
  LoadResult result;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      auto parsed = nlohmann::json::parse(line);
      auto record = eval_record_from_json(parsed);
      if (!ids.insert(record.id).second) {
        throw std::invalid_argument("duplicate id '" + record.id + "'");
      }
      result.records.push_back(std::move(record));
    } catch (const std::exception& e) {
      if (strict) throw EvalFileError(line_no, e.what());
      result.skipped.push_back({line_no, e.what()});
    }
  }
  return result;
}

LoadResult load_eval_file(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_eval_records(in, strict);
}

}  // namespace georeward
