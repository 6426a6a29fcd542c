#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "georeward/types.hpp"

namespace georeward {

struct EvalRecord {
  std::string id;
  TaskType task = TaskType::kRec;
  std::optional<ParsedAnswer> prediction;  // nullopt: unparseable or missing output
  GroundTruth ground_truth;
};

/// Percentage of REC records whose IoU strictly exceeds `threshold`.
/// Missing predictions count as misses; an empty list yields 0.
double acc_at_t(std::span<const EvalRecord> records, double threshold);

/// 0.50, 0.55, ..., 0.95
std::vector<double> coco_iou_thresholds();

struct MapResult {
  std::vector<double> thresholds;
  std::vector<double> per_threshold;  // mean AP over categories at each threshold
  std::vector<std::string> categories;
  double mean = 0.0;                  // average of per_threshold
};

/// COCO-style mAP over OVD records with 101-point interpolated precision.
/// Detections carry no confidence, so a detection's position in its own
/// prediction list is its rank; detections sharing a rank across images are
/// scored as one tie block. Categories are the case-folded ground-truth
/// labels; labels that never occur in ground truth are ignored.
MapResult coco_map(std::span<const EvalRecord> records, std::span<const double> thresholds);

/// Percentage of VQA records whose answer matches after normalization.
double pass_at_1(std::span<const EvalRecord> records);

struct MetricReport {
  TaskType task = TaskType::kRec;
  std::size_t n_items = 0;
  std::vector<std::pair<double, double>> acc_at;                 // threshold -> percent
  std::vector<std::pair<std::string, double>> map_values;        // "mAP@0.5" -> value
  std::optional<double> pass_at_1;                               // percent
};

/// Metrics for one task. Throws TaskMismatchError if any record belongs to
/// another task.
MetricReport evaluate(std::span<const EvalRecord> records, TaskType task,
                      std::span<const double> acc_thresholds);

/// One report per task present, in REC, OVD, VQA order.
std::vector<MetricReport> evaluate_all(std::span<const EvalRecord> records,
                                       std::span<const double> acc_thresholds);

nlohmann::json to_json(const MetricReport& report);
std::string format_table(std::span<const MetricReport> reports);

// Line-delimited record files:
//   {"id": ..., "task": "REC", "pred": [x1,y1,x2,y2] | null, "gt": [x1,y1,x2,y2]}
//   {"id": ..., "task": "OVD", "pred": [{"bbox": [...], "label": ...}] | null, "gt": [...]}
//   {"id": ..., "task": "VQA", "pred": "text" | null, "gt": "text"}

struct LoadDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<EvalRecord> records;
  std::vector<LoadDiagnostic> skipped;
};

class EvalFileError : public std::runtime_error {
 public:
  EvalFileError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Strict mode throws EvalFileError at the first malformed line or duplicate
/// id; otherwise such lines are skipped and reported. Blank lines are ignored.
LoadResult read_eval_records(std::istream& in, bool strict);
LoadResult load_eval_file(const std::filesystem::path& path, bool strict);

EvalRecord eval_record_from_json(const nlohmann::json& value);
nlohmann::json to_json(const EvalRecord& record);

}  // namespace georeward
