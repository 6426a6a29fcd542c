#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace georeward {

/// Axis-aligned box in pixel coordinates. Valid boxes satisfy x1 <= x2,
/// y1 <= y2 with all coordinates finite; use BoundingBox::from_corners to
/// build one from arbitrary corner order.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  static BoundingBox from_corners(double ax, double ay, double bx, double by);

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Detection {
  BoundingBox box;
  std::string label;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionSet = std::vector<Detection>;

enum class TaskType { kRec, kOvd, kVqa };

std::string_view to_string(TaskType task);
/// Accepts "REC", "OVD", "VQA" in any letter case.
std::optional<TaskType> parse_task_type(std::string_view text);

/// Task payload: a REC box, an OVD detection set, or a VQA answer. Used both
/// for parsed predictions and for ground truth.
using TaskPayload = std::variant<BoundingBox, DetectionSet, std::string>;
using ParsedAnswer = TaskPayload;
using GroundTruth = TaskPayload;

TaskType task_of(const TaskPayload& payload);

/// Raised when a ground-truth payload does not belong to the requested task.
/// This is a caller bug, never a rollout fault.
class TaskMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ASCII text helpers shared by the label comparison, answer normalization
// and the reference embedder.
std::string ascii_lower(std::string_view text);
std::string_view trim(std::string_view text);
bool is_blank(std::string_view text);

/// Labels compare equal after trimming and ASCII case-folding.
bool labels_equal(std::string_view a, std::string_view b);

}  // namespace georeward
