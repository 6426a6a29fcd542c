#include "georeward/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace georeward {

BoundingBox BoundingBox::from_corners(double ax, double ay, double bx, double by) {
  return BoundingBox{std::min(ax, bx), std::min(ay, by), std::max(ax, bx), std::max(ay, by)};
}

bool BoundingBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
         x1 <= x2 && y1 <= y2;
}

std::string_view to_string(TaskType task) {
  switch (task) {
    case TaskType::kRec:
      return "REC";
    case TaskType::kOvd:
      return "OVD";
    case TaskType::kVqa:
      return "VQA";
  }
  return "UNKNOWN";
}

std::optional<TaskType> parse_task_type(std::string_view text) {
  const std::string lowered = ascii_lower(trim(text));
  if (lowered == "rec") return TaskType::kRec;
  if (lowered == "ovd") return TaskType::kOvd;
  if (lowered == "vqa") return TaskType::kVqa;
  return std::nullopt;
}

TaskType task_of(const TaskPayload& payload) {
  switch (payload.index()) {
    case 0:
      return TaskType::kRec;
    case 1:
      return TaskType::kOvd;
    default:
      return TaskType::kVqa;
  }
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

namespace {
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::string_view trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return text.substr(begin, end - begin);
}

bool is_blank(std::string_view text) { return trim(text).empty(); }

bool labels_equal(std::string_view a, std::string_view b) {
  return ascii_lower(trim(a)) == ascii_lower(trim(b));
}

}  // namespace georeward
