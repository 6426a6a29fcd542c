#include "georeward/json_io.hpp"

#include <array>
#include <cmath>

namespace georeward {

std::optional<BoundingBox> box_from_json(const nlohmann::json& value) {
  if (!value.is_array() || value.size() != 4) return std::nullopt;
  std::array<double, 4> coords{};
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!value[i].is_number()) return std::nullopt;
    coords[i] = value[i].get<double>();
    if (!std::isfinite(coords[i])) return std::nullopt;
  }
  return BoundingBox::from_corners(coords[0], coords[1], coords[2], coords[3]);
}

std::optional<DetectionSet> detections_from_json(const nlohmann::json& value) {
  if (!value.is_array()) return std::nullopt;
  DetectionSet out;
  out.reserve(value.size());
  for (const auto& item : value) {
    if (!item.is_object()) return std::nullopt;
    const auto bbox = item.find("bbox");
    const auto label = item.find("label");
    if (bbox == item.end() || label == item.end() || !label->is_string()) return std::nullopt;
    auto box = box_from_json(*bbox);
    if (!box) return std::nullopt;
    const auto& text = label->get_ref<const std::string&>();
    if (is_blank(text)) return std::nullopt;
    out.push_back(Detection{*box, text});
  }
  return out;
}

std::optional<TaskPayload> payload_from_json(TaskType task, const nlohmann::json& value) {
  switch (task) {
    case TaskType::kRec:
      if (auto box = box_from_json(value)) return TaskPayload{*box};
      break;
    case TaskType::kOvd:
      if (auto dets = detections_from_json(value)) return TaskPayload{std::move(*dets)};
      break;
    case TaskType::kVqa:
      if (value.is_string()) return TaskPayload{value.get<std::string>()};
      break;
  }
  return std::nullopt;
}

nlohmann::json to_json(const BoundingBox& box) {
  return nlohmann::json::array({box.x1, box.y1, box.x2, box.y2});
}

nlohmann::json to_json(const DetectionSet& detections) {
  auto out = nlohmann::json::array();
  for (const auto& det : detections) {
    out.push_back({{"bbox", to_json(det.box)}, {"label", det.label}});
  }
  return out;
}

nlohmann::json to_json(const TaskPayload& payload) {
  return std::visit(
      [](const auto& value) -> nlohmann::json {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return value;
        } else {
          return to_json(value);
        }
      },
      payload);
}

}  // namespace georeward
