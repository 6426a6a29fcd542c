#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "georeward/types.hpp"

namespace georeward {

/// Shared JSON encodings of task payloads:
///   REC  [x1, y1, x2, y2]
///   OVD  [{"bbox": [x1, y1, x2, y2], "label": "ship"}, ...]
///   VQA  "answer text"
std::optional<BoundingBox> box_from_json(const nlohmann::json& value);
std::optional<DetectionSet> detections_from_json(const nlohmann::json& value);
std::optional<TaskPayload> payload_from_json(TaskType task, const nlohmann::json& value);

nlohmann::json to_json(const BoundingBox& box);
nlohmann::json to_json(const DetectionSet& detections);
nlohmann::json to_json(const TaskPayload& payload);

}  // namespace georeward
