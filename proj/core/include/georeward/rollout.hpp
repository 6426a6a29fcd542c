#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "georeward/types.hpp"

namespace georeward {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

struct Sections {
  std::optional<std::string> think;
  std::optional<std::string> answer;
};

/// Returns the content of the first well-formed think pair and the first
/// well-formed answer pair. A pair is well-formed when no tag delimiter of
/// either kind appears between its opening and closing tags, so nested tags
/// resolve to the innermost pair and crossed or unclosed tags yield nothing.
Sections extract_sections(std::string_view raw_text);

enum class FormatPolicy {
  kStrict,   // nothing but whitespace outside the two pairs
  kLenient,  // free text allowed outside the pairs
};

/// Binary format reward: 1 iff exactly one think pair precedes exactly one
/// answer pair and both contents are non-blank. kStrict additionally rejects
/// any non-whitespace outside the pairs.
int format_reward(std::string_view raw_text, FormatPolicy policy = FormatPolicy::kStrict);

struct RolloutRecord {
  std::string raw_text;
  std::optional<std::string> think_text;
  std::optional<std::string> answer_text;
  bool format_valid = false;
};

RolloutRecord parse_rollout(std::string raw_text, FormatPolicy policy = FormatPolicy::kStrict);

/// First bracketed group of four finite numbers, e.g. "[x1, y1, x2, y2]",
/// anywhere in the answer. Corners are reordered so x1 <= x2 and y1 <= y2.
std::optional<BoundingBox> parse_rec_answer(std::string_view answer);

/// JSON list of {"bbox": [4 numbers], "label": "..."} objects. Text around
/// the outermost brackets is ignored; an empty list is a valid answer.
std::optional<DetectionSet> parse_ovd_answer(std::string_view answer);

/// Identity; normalization belongs to the VQA reward.
inline std::string parse_vqa_answer(std::string_view answer) { return std::string(answer); }

/// Dispatches to the task-specific parser. nullopt means parse failure.
std::optional<ParsedAnswer> parse_answer(TaskType task, std::string_view answer);

}  // namespace georeward
