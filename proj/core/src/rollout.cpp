#include "georeward/rollout.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "georeward/json_io.hpp"

namespace georeward {
namespace {

constexpr std::array<std::string_view, 4> kDelimiters = {kThinkOpen, kThinkClose, kAnswerOpen,
                                                         kAnswerClose};

// Position and identity of the next tag delimiter at or after `from`.
struct TagHit {
  std::size_t pos = std::string_view::npos;
  std::string_view tag;
};

TagHit next_delimiter(std::string_view text, std::size_t from) {
  TagHit best;
  for (std::string_view tag : kDelimiters) {
    const std::size_t pos = text.find(tag, from);
    if (pos < best.pos) {
      best = {pos, tag};
    }
  }
  return best;
}

std::optional<std::string> first_well_formed(std::string_view text, std::string_view open,
                                             std::string_view close) {
  std::size_t search = 0;
  while (true) {
    const std::size_t open_pos = text.find(open, search);
    if (open_pos == std::string_view::npos) return std::nullopt;
    const std::size_t content_begin = open_pos + open.size();
    const TagHit hit = next_delimiter(text, content_begin);
    if (hit.pos == std::string_view::npos) return std::nullopt;
    if (hit.tag == close) {
      return std::string(text.substr(content_begin, hit.pos - content_begin));
    }
    search = content_begin;
  }
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

bool is_number_start(char c) {
  return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

void skip_spaces(std::string_view text, std::size_t& pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                               text[pos] == '\r')) {
    ++pos;
  }
}

std::optional<double> read_number(std::string_view text, std::size_t& pos) {
  skip_spaces(text, pos);
  if (pos >= text.size() || !is_number_start(text[pos])) return std::nullopt;
  std::size_t begin = pos;
  if (text[begin] == '+') ++begin;  // from_chars rejects a leading '+'
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data() + begin, text.data() + text.size(), value);
  if (ec != std::errc{} || !std::isfinite(value)) return std::nullopt;
  pos = static_cast<std::size_t>(end - text.data());
  return value;
}

// Tries to read "[n, n, n, n]" starting at the '[' at `pos`.
std::optional<BoundingBox> read_box_at(std::string_view text, std::size_t pos) {
  ++pos;
  std::array<double, 4> coords{};
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto value = read_number(text, pos);
    if (!value) return std::nullopt;
    coords[i] = *value;
    skip_spaces(text, pos);
    const char expected = i + 1 < coords.size() ? ',' : ']';
    if (pos >= text.size() || text[pos] != expected) return std::nullopt;
    ++pos;
  }
  return BoundingBox::from_corners(coords[0], coords[1], coords[2], coords[3]);
}

}  // namespace

Sections extract_sections(std::string_view raw_text) {
  return Sections{first_well_formed(raw_text, kThinkOpen, kThinkClose),
                  first_well_formed(raw_text, kAnswerOpen, kAnswerClose)};
}

int format_reward(std::string_view raw_text, FormatPolicy policy) {
  for (std::string_view tag : kDelimiters) {
    if (count_occurrences(raw_text, tag) != 1) return 0;
  }
  const std::size_t think_open = raw_text.find(kThinkOpen);
  const std::size_t think_close = raw_text.find(kThinkClose);
  const std::size_t answer_open = raw_text.find(kAnswerOpen);
  const std::size_t answer_close = raw_text.find(kAnswerClose);
  if (!(think_open < think_close && think_close < answer_open && answer_open < answer_close)) {
    return 0;
  }
  const std::size_t think_begin = think_open + kThinkOpen.size();
  const std::size_t answer_begin = answer_open + kAnswerOpen.size();
  if (is_blank(raw_text.substr(think_begin, think_close - think_begin)) ||
      is_blank(raw_text.substr(answer_begin, answer_close - answer_begin))) {
    return 0;
  }
  if (policy == FormatPolicy::kStrict) {
    const std::size_t between_begin = think_close + kThinkClose.size();
    const std::size_t tail_begin = answer_close + kAnswerClose.size();
    if (!is_blank(raw_text.substr(0, think_open)) ||
        !is_blank(raw_text.substr(between_begin, answer_open - between_begin)) ||
        !is_blank(raw_text.substr(tail_begin))) {
      return 0;
    }
  }
  return 1;
}

RolloutRecord parse_rollout(std::string raw_text, FormatPolicy policy) {
  RolloutRecord record;
  auto sections = extract_sections(raw_text);
  record.format_valid = format_reward(raw_text, policy) == 1;
  record.think_text = std::move(sections.think);
  record.answer_text = std::move(sections.answer);
  record.raw_text = std::move(raw_text);
  return record;
}

std::optional<BoundingBox> parse_rec_answer(std::string_view answer) {
  for (std::size_t pos = answer.find('['); pos != std::string_view::npos;
       pos = answer.find('[', pos + 1)) {
    if (auto box = read_box_at(answer, pos)) return box;
  }
  return std::nullopt;
}

std::optional<DetectionSet> parse_ovd_answer(std::string_view answer) {
  const std::string_view body = trim(answer);
  auto parsed = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_array()) {
    const std::size_t first = body.find('[');
    const std::size_t last = body.rfind(']');
    if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
      return std::nullopt;
    }
    parsed = nlohmann::json::parse(body.substr(first, last - first + 1), nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
  }
  return detections_from_json(parsed);
}

std::optional<ParsedAnswer> parse_answer(TaskType task, std::string_view answer) {
  switch (task) {
    case TaskType::kRec:
      if (auto box = parse_rec_answer(answer)) return ParsedAnswer{*box};
      return std::nullopt;
    case TaskType::kOvd:
      if (auto dets = parse_ovd_answer(answer)) return ParsedAnswer{std::move(*dets)};
      return std::nullopt;
    case TaskType::kVqa:
      return ParsedAnswer{parse_vqa_answer(answer)};
  }
  return std::nullopt;
}

}  // namespace georeward
