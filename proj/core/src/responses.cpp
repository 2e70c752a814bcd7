#include "cfk/responses.hpp"

#include <sstream>

#include "cfk/error.hpp"
#include "text_util.hpp"

namespace cfk {

std::string_view to_string(Choice c) noexcept {
  switch (c) {
    case Choice::North: return "North";
    case Choice::South: return "South";
    case Choice::Timeout: return "timeout";
  }
  return "timeout";
}

std::string_view to_string(Condition c) noexcept {
  switch (c) {
    case Condition::None: return "none";
    case Condition::Eye: return "eye";
    case Condition::Nose: return "nose";
    case Condition::Mouth: return "mouth";
  }
  return "none";
}

Choice parse_choice(std::string_view s) {
  if (s == "North" || s == "n" || s == "N") return Choice::North;
  if (s == "South" || s == "s" || s == "S") return Choice::South;
  if (s == "timeout") return Choice::Timeout;
  throw Error(ErrorCode::InvalidArgument, "unknown choice '" + std::string(s) + "'");
}

Condition parse_condition(std::string_view s) {
  if (s == "none") return Condition::None;
  if (s == "eye") return Condition::Eye;
  if (s == "nose") return Condition::Nose;
  if (s == "mouth") return Condition::Mouth;
  throw Error(ErrorCode::InvalidArgument, "unknown condition '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const ResponseRecord& r) {
  nlohmann::ordered_json j;
  j["session_id"] = r.session_id;
  j["subject_id"] = r.subject_id;
  j["trial_index"] = r.trial_index;
  j["face_id"] = r.face_id;
  j["condition"] = to_string(r.condition);
  j["choice"] = to_string(r.choice);
  j["correct"] = r.correct ? nlohmann::ordered_json(*r.correct) : nlohmann::ordered_json(nullptr);
  j["rt_ms"] = r.rt_ms;
  j["presented_at"] = r.presented_at;
  return j;
}

ResponseRecord response_from_json(const nlohmann::json& j) {
  try {
    ResponseRecord r;
    r.session_id = j.value("session_id", std::string{});
    r.subject_id = j.value("subject_id", std::string{});
    r.face_id = j.at("face_id").get<std::string>();
    r.condition = parse_condition(j.value("condition", std::string("none")));
    r.choice = parse_choice(j.at("choice").get<std::string>());
    if (j.contains("correct") && !j["correct"].is_null()) r.correct = j["correct"].get<bool>();
    r.rt_ms = j.value("rt_ms", 0.0);
    r.presented_at = j.value("presented_at", std::int64_t{0});
    r.trial_index = j.value("trial_index", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("response record: ") + e.what());
  }
}

std::string to_jsonl(std::span<const ResponseRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<ResponseRecord> parse_jsonl(std::string_view text) {
  std::vector<ResponseRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::trim(text.substr(start, end - start));
    ++line_no;
    if (!line.empty()) {
      try {
        out.push_back(response_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, "jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    start = end + 1;
  }
  return out;
}

std::vector<ResponseRecord> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(detail::read_text(path));
}

void write_jsonl(std::span<const ResponseRecord> records, const std::filesystem::path& path) {
  detail::write_text(path, to_jsonl(records));
}

}  // namespace cfk
