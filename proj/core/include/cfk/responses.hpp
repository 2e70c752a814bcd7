#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cfk {

enum class Choice { North, South, Timeout };
enum class Condition { None, Eye, Nose, Mouth };

inline constexpr std::size_t kConditionCount = 4;
inline constexpr double kStimulusTimeoutMs = 5000.0;

std::string_view to_string(Choice c) noexcept;
std::string_view to_string(Condition c) noexcept;
Choice parse_choice(std::string_view s);
Condition parse_condition(std::string_view s);
inline std::size_t index_of(Condition c) noexcept { return static_cast<std::size_t>(c); }

/// One keypress (or timeout) on one presented face.
struct ResponseRecord {
  std::string session_id;
  std::string subject_id;
  std::string face_id;
  Condition condition = Condition::None;
  Choice choice = Choice::Timeout;
  std::optional<bool> correct;  // absent for timeouts
  double rt_ms = 0.0;           // client-measured, face onset to keypress
  std::int64_t presented_at = 0;  // ms since epoch (client clock)
  std::size_t trial_index = 0;

  bool answered() const noexcept { return choice != Choice::Timeout; }
  bool operator==(const ResponseRecord&) const = default;
};

/// Fixed field order: session_id, subject_id, trial_index, face_id,
/// condition, choice, correct, rt_ms, presented_at.
nlohmann::ordered_json to_json(const ResponseRecord& r);
ResponseRecord response_from_json(const nlohmann::json& j);

std::string to_jsonl(std::span<const ResponseRecord> records);
std::vector<ResponseRecord> parse_jsonl(std::string_view text);
std::vector<ResponseRecord> read_jsonl(const std::filesystem::path& path);
void write_jsonl(std::span<const ResponseRecord> records, const std::filesystem::path& path);

}  // namespace cfk
