#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cfk/dataset.hpp"
#include "cfk/occlusion.hpp"
#include "cfk/responses.hpp"

namespace cfk {

enum class DesignKind { PlainRace, Occlusion };
enum class SessionState { Active, Complete };

std::string_view to_string(DesignKind d) noexcept;
DesignKind parse_design_kind(std::string_view s);

/// Lexicographic permutation `index` (mod 24) of none/eye/nose/mouth.
std::array<Condition, kConditionCount> block_permutation(std::size_t index);

struct TrialDescriptor {
  std::size_t trial_index = 0;
  std::string face_id;
  Condition condition = Condition::None;
};

struct SubmitAck {
  std::string session_id;
  std::size_t trial_index = 0;
};

struct SessionSnapshot {
  std::string session_id;
  std::string subject_id;
  DesignKind design = DesignKind::PlainRace;
  std::array<Condition, kConditionCount> block_order{};
  std::size_t permutation_index = 0;
  SessionState state = SessionState::Active;
  std::size_t remaining = 0;  // queued trials, excluding the outstanding one
  std::size_t answered = 0;
  std::size_t trials_presented = 0;
  std::int64_t created_at = 0;
  std::uint64_t seed = 0;
};

struct SessionConfig {
  /// Plain-design schedule size; unset = every North/South face.
  std::optional<std::size_t> plain_trials;
  /// Condition sets for the occlusion design (required to create one).
  std::optional<ConditionDesign> occlusion;
  int min_requeue = 3;
  int max_requeue = 10;
  /// Directory for sessions.json plus one <session_id>.jsonl per session;
  /// empty keeps everything in memory.
  std::filesystem::path storage;
};

/// Owns every session of one experiment. Each session has its own lock;
/// the session table is guarded by a shared lock so independent sessions
/// proceed concurrently.
///
/// Trial flow: next_trial() hands out the queue head and keeps returning it
/// until a response for that trial_index arrives. An answered trial is
/// final; a timeout re-inserts the same face/condition so that it comes
/// back as trial t + o with o uniform in [min_requeue, max_requeue] (clamped
/// to the end of the queue, or of the current block in the occlusion
/// design). The offset is a pure function of the session seed and trial
/// index, which is what lets a restarted server rebuild every queue by
/// replaying the response logs.
class SessionManager {
 public:
  SessionManager(DatasetManifest manifest, SessionConfig config = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Throws DuplicateActiveSession when the subject already has an active
  /// session of the same design. Occlusion sessions take block permutations
  /// in creation order (the 25th recycles the first).
  SessionSnapshot create_session(const std::string& subject_id, DesignKind design, std::uint64_t seed);

  /// Nullopt once every trial is answered. Throws UnknownSession.
  std::optional<TrialDescriptor> next_trial(const std::string& session_id);

  /// Throws UnknownSession, SessionComplete, DuplicateSubmission (trial
  /// already answered or timed out), UnknownTrial (not the outstanding
  /// trial), RtOutOfRange (answered rt outside [0, 5000] ms or non-finite).
  SubmitAck submit_response(const std::string& session_id, std::size_t trial_index, Choice choice, double rt_ms,
                            std::int64_t presented_at = 0);

  /// Every stored record (answers and timeouts) in submission order.
  std::vector<ResponseRecord> export_session(const std::string& session_id) const;

  SessionSnapshot snapshot(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  const DatasetManifest& manifest() const noexcept { return manifest_; }

 private:
  struct QueueItem {
    std::string face_id;
    Condition condition = Condition::None;
    std::size_t block = 0;
  };
  struct Session {
    mutable std::mutex mutex;
    SessionSnapshot info;
    std::vector<QueueItem> queue;  // front = next
    std::optional<std::pair<TrialDescriptor, std::size_t>> outstanding;  // descriptor, block
    std::set<std::size_t> submitted;
    std::set<std::pair<std::string, Condition>> answered;
    std::vector<ResponseRecord> responses;
  };

  std::vector<QueueItem> build_queue(const SessionSnapshot& info) const;
  std::optional<TrialDescriptor> next_locked(Session& s);
  ResponseRecord submit_locked(Session& s, std::size_t trial_index, Choice choice, double rt_ms,
                               std::int64_t presented_at);
  Session& find(const std::string& session_id) const;
  void save_index() const;
  void load_storage();

  DatasetManifest manifest_;
  SessionConfig config_;
  std::map<std::string, Choice> truth_;
  mutable std::shared_mutex table_mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::size_t session_counter_ = 0;
  std::size_t occlusion_counter_ = 0;
};

}  // namespace cfk
