#include "cfk/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cfk/error.hpp"
#include "cfk/rng.hpp"
#include "text_util.hpp"

namespace cfk {

std::string_view to_string(DesignKind d) noexcept {
  return d == DesignKind::Occlusion ? "occlusion" : "plain_race";
}

DesignKind parse_design_kind(std::string_view s) {
  if (s == "plain_race" || s == "plain") return DesignKind::PlainRace;
  if (s == "occlusion") return DesignKind::Occlusion;
  throw Error(ErrorCode::InvalidArgument, "unknown design '" + std::string(s) + "'");
}

std::array<Condition, kConditionCount> block_permutation(std::size_t index) {
  std::array<Condition, kConditionCount> p{Condition::None, Condition::Eye, Condition::Nose, Condition::Mouth};
  for (std::size_t i = 0; i < index % 24; ++i) std::next_permutation(p.begin(), p.end());
  return p;
}

namespace {

constexpr std::uint64_t kRequeueStream = 0x7265717565000000ULL;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

nlohmann::json index_entry(const SessionSnapshot& s) {
  nlohmann::json order = nlohmann::json::array();
  for (Condition c : s.block_order) order.push_back(to_string(c));
  return {{"session_id", s.session_id},
          {"subject_id", s.subject_id},
          {"design", to_string(s.design)},
          {"seed", s.seed},
          {"permutation_index", s.permutation_index},
          {"block_order", order},
          {"created_at", s.created_at}};
}

}  // namespace

SessionManager::SessionManager(DatasetManifest manifest, SessionConfig config)
    : manifest_(std::move(manifest)), config_(std::move(config)) {
  if (config_.min_requeue < 1 || config_.max_requeue < config_.min_requeue) {
    throw Error(ErrorCode::InvalidArgument, "re-queue offsets must satisfy 1 <= min <= max");
  }
  for (const auto& f : manifest_.faces) {
    if (f.labels.race == Race::North) truth_[f.face_id] = Choice::North;
    if (f.labels.race == Race::South) truth_[f.face_id] = Choice::South;
  }
  if (config_.occlusion) {
    for (std::size_t c = 0; c < kConditionCount; ++c) {
      for (const auto& id : config_.occlusion->members(static_cast<Condition>(c))) {
        if (!truth_.count(id)) throw Error(ErrorCode::UnknownFaceId, "design face " + id + " has no race label");
      }
    }
  }
  if (!config_.storage.empty()) {
    std::filesystem::create_directories(config_.storage);
    load_storage();
  }
}

SessionManager::~SessionManager() = default;

std::vector<SessionManager::QueueItem> SessionManager::build_queue(const SessionSnapshot& info) const {
  std::vector<QueueItem> queue;
  if (info.design == DesignKind::PlainRace) {
    std::vector<std::string> ids;
    for (const auto& f : manifest_.faces) {
      if (truth_.count(f.face_id)) ids.push_back(f.face_id);
    }
    Rng rng(derive_seed(info.seed, 0));
    std::shuffle(ids.begin(), ids.end(), rng);
    if (config_.plain_trials && *config_.plain_trials < ids.size()) ids.resize(*config_.plain_trials);
    for (auto& id : ids) queue.push_back({std::move(id), Condition::None, 0});
    return queue;
  }
  if (!config_.occlusion) throw Error(ErrorCode::InvalidArgument, "occlusion sessions need a condition design");
  for (std::size_t b = 0; b < kConditionCount; ++b) {
    const Condition cond = info.block_order[b];
    std::vector<std::string> ids = config_.occlusion->members(cond);
    Rng rng(derive_seed(info.seed, 1 + b));
    std::shuffle(ids.begin(), ids.end(), rng);
    for (auto& id : ids) queue.push_back({std::move(id), cond, b});
  }
  return queue;
}

SessionSnapshot SessionManager::create_session(const std::string& subject_id, DesignKind design, std::uint64_t seed) {
  if (subject_id.empty()) throw Error(ErrorCode::InvalidArgument, "subject_id must not be empty");
  std::unique_lock lock(table_mutex_);
  for (const auto& [id, s] : sessions_) {
    std::lock_guard slock(s->mutex);
    if (s->info.subject_id == subject_id && s->info.design == design && s->info.state == SessionState::Active) {
      throw Error(ErrorCode::DuplicateActiveSession, "subject " + subject_id + " already has active session " + id);
    }
  }
  auto s = std::make_unique<Session>();
  char buf[32];
  std::snprintf(buf, sizeof buf, "ses-%06zu", ++session_counter_);
  s->info.session_id = buf;
  s->info.subject_id = subject_id;
  s->info.design = design;
  s->info.seed = seed;
  s->info.created_at = now_ms();
  if (design == DesignKind::Occlusion) {
    if (!config_.occlusion) throw Error(ErrorCode::InvalidArgument, "occlusion sessions need a condition design");
    s->info.permutation_index = occlusion_counter_++ % 24;
    s->info.block_order = block_permutation(s->info.permutation_index);
  } else {
    s->info.block_order = block_permutation(0);
  }
  s->queue = build_queue(s->info);
  if (s->queue.empty()) s->info.state = SessionState::Complete;
  s->info.remaining = s->queue.size();
  const SessionSnapshot out = s->info;
  sessions_.emplace(out.session_id, std::move(s));
  if (!config_.storage.empty()) {
    detail::write_text(config_.storage / (out.session_id + ".jsonl"), "");
    save_index();
  }
  return out;
}

SessionManager::Session& SessionManager::find(const std::string& session_id) const {
  std::shared_lock lock(table_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session " + session_id);
  return *it->second;
}

std::optional<TrialDescriptor> SessionManager::next_locked(Session& s) {
  if (s.info.state == SessionState::Complete) return std::nullopt;
  if (!s.outstanding) {
    if (s.queue.empty()) {
      s.info.state = SessionState::Complete;
      return std::nullopt;
    }
    QueueItem item = std::move(s.queue.front());
    s.queue.erase(s.queue.begin());
    TrialDescriptor d{s.info.trials_presented++, std::move(item.face_id), item.condition};
    s.outstanding.emplace(std::move(d), item.block);
    s.info.remaining = s.queue.size();
  }
  return s.outstanding->first;
}

std::optional<TrialDescriptor> SessionManager::next_trial(const std::string& session_id) {
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  return next_locked(s);
}

ResponseRecord SessionManager::submit_locked(Session& s, std::size_t trial_index, Choice choice, double rt_ms,
                                             std::int64_t presented_at) {
  if (s.submitted.count(trial_index)) {
    throw Error(ErrorCode::DuplicateSubmission, "trial " + std::to_string(trial_index) + " already submitted");
  }
  if (s.info.state == SessionState::Complete) throw Error(ErrorCode::SessionComplete, "session is complete");
  if (!s.outstanding || s.outstanding->first.trial_index != trial_index) {
    throw Error(ErrorCode::UnknownTrial, "trial " + std::to_string(trial_index) + " is not the outstanding trial");
  }
  if (!std::isfinite(rt_ms) || rt_ms < 0.0 || (choice != Choice::Timeout && rt_ms > kStimulusTimeoutMs)) {
    throw Error(ErrorCode::RtOutOfRange, "rt_ms " + std::to_string(rt_ms) + " outside [0, 5000]");
  }
  const auto [trial, block] = *s.outstanding;
  ResponseRecord r;
  r.session_id = s.info.session_id;
  r.subject_id = s.info.subject_id;
  r.face_id = trial.face_id;
  r.condition = trial.condition;
  r.choice = choice;
  r.rt_ms = rt_ms;
  r.presented_at = presented_at;
  r.trial_index = trial_index;
  if (choice == Choice::Timeout) {
    Rng rng(derive_seed(s.info.seed, kRequeueStream + trial_index));
    std::uniform_int_distribution<int> offset(config_.min_requeue, config_.max_requeue);
    std::size_t limit = 0;  // items left in the same block
    while (limit < s.queue.size() && s.queue[limit].block == block) ++limit;
    const std::size_t pos = std::min(static_cast<std::size_t>(offset(rng) - 1), limit);
    s.queue.insert(s.queue.begin() + static_cast<long>(pos), QueueItem{trial.face_id, trial.condition, block});
  } else {
    r.correct = truth_.at(trial.face_id) == choice;
    s.answered.emplace(trial.face_id, trial.condition);
    ++s.info.answered;
  }
  s.submitted.insert(trial_index);
  s.outstanding.reset();
  s.info.remaining = s.queue.size();
  if (s.queue.empty()) s.info.state = SessionState::Complete;
  s.responses.push_back(r);
  return r;
}

SubmitAck SessionManager::submit_response(const std::string& session_id, std::size_t trial_index, Choice choice,
                                          double rt_ms, std::int64_t presented_at) {
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  const ResponseRecord r = submit_locked(s, trial_index, choice, rt_ms, presented_at);
  if (!config_.storage.empty()) {
    std::ofstream out(config_.storage / (session_id + ".jsonl"), std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot append to the log of " + session_id);
    out << to_json(r).dump() << '\n';
    out.flush();
  }
  return {session_id, trial_index};
}

std::vector<ResponseRecord> SessionManager::export_session(const std::string& session_id) const {
  const Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  return s.responses;
}

SessionSnapshot SessionManager::snapshot(const std::string& session_id) const {
  const Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  return s.info;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(table_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

void SessionManager::save_index() const {
  nlohmann::json j;
  j["version"] = 1;
  j["session_counter"] = session_counter_;
  j["occlusion_counter"] = occlusion_counter_;
  j["sessions"] = nlohmann::json::array();
  for (const auto& [id, s] : sessions_) j["sessions"].push_back(index_entry(s->info));
  const auto tmp = config_.storage / "sessions.json.tmp";
  detail::write_text(tmp, j.dump(2));
  std::filesystem::rename(tmp, config_.storage / "sessions.json");
}

void SessionManager::load_storage() {
  const auto index = config_.storage / "sessions.json";
  if (!std::filesystem::exists(index)) return;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(index));
    session_counter_ = j.at("session_counter").get<std::size_t>();
    occlusion_counter_ = j.at("occlusion_counter").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("sessions.json: ") + e.what());
  }
  for (const auto& e : j.at("sessions")) {
    auto s = std::make_unique<Session>();
    s->info.session_id = e.at("session_id").get<std::string>();
    s->info.subject_id = e.at("subject_id").get<std::string>();
    s->info.design = parse_design_kind(e.at("design").get<std::string>());
    s->info.seed = e.at("seed").get<std::uint64_t>();
    s->info.permutation_index = e.at("permutation_index").get<std::size_t>();
    s->info.block_order = block_permutation(s->info.permutation_index);
    s->info.created_at = e.value("created_at", std::int64_t{0});
    s->queue = build_queue(s->info);
    if (s->queue.empty()) s->info.state = SessionState::Complete;

    // Replay the log. A torn final line (crash mid-write) is dropped.
    const auto log = config_.storage / (s->info.session_id + ".jsonl");
    std::vector<ResponseRecord> records;
    if (std::filesystem::exists(log)) {
      const std::string text = detail::read_text(log);
      std::size_t start = 0;
      while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        const bool last = end == std::string::npos;
        if (last) end = text.size();
        const auto line = detail::trim(std::string_view(text).substr(start, end - start));
        if (!line.empty()) {
          try {
            records.push_back(response_from_json(nlohmann::json::parse(line)));
          } catch (const std::exception&) {
            if (!last) throw Error(ErrorCode::SchemaViolation, "corrupt response log " + log.string());
          }
        }
        start = end + 1;
      }
    }
    for (const auto& r : records) {
      const auto d = next_locked(*s);
      if (!d || d->trial_index != r.trial_index || d->face_id != r.face_id) {
        throw Error(ErrorCode::SchemaViolation, "response log of " + s->info.session_id + " does not replay");
      }
      submit_locked(*s, r.trial_index, r.choice, r.rt_ms, r.presented_at);
    }
    s->info.remaining = s->queue.size();
    sessions_.emplace(s->info.session_id, std::move(s));
  }
}

}  // namespace cfk
