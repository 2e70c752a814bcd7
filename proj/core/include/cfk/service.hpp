#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfk/error.hpp"
#include "cfk/occlusion.hpp"
#include "cfk/preprocess.hpp"
#include "cfk/session.hpp"

namespace cfk {

/// Renders presentation stimuli on demand: geometric normalization,
/// face-only histogram matching to the manifest's reference face, then the
/// occlusion band of the requested condition. Results are cached.
class StimulusStore {
 public:
  explicit StimulusStore(const DatasetManifest& manifest, BandOptions bands = {}, bool equalize = true);

  /// PNG bytes; throws UnknownFaceId.
  std::vector<std::uint8_t> png(const std::string& face_id, Condition condition);
  GrayImage render(const std::string& face_id, Condition condition);

 private:
  const DatasetManifest& manifest_;
  BandOptions bands_;
  bool equalize_;
  std::mutex mutex_;
  std::optional<NormalizedFace> reference_;
  std::map<std::pair<std::string, Condition>, std::vector<std::uint8_t>> cache_;
};

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 = any free port
  /// When set, every route except /health requires "Authorization: Bearer <token>".
  std::optional<std::string> token;
  std::string cors_origin = "*";
};

/// HTTP status for a library error.
int http_status(ErrorCode code) noexcept;

/// JSON API for the browser runner:
///   POST /sessions                     {"subject_id", "design": "plain_race"|"occlusion", "seed"?}
///   GET  /sessions/{id}/next           {"status":"trial", "trial_index", "face_id", "condition", "stimulus_url"}
///                                      or {"status":"complete"}
///   POST /sessions/{id}/responses      {"trial_index", "choice": "North"|"South"|"timeout", "rt_ms", "presented_at"?}
///                                      -> {"status":"ok", "session_id", "trial_index"}
///   GET  /sessions/{id}/export         JSONL (application/x-ndjson); "correct" omitted while the session is active
///   GET  /stimuli/{face_id}?condition= PNG, caching disabled
///   GET  /health
/// Errors are {"error": "<ErrorCode>", "message": "..."}. No response ever
/// reveals whether an answer was correct while its session is active.
class ExperimentService {
 public:
  ExperimentService(SessionManager& sessions, StimulusStore& stimuli, ServiceOptions options = {});
  ~ExperimentService();
  ExperimentService(const ExperimentService&) = delete;
  ExperimentService& operator=(const ExperimentService&) = delete;

  /// Binds the listening socket and returns the port.
  int bind();
  /// Serves until stop(); call bind() first.
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cfk
