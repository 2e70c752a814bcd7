#include "cfk/service.hpp"

#include <httplib.h>

#include <json.hpp>

namespace cfk {

StimulusStore::StimulusStore(const DatasetManifest& manifest, BandOptions bands, bool equalize)
    : manifest_(manifest), bands_(bands), equalize_(equalize) {}

GrayImage StimulusStore::render(const std::string& face_id, Condition condition) {
  if (!manifest_.index_of(face_id)) throw Error(ErrorCode::UnknownFaceId, "unknown face " + face_id);
  const FaceRecord& face = manifest_.face(face_id);
  const PartIndexMap& parts = manifest_.part_index_map;
  NormalizedFace norm = normalize_geometry(face, manifest_.load_image(face), parts);
  if (equalize_) {
    std::optional<NormalizedFace> ref;
    {
      std::lock_guard lock(mutex_);
      ref = reference_;
    }
    if (!ref) {
      const FaceRecord& r = manifest_.reference_face();
      ref = normalize_geometry(r, manifest_.load_image(r), parts);
      std::lock_guard lock(mutex_);
      reference_ = ref;
    }
    norm = equalize_face(norm, *ref);
  }
  if (condition == Condition::None) return norm.image;
  return apply_band(norm.image, make_band(norm.landmarks, parts, condition, bands_));
}

std::vector<std::uint8_t> StimulusStore::png(const std::string& face_id, Condition condition) {
  const auto key = std::make_pair(face_id, condition);
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  std::vector<std::uint8_t> bytes = encode_png(render(face_id, condition));
  std::lock_guard lock(mutex_);
  cache_.emplace(key, bytes);
  return bytes;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownFaceId:
    case ErrorCode::MissingFile: return 404;
    case ErrorCode::UnknownTrial:
    case ErrorCode::DuplicateSubmission:
    case ErrorCode::DuplicateActiveSession:
    case ErrorCode::SessionComplete: return 409;
    case ErrorCode::RtOutOfRange: return 422;
    case ErrorCode::InvalidArgument:
    case ErrorCode::SchemaViolation: return 400;
    default: return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    nlohmann::json j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

struct ExperimentService::Impl {
  SessionManager& sessions;
  StimulusStore& stimuli;
  ServiceOptions options;
  httplib::Server server;
  int port = -1;

  Impl(SessionManager& s, StimulusStore& st, ServiceOptions o) : sessions(s), stimuli(st), options(std::move(o)) {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
      if (options.token && req.path != "/health" &&
          req.get_header_value("Authorization") != "Bearer " + *options.token) {
        send_error(res, 401, "Unauthorized", "missing or invalid bearer token");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), to_string(e.code()), e.what());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, to_string(ErrorCode::SchemaViolation), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "Internal", e.what());
      }
    });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      const nlohmann::json body = parse_body(req);
      const auto subject = body.at("subject_id").get<std::string>();
      const DesignKind design = parse_design_kind(body.value("design", std::string("plain_race")));
      const auto seed = body.value("seed", std::uint64_t{1});
      const SessionSnapshot s = sessions.create_session(subject, design, seed);
      nlohmann::json order = nlohmann::json::array();
      if (design == DesignKind::Occlusion) {
        for (Condition c : s.block_order) order.push_back(to_string(c));
      }
      send_json(res, 201,
                {{"session_id", s.session_id},
                 {"subject_id", s.subject_id},
                 {"design", to_string(s.design)},
                 {"block_order", order},
                 {"n_trials", s.remaining}});
    });

    server.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto trial = sessions.next_trial(id);
      if (!trial) {
        send_json(res, 200, {{"status", "complete"}});
        return;
      }
      const std::string url = "/stimuli/" + trial->face_id + "?condition=" + std::string(to_string(trial->condition));
      send_json(res, 200,
                {{"status", "trial"},
                 {"trial_index", trial->trial_index},
                 {"face_id", trial->face_id},
                 {"condition", to_string(trial->condition)},
                 {"stimulus_url", url}});
    });

    server.Post(R"(/sessions/([^/]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const nlohmann::json body = parse_body(req);
      const auto trial_index = body.at("trial_index").get<std::size_t>();
      const Choice choice = parse_choice(body.at("choice").get<std::string>());
      const double rt = body.at("rt_ms").get<double>();
      const auto presented_at = body.value("presented_at", std::int64_t{0});
      const SubmitAck ack = sessions.submit_response(id, trial_index, choice, rt, presented_at);
      send_json(res, 200, {{"status", "ok"}, {"session_id", ack.session_id}, {"trial_index", ack.trial_index}});
    });

    server.Get(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const bool active = sessions.snapshot(id).state == SessionState::Active;
      std::string out;
      for (const auto& r : sessions.export_session(id)) {
        nlohmann::ordered_json j = to_json(r);
        if (active) j.erase("correct");
        out += j.dump();
        out += '\n';
      }
      res.status = 200;
      res.set_content(out, "application/x-ndjson");
    });

    server.Get(R"(/stimuli/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string face_id = req.matches[1];
      const Condition cond =
          parse_condition(req.has_param("condition") ? req.get_param_value("condition") : std::string("none"));
      const auto bytes = stimuli.png(face_id, cond);
      res.status = 200;
      res.set_header("Cache-Control", "no-store, no-cache, must-revalidate, max-age=0");
      res.set_header("Pragma", "no-cache");
      res.set_header("Expires", "0");
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    });
  }
};

ExperimentService::ExperimentService(SessionManager& sessions, StimulusStore& stimuli, ServiceOptions options)
    : impl_(std::make_unique<Impl>(sessions, stimuli, std::move(options))) {}

ExperimentService::~ExperimentService() { stop(); }

int ExperimentService::bind() {
  if (impl_->options.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
    impl_->port = impl_->options.port;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void ExperimentService::listen() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void ExperimentService::stop() {
  if (impl_) impl_->server.stop();
}

bool ExperimentService::running() const { return impl_->server.is_running(); }

}  // namespace cfk
