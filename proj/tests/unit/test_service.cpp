#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cfk/service.hpp"
#include "fixtures.hpp"

using namespace cfk;
using nlohmann::json;

namespace {

/// Service on an ephemeral port over a small rendered synthetic dataset.
struct Harness {
  fixtures::TempDir dir{"service"};
  DatasetManifest manifest;
  std::unique_ptr<SessionManager> sessions;
  std::unique_ptr<StimulusStore> stimuli;
  std::unique_ptr<ExperimentService> service;
  std::thread thread;
  int port = 0;

  explicit Harness(std::optional<std::string> token = std::nullopt) {
    manifest = fixtures::write_synthetic_dataset(dir.path(), 6, 1.0, 3);
    SessionConfig cfg;
    cfg.plain_trials = 4;
    ConditionDesign d;
    d.common = {manifest.faces[0].face_id};
    for (std::size_t c = 0; c < kConditionCount; ++c) d.unique[c] = {manifest.faces[1 + c].face_id};
    cfg.occlusion = d;
    sessions = std::make_unique<SessionManager>(manifest, cfg);
    stimuli = std::make_unique<StimulusStore>(sessions->manifest());
    ServiceOptions o;
    o.port = 0;
    o.token = std::move(token);
    o.cors_origin = "http://runner.example";
    service = std::make_unique<ExperimentService>(*sessions, *stimuli, o);
    port = service->bind();
    thread = std::thread([this] { service->listen(); });
    for (int i = 0; i < 200 && !service->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Harness() {
    service->stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_connection_timeout(5);
    c.set_read_timeout(30);
    return c;
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

std::vector<json> ndjson(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("service: full plain session over HTTP") {
  Harness h;
  auto c = h.client();
  REQUIRE(c.Get("/health")->status == 200);

  auto created = c.Post("/sessions", R"({"subject_id":"alice","seed":5})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const json s = json::parse(created->body);
  CHECK(s["design"] == "plain_race");
  CHECK(s["n_trials"] == 4);
  const std::string id = s["session_id"];

  auto dup = c.Post("/sessions", R"({"subject_id":"alice"})", "application/json");
  CHECK(dup->status == 409);
  CHECK(json::parse(dup->body)["error"] == "DuplicateActiveSession");

  // The first trial is repeated until answered.
  const json t0 = body_of(c.Get("/sessions/" + id + "/next"));
  CHECK(t0["status"] == "trial");
  CHECK(t0["trial_index"] == 0);
  CHECK(body_of(c.Get("/sessions/" + id + "/next")) == t0);

  auto png = c.Get(t0["stimulus_url"].get<std::string>());
  REQUIRE(png);
  CHECK(png->status == 200);
  CHECK(png->get_header_value("Content-Type") == "image/png");
  CHECK(png->get_header_value("Cache-Control").find("no-store") != std::string::npos);
  CHECK(png->body.substr(1, 3) == "PNG");

  auto slow = c.Post("/sessions/" + id + "/responses", R"({"trial_index":0,"choice":"North","rt_ms":6000})",
                     "application/json");
  CHECK(slow->status == 422);
  CHECK(json::parse(slow->body)["error"] == "RtOutOfRange");
  auto wrong = c.Post("/sessions/" + id + "/responses", R"({"trial_index":3,"choice":"North","rt_ms":600})",
                      "application/json");
  CHECK(wrong->status == 409);
  CHECK(json::parse(wrong->body)["error"] == "UnknownTrial");

  auto ok = c.Post("/sessions/" + id + "/responses", R"({"trial_index":0,"choice":"North","rt_ms":600})",
                   "application/json");
  REQUIRE(ok->status == 200);
  const json ack = json::parse(ok->body);
  CHECK(ack["status"] == "ok");
  CHECK(ack["trial_index"] == 0);
  CHECK_FALSE(ack.contains("correct"));
  auto again = c.Post("/sessions/" + id + "/responses", R"({"trial_index":0,"choice":"South","rt_ms":600})",
                      "application/json");
  CHECK(again->status == 409);
  CHECK(json::parse(again->body)["error"] == "DuplicateSubmission");

  // While active, exports never reveal correctness.
  auto active = c.Get("/sessions/" + id + "/export");
  CHECK(active->get_header_value("Content-Type") == "application/x-ndjson");
  CHECK(active->body.find("correct") == std::string::npos);
  CHECK(ndjson(active->body).size() == 1);

  for (int i = 1; i < 4; ++i) {
    const json t = body_of(c.Get("/sessions/" + id + "/next"));
    const json answer = {{"trial_index", t["trial_index"]}, {"choice", i == 2 ? "timeout" : "South"}, {"rt_ms", 5000}};
    REQUIRE(c.Post("/sessions/" + id + "/responses", answer.dump(), "application/json")->status == 200);
  }
  json t;
  while ((t = body_of(c.Get("/sessions/" + id + "/next")))["status"] == "trial") {
    const json answer = {{"trial_index", t["trial_index"]}, {"choice", "North"}, {"rt_ms", 700}};
    REQUIRE(c.Post("/sessions/" + id + "/responses", answer.dump(), "application/json")->status == 200);
  }
  CHECK(t["status"] == "complete");
  const auto done = ndjson(c.Get("/sessions/" + id + "/export")->body);
  CHECK(done.size() == 5);
  std::size_t with_correct = 0;
  for (const auto& r : done) with_correct += r.contains("correct") && !r["correct"].is_null();
  CHECK(with_correct == 4);
  auto after = c.Post("/sessions/" + id + "/responses", R"({"trial_index":9,"choice":"South","rt_ms":600})",
                      "application/json");
  CHECK(after->status == 409);
  CHECK(json::parse(after->body)["error"] == "SessionComplete");
}

TEST_CASE("service: occlusion sessions, stimuli and error mapping") {
  Harness h;
  auto c = h.client();
  const json s = body_of(c.Post("/sessions", R"({"subject_id":"bob","design":"occlusion","seed":2})", "application/json"));
  CHECK(s["block_order"] == json::array({"none", "eye", "nose", "mouth"}));
  CHECK(s["n_trials"] == 8);
  const std::string face = h.manifest.faces[0].face_id;
  const auto none = c.Get("/stimuli/" + face);
  const auto mouth = c.Get("/stimuli/" + face + "?condition=mouth");
  REQUIRE(none->status == 200);
  REQUIRE(mouth->status == 200);
  CHECK(none->body != mouth->body);
  CHECK(c.Get("/stimuli/" + face + "?condition=none")->body == none->body);

  CHECK(c.Get("/stimuli/nobody")->status == 404);
  CHECK(json::parse(c.Get("/stimuli/nobody")->body)["error"] == "UnknownFaceId");
  CHECK(c.Get("/stimuli/" + face + "?condition=ears")->status == 400);
  CHECK(c.Get("/sessions/ses-999999/next")->status == 404);
  CHECK(json::parse(c.Get("/sessions/ses-999999/export")->body)["error"] == "UnknownSession");
  CHECK(c.Post("/sessions", "not json", "application/json")->status == 400);
  CHECK(c.Post("/sessions", R"({"design":"plain_race"})", "application/json")->status == 400);
  CHECK(c.Post("/sessions", R"({"subject_id":"x","design":"other"})", "application/json")->status == 400);
  CHECK(c.Post("/sessions/" + s["session_id"].get<std::string>() + "/responses", R"({"trial_index":0})",
               "application/json")
            ->status == 400);
}

TEST_CASE("service: bearer token and CORS") {
  Harness h("s3cret");
  auto c = h.client();
  CHECK(c.Get("/health")->status == 200);
  const auto denied = c.Post("/sessions", R"({"subject_id":"a"})", "application/json");
  CHECK(denied->status == 401);
  CHECK(json::parse(denied->body)["error"] == "Unauthorized");
  CHECK(c.Get("/stimuli/" + h.manifest.faces[0].face_id)->status == 401);

  httplib::Headers wrong{{"Authorization", "Bearer nope"}};
  CHECK(c.Post("/sessions", wrong, R"({"subject_id":"a"})", "application/json")->status == 401);
  httplib::Headers auth{{"Authorization", "Bearer s3cret"}};
  const auto ok = c.Post("/sessions", auth, R"({"subject_id":"a"})", "application/json");
  CHECK(ok->status == 201);
  CHECK(ok->get_header_value("Access-Control-Allow-Origin") == "http://runner.example");

  const auto pre = c.Options("/sessions");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "http://runner.example");
  CHECK(pre->get_header_value("Access-Control-Allow-Headers").find("Authorization") != std::string::npos);
}

TEST_CASE("HTTP status mapping") {
  CHECK(http_status(ErrorCode::UnknownSession) == 404);
  CHECK(http_status(ErrorCode::DuplicateSubmission) == 409);
  CHECK(http_status(ErrorCode::RtOutOfRange) == 422);
  CHECK(http_status(ErrorCode::SchemaViolation) == 400);
  CHECK(http_status(ErrorCode::Io) == 500);
}
