#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "cfk/error.hpp"
#include "cfk/session.hpp"
#include "cfk/stats.hpp"
#include "cfk/synthetic.hpp"
#include "fixtures.hpp"

using namespace cfk;

namespace {

DatasetManifest small_manifest(std::size_t per_class = 60) {
  SyntheticOptions o;
  o.n_per_class = per_class;
  o.render_images = false;
  return generate_synthetic(o).manifest;
}

ConditionDesign small_design(const DatasetManifest& m) {
  ConditionDesign d;
  std::size_t next = 0;
  for (int i = 0; i < 2; ++i) d.common.push_back(m.faces[next++].face_id);
  for (std::size_t c = 0; c < kConditionCount; ++c) {
    for (int i = 0; i < 3; ++i) d.unique[c].push_back(m.faces[next++].face_id);
  }
  return d;
}

Choice truth(const DatasetManifest& m, const std::string& face) {
  for (const auto& f : m.faces) {
    if (f.face_id == face) return f.labels.race == Race::South ? Choice::South : Choice::North;
  }
  throw std::runtime_error("no such face");
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected cfk::Error");
  return ErrorCode::InvalidArgument;
}

/// Answers (or times out) until the session completes; returns the
/// presented descriptors in order.
std::vector<TrialDescriptor> run_session(SessionManager& mgr, const std::string& id, std::mt19937_64& rng,
                                         double timeout_rate) {
  std::vector<TrialDescriptor> seen;
  std::bernoulli_distribution timeout(timeout_rate), north(0.5);
  while (auto t = mgr.next_trial(id)) {
    seen.push_back(*t);
    if (timeout(rng)) {
      mgr.submit_response(id, t->trial_index, Choice::Timeout, 5000.0);
    } else {
      mgr.submit_response(id, t->trial_index, north(rng) ? Choice::North : Choice::South, 700.0);
    }
  }
  return seen;
}

}  // namespace

TEST_CASE("plain design: distinct faces in a seed-determined order") {
  SessionConfig cfg;
  cfg.plain_trials = 100;
  SessionManager mgr(small_manifest(), cfg);
  const SessionSnapshot a = mgr.create_session("alice", DesignKind::PlainRace, 7);
  const SessionSnapshot b = mgr.create_session("bob", DesignKind::PlainRace, 7);
  const SessionSnapshot c = mgr.create_session("carol", DesignKind::PlainRace, 8);
  CHECK(a.remaining == 100);
  CHECK(a.session_id != b.session_id);
  std::mt19937_64 rng(1);
  const auto ta = run_session(mgr, a.session_id, rng, 0.0);
  const auto tb = run_session(mgr, b.session_id, rng, 0.0);
  const auto tc = run_session(mgr, c.session_id, rng, 0.0);
  REQUIRE(ta.size() == 100);
  std::set<std::string> faces;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    faces.insert(ta[i].face_id);
    CHECK(ta[i].trial_index == i);
    CHECK(ta[i].condition == Condition::None);
    CHECK(ta[i].face_id == tb[i].face_id);
  }
  CHECK(faces.size() == 100);
  bool differs = false;
  for (std::size_t i = 0; i < ta.size(); ++i) differs |= ta[i].face_id != tc[i].face_id;
  CHECK(differs);
  CHECK(mgr.snapshot(a.session_id).state == SessionState::Complete);
  CHECK(mgr.snapshot(a.session_id).answered == 100);
}

TEST_CASE("occlusion design: blocks follow the permutation and the 25th session recycles") {
  const DatasetManifest m = small_manifest();
  SessionConfig cfg;
  cfg.occlusion = small_design(m);
  SessionManager mgr(m, cfg);
  std::vector<SessionSnapshot> snaps;
  for (int i = 0; i < 25; ++i) snaps.push_back(mgr.create_session("s" + std::to_string(i), DesignKind::Occlusion, i));
  std::set<std::array<Condition, kConditionCount>> orders;
  for (int i = 0; i < 24; ++i) {
    CHECK(snaps[i].permutation_index == static_cast<std::size_t>(i));
    orders.insert(snaps[i].block_order);
  }
  CHECK(orders.size() == 24);
  CHECK(snaps[24].permutation_index == 0);
  CHECK(snaps[24].block_order == snaps[0].block_order);
  CHECK(block_permutation(0) == std::array{Condition::None, Condition::Eye, Condition::Nose, Condition::Mouth});
  CHECK(block_permutation(23) == std::array{Condition::Mouth, Condition::Nose, Condition::Eye, Condition::None});

  std::mt19937_64 rng(2);
  const auto trials = run_session(mgr, snaps[5].session_id, rng, 0.0);
  REQUIRE(trials.size() == 20);
  for (std::size_t b = 0; b < kConditionCount; ++b) {
    std::set<std::string> block;
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(trials[b * 5 + i].condition == snaps[5].block_order[b]);
      block.insert(trials[b * 5 + i].face_id);
    }
    const auto expected = cfg.occlusion->members(snaps[5].block_order[b]);
    CHECK(block == std::set<std::string>(expected.begin(), expected.end()));
  }
  CHECK_THROWS_AS(SessionManager(m).create_session("x", DesignKind::Occlusion, 1), Error);
}

TEST_CASE("next_trial is idempotent until a response arrives") {
  SessionConfig cfg;
  cfg.plain_trials = 10;
  SessionManager mgr(small_manifest(), cfg);
  const auto id = mgr.create_session("alice", DesignKind::PlainRace, 1).session_id;
  const auto first = mgr.next_trial(id);
  REQUIRE(first);
  CHECK(first->trial_index == 0);
  const auto again = mgr.next_trial(id);
  CHECK(again->trial_index == 0);
  CHECK(again->face_id == first->face_id);
  mgr.submit_response(id, 0, Choice::North, 600.0);
  CHECK(mgr.next_trial(id)->trial_index == 1);
}

TEST_CASE("timeouts re-queue the face 3 to 10 trials later") {
  SessionConfig cfg;
  cfg.plain_trials = 40;
  SessionManager mgr(small_manifest(), cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto id = mgr.create_session("sub" + std::to_string(seed), DesignKind::PlainRace, seed).session_id;
    const auto t = mgr.next_trial(id);
    mgr.submit_response(id, t->trial_index, Choice::Timeout, 5000.0);
    std::optional<std::size_t> back;
    for (std::size_t k = 1; k <= 12; ++k) {
      const auto n = mgr.next_trial(id);
      if (n->face_id == t->face_id && !back) back = n->trial_index;
      mgr.submit_response(id, n->trial_index, Choice::South, 500.0);
    }
    REQUIRE(back);
    CHECK(*back >= 3);
    CHECK(*back <= 10);
  }
}

TEST_CASE("occlusion timeouts stay inside their block") {
  const DatasetManifest m = small_manifest();
  SessionConfig cfg;
  cfg.occlusion = small_design(m);
  SessionManager mgr(m, cfg);
  const auto snap = mgr.create_session("s", DesignKind::Occlusion, 3);
  // Time out the last trial of the first block: it must be re-shown before
  // the second block starts.
  for (int i = 0; i < 4; ++i) mgr.submit_response(snap.session_id, mgr.next_trial(snap.session_id)->trial_index, Choice::North, 500);
  const auto last = mgr.next_trial(snap.session_id);
  mgr.submit_response(snap.session_id, last->trial_index, Choice::Timeout, 5000);
  const auto redo = mgr.next_trial(snap.session_id);
  CHECK(redo->face_id == last->face_id);
  CHECK(redo->condition == snap.block_order[0]);
  CHECK(redo->trial_index == 5);
}

TEST_CASE("submission errors") {
  SessionConfig cfg;
  cfg.plain_trials = 2;
  SessionManager mgr(small_manifest(), cfg);
  const auto id = mgr.create_session("alice", DesignKind::PlainRace, 1).session_id;
  CHECK(code_of([&] { mgr.create_session("alice", DesignKind::PlainRace, 2); }) == ErrorCode::DuplicateActiveSession);
  CHECK(code_of([&] { mgr.next_trial("nope"); }) == ErrorCode::UnknownSession);
  CHECK(code_of([&] { mgr.export_session("nope"); }) == ErrorCode::UnknownSession);
  CHECK(code_of([&] { mgr.submit_response("nope", 0, Choice::North, 1); }) == ErrorCode::UnknownSession);
  CHECK(code_of([&] { mgr.submit_response(id, 0, Choice::North, 500); }) == ErrorCode::UnknownTrial);  // not fetched
  const auto t = mgr.next_trial(id);
  CHECK(code_of([&] { mgr.submit_response(id, 1, Choice::North, 500); }) == ErrorCode::UnknownTrial);
  CHECK(code_of([&] { mgr.submit_response(id, 0, Choice::North, 6000); }) == ErrorCode::RtOutOfRange);
  CHECK(code_of([&] { mgr.submit_response(id, 0, Choice::North, -1); }) == ErrorCode::RtOutOfRange);
  CHECK(code_of([&] { mgr.submit_response(id, 0, Choice::North, std::nan("")); }) == ErrorCode::RtOutOfRange);
  const SubmitAck ack = mgr.submit_response(id, t->trial_index, Choice::North, 500);
  CHECK(ack.session_id == id);
  CHECK(ack.trial_index == 0);
  CHECK(code_of([&] { mgr.submit_response(id, 0, Choice::South, 500); }) == ErrorCode::DuplicateSubmission);
  mgr.submit_response(id, mgr.next_trial(id)->trial_index, Choice::South, 500);
  CHECK_FALSE(mgr.next_trial(id).has_value());
  CHECK(code_of([&] { mgr.submit_response(id, 2, Choice::South, 500); }) == ErrorCode::SessionComplete);
  // A completed session frees the subject for a new one.
  CHECK_NOTHROW(mgr.create_session("alice", DesignKind::PlainRace, 2));
}

TEST_CASE("exports: empty, then every record with correctness against the labels") {
  const DatasetManifest m = small_manifest();
  SessionConfig cfg;
  cfg.plain_trials = 30;
  SessionManager mgr(m, cfg);
  const auto id = mgr.create_session("alice", DesignKind::PlainRace, 4).session_id;
  CHECK(mgr.export_session(id).empty());
  std::mt19937_64 rng(5);
  run_session(mgr, id, rng, 0.2);
  const auto records = mgr.export_session(id);
  std::size_t timeouts = 0;
  for (const auto& r : records) {
    CHECK(r.subject_id == "alice");
    if (r.answered()) {
      CHECK(*r.correct == (r.choice == truth(m, r.face_id)));
    } else {
      ++timeouts;
      CHECK_FALSE(r.correct.has_value());
    }
  }
  CHECK(records.size() == 30 + timeouts);
  const auto back = parse_jsonl(to_jsonl(records));
  CHECK(back == records);
  const auto a = per_face_accuracy(records), b = per_face_accuracy(back);
  CHECK(a.faces.size() == 30);
  for (const auto& [face, acc] : a.faces) CHECK(b.faces.at(face).accuracy == acc.accuracy);
}

TEST_CASE("every (face, condition) is answered exactly once under random timeouts") {
  const DatasetManifest m = small_manifest();
  SessionConfig cfg;
  cfg.occlusion = small_design(m);
  cfg.plain_trials = 50;
  SessionManager mgr(m, cfg);
  std::mt19937_64 rng(6);
  for (int s = 0; s < 30; ++s) {
    const DesignKind kind = s % 2 ? DesignKind::Occlusion : DesignKind::PlainRace;
    const auto id = mgr.create_session("p" + std::to_string(s), kind, static_cast<std::uint64_t>(s)).session_id;
    run_session(mgr, id, rng, 0.3);
    std::map<std::pair<std::string, Condition>, int> answered;
    for (const auto& r : mgr.export_session(id)) {
      if (r.answered()) ++answered[{r.face_id, r.condition}];
    }
    CHECK(answered.size() == (kind == DesignKind::Occlusion ? 20u : 50u));
    for (const auto& [key, n] : answered) CHECK(n == 1);
  }
}

TEST_CASE("persistence: a restarted manager replays the logs and drops a torn line") {
  const DatasetManifest m = small_manifest();
  fixtures::TempDir dir("sessions");
  SessionConfig cfg;
  cfg.plain_trials = 25;
  cfg.occlusion = small_design(m);
  cfg.storage = dir.path();
  std::string plain, occ;
  std::optional<TrialDescriptor> pending_plain, pending_occ;
  std::vector<ResponseRecord> before;
  {
    SessionManager mgr(m, cfg);
    plain = mgr.create_session("alice", DesignKind::PlainRace, 11).session_id;
    occ = mgr.create_session("bob", DesignKind::Occlusion, 12).session_id;
    std::mt19937_64 rng(7);
    std::bernoulli_distribution timeout(0.3);
    for (int i = 0; i < 12; ++i) {
      for (const auto& id : {plain, occ}) {
        const auto t = mgr.next_trial(id);
        mgr.submit_response(id, t->trial_index, timeout(rng) ? Choice::Timeout : Choice::North, 650.0, 1000 + i);
      }
    }
    pending_plain = mgr.next_trial(plain);
    pending_occ = mgr.next_trial(occ);
    before = mgr.export_session(plain);
  }
  std::ofstream(dir / (plain + ".jsonl"), std::ios::app) << R"({"session_id":"ses-0000)";
  SessionManager again(m, cfg);
  CHECK(again.session_ids().size() == 2);
  CHECK(again.export_session(plain) == before);
  const auto p = again.next_trial(plain);
  CHECK(p->trial_index == pending_plain->trial_index);
  CHECK(p->face_id == pending_plain->face_id);
  const auto o = again.next_trial(occ);
  CHECK(o->face_id == pending_occ->face_id);
  CHECK(o->condition == pending_occ->condition);
  CHECK(again.snapshot(occ).block_order == block_permutation(0));
  // Counters survive: the next occlusion session takes permutation 1.
  CHECK(again.create_session("carol", DesignKind::Occlusion, 1).permutation_index == 1);
  CHECK(code_of([&] { again.create_session("alice", DesignKind::PlainRace, 3); }) ==
        ErrorCode::DuplicateActiveSession);
}
