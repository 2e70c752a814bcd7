#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>

#include "cfk/dataset.hpp"
#include "cfk/error.hpp"
#include "cfk/synthetic.hpp"
#include "fixtures.hpp"

using namespace cfk;
using nlohmann::json;

namespace {

json landmarks_json(const LandmarkSet& lm) {
  json a = json::array();
  for (const auto& p : lm.points) a.push_back({p.x, p.y});
  return a;
}

json face_json(const std::string& id, const std::string& race, const std::string& gender) {
  return {{"face_id", id},
          {"image_path", "images/" + id + ".png"},
          {"set", "Set1"},
          {"labels", {{"race", race}, {"gender", gender}}},
          {"landmarks", landmarks_json(canonical_template())}};
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

}  // namespace

TEST_CASE("manifest with the full dataset's composition loads with its label counts") {
  // 970 male / 677 female; 776 North, 761 South, 110 Other.
  json doc;
  doc["faces"] = json::array();
  for (int i = 0; i < 1647; ++i) {
    const std::string race = i < 776 ? "North" : (i < 1537 ? "South" : "Other");
    doc["faces"].push_back(face_json("f" + std::to_string(i), race, i % 1647 < 970 ? "Male" : "Female"));
  }
  const DatasetManifest m = parse_manifest(doc, ".", LoadOptions{false});
  const LabelCounts c = m.counts();
  CHECK(c.total == 1647);
  CHECK(c.gender.at(Gender::Male) == 970);
  CHECK(c.gender.at(Gender::Female) == 677);
  CHECK(c.race.at(Race::North) == 776);
  CHECK(c.race.at(Race::South) == 761);
  CHECK(c.race.at(Race::Other) == 110);
  CHECK(race_labels(m).size() == 1537);
  CHECK(m.reference_face_id == "f0");
}

TEST_CASE("broken manifests are rejected") {
  json empty;
  empty["faces"] = json::array();
  CHECK(code_of([&] { parse_manifest(empty, ".", LoadOptions{false}); }) == ErrorCode::SchemaViolation);

  json dup;
  dup["faces"] = {face_json("a", "North", "Male"), face_json("a", "South", "Female")};
  CHECK(code_of([&] { parse_manifest(dup, ".", LoadOptions{false}); }) == ErrorCode::DuplicateFaceId);

  json missing;
  missing["faces"] = {face_json("a", "North", "Male")};
  CHECK(code_of([&] { parse_manifest(missing, "/nonexistent-dir", LoadOptions{true}); }) == ErrorCode::MissingFile);

  json short_lm;
  short_lm["faces"] = {face_json("a", "North", "Male")};
  short_lm["faces"][0]["landmarks"].erase(0);
  CHECK(code_of([&] { parse_manifest(short_lm, ".", LoadOptions{false}); }) == ErrorCode::SchemaViolation);
}

TEST_CASE("manifest save/load round trip is value-identical") {
  fixtures::TempDir dir("manifest");
  const DatasetManifest m = fixtures::write_synthetic_dataset(dir.path(), 6, 1.0, 3);
  save_manifest(m, dir / "copy.json");
  const DatasetManifest again = load_manifest(dir / "copy.json");
  CHECK(again == m);
  CHECK(again.faces.size() == 12);
  CHECK(again.faces[0].labels.age.has_value());
}

TEST_CASE("landmark CSV round trip, with and without header") {
  fixtures::TempDir dir("lmcsv");
  const LandmarkSet lm = canonical_template();
  write_landmark_csv(lm, dir / "a.csv");
  CHECK(read_landmark_csv(dir / "a.csv") == lm);

  std::ofstream out(dir / "b.csv");
  out.precision(17);
  out << "x,y\n";
  for (const auto& p : lm.points) out << p.x << ',' << p.y << '\n';
  out.close();
  const LandmarkSet b = read_landmark_csv(dir / "b.csv");
  for (std::size_t i = 0; i < kLandmarkCount; ++i) CHECK(distance(b[i], lm[i]) < 1e-9);
}

TEST_CASE("CNSIFD-style directory preset") {
  fixtures::TempDir dir("cnsifd");
  std::filesystem::create_directories(dir / "landmarks");
  std::filesystem::create_directories(dir / "images");
  std::ofstream labels(dir / "labels.csv");
  labels << "face_id,image,race,gender,age,height,weight,set\n";
  labels << "n1,n1.png,North,Male,24,170,,Set1\n";
  labels << "s1,s1.png,South,Female,,,55,Set2\n";
  labels.close();
  for (const char* id : {"n1", "s1"}) {
    write_landmark_csv(canonical_template(), dir / "landmarks" / (std::string(id) + ".csv"));
    write_png(GrayImage(8, 8, 100), dir / "images" / (std::string(id) + ".png"));
  }
  const DatasetManifest m = load_cnsifd(dir.path());
  REQUIRE(m.faces.size() == 2);
  CHECK(m.reference_face_id == "n1");
  CHECK(m.faces[0].labels.age == 24.0);
  CHECK_FALSE(m.faces[0].labels.weight.has_value());
  CHECK(m.faces[1].labels.weight == 55.0);
  CHECK(m.faces[1].set_tag == SetTag::Set2);
  CHECK(m.load_image(m.faces[1]).width == 8);
}

TEST_CASE("stratified folds: exact divisibility and determinism") {
  std::vector<int> labels(100);
  for (int i = 0; i < 100; ++i) labels[i] = i % 2;
  const auto folds = stratified_folds(labels, 10, 1);
  for (int f = 0; f < 10; ++f) {
    int c0 = 0, c1 = 0;
    for (int i = 0; i < 100; ++i) {
      if (folds[i] == f) (labels[i] == 0 ? c0 : c1)++;
    }
    CHECK(c0 == 5);
    CHECK(c1 == 5);
  }
  CHECK(stratified_folds(labels, 10, 1) == folds);
  CHECK(stratified_folds(labels, 10, 2) != folds);
}

TEST_CASE("1537 race-labelled faces split into folds of 153 or 154") {
  std::vector<int> labels(1537);
  for (int i = 0; i < 1537; ++i) labels[i] = i < 776 ? 0 : 1;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto folds = stratified_folds(labels, 10, seed);
    std::vector<int> size(10, 0);
    for (int f : folds) ++size[f];
    for (int s : size) CHECK((s == 153 || s == 154));
  }
}

TEST_CASE("stratified folds stay within one of proportional allocation for any k and seed") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 12);
    const int classes = 2 + static_cast<int>(rng() % 2);
    std::vector<int> labels;
    std::vector<int> class_size(classes);
    for (int c = 0; c < classes; ++c) {
      class_size[c] = k + static_cast<int>(rng() % 60);
      labels.insert(labels.end(), class_size[c], c);
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const auto folds = stratified_folds(labels, k, rng());
    std::vector<int> fold_size(k, 0);
    for (int f : folds) ++fold_size[f];
    CHECK(*std::max_element(fold_size.begin(), fold_size.end()) -
              *std::min_element(fold_size.begin(), fold_size.end()) <=
          1);
    for (int c = 0; c < classes; ++c) {
      const double proportional = static_cast<double>(class_size[c]) / k;
      for (int f = 0; f < k; ++f) {
        int n = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) n += labels[i] == c && folds[i] == f;
        CHECK(std::fabs(n - proportional) < 1.0);
      }
    }
  }
}

TEST_CASE("too few faces per class for k folds") {
  std::vector<int> labels = {0, 0, 0, 1, 1, 1, 1, 1, 1, 1};
  CHECK(code_of([&] { stratified_folds(labels, 4, 1); }) == ErrorCode::TooFewFaces);
}

TEST_CASE("make_folds keys folds by face id") {
  SyntheticOptions o;
  o.n_per_class = 20;
  o.render_images = false;
  const auto data = generate_synthetic(o);
  const auto labels = race_labels(data.manifest);
  const FoldAssignment a = make_folds(data.manifest, labels, 5, 9);
  CHECK(a.fold_of_face.size() == 40);
  CHECK(a.k == 5);
  CHECK(make_folds(data.manifest, labels, 5, 9).fold_of_face == a.fold_of_face);
}

TEST_CASE("synthetic generator is byte-identical for a fixed seed") {
  fixtures::TempDir a("syn-a"), b("syn-b");
  SyntheticOptions o;
  o.n_per_class = 5;
  o.effect = 2.0;
  o.seed = 11;
  write_synthetic(generate_synthetic(o), a.path());
  write_synthetic(generate_synthetic(o), b.path());
  const auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(read(a / "manifest.json") == read(b / "manifest.json"));
  CHECK(read(a / "images/syn00003.png") == read(b / "images/syn00003.png"));
}

TEST_CASE("synthetic mouth-width class difference equals the configured effect within 3 SE") {
  const PartIndexMap parts = PartIndexMap::defaults();
  const std::size_t left = parts.mouth[0], right = parts.mouth[6];
  for (double effect : {0.0, 1.5, 6.0}) {
    SyntheticOptions o;
    o.effect = effect;
    Rng rng(derive_seed(42, static_cast<std::uint64_t>(effect * 10)));
    std::array<std::vector<double>, 2> width;
    for (int i = 0; i < 1000; ++i) {
      for (int cls = 0; cls < 2; ++cls) {
        const LandmarkSet s = synthetic_shape(cls, o, rng);
        width[cls].push_back(distance(s[left], s[right]));
      }
    }
    double mean[2], var[2];
    for (int c = 0; c < 2; ++c) {
      mean[c] = std::accumulate(width[c].begin(), width[c].end(), 0.0) / 1000.0;
      var[c] = 0.0;
      for (double w : width[c]) var[c] += (w - mean[c]) * (w - mean[c]);
      var[c] /= 999.0;
    }
    const double se = std::sqrt(var[0] / 1000.0 + var[1] / 1000.0);
    CHECK(std::fabs((mean[1] - mean[0]) - effect * o.noise_sd) < 3.0 * se);
  }
}
