#include "cfk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cfk/error.hpp"
#include "cfk/rng.hpp"
#include "text_util.hpp"

namespace cfk {

using nlohmann::json;

std::string_view to_string(Race r) noexcept {
  switch (r) {
    case Race::North: return "North";
    case Race::South: return "South";
    case Race::Other: return "Other";
    case Race::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(Gender g) noexcept {
  switch (g) {
    case Gender::Male: return "Male";
    case Gender::Female: return "Female";
    case Gender::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::string_view to_string(SetTag s) noexcept {
  switch (s) {
    case SetTag::Set1: return "Set1";
    case SetTag::Set2: return "Set2";
    case SetTag::Synthetic: return "Synthetic";
  }
  return "Set1";
}

Race parse_race(std::string_view s) {
  if (s == "North") return Race::North;
  if (s == "South") return Race::South;
  if (s == "Other") return Race::Other;
  if (s == "Unknown" || s.empty()) return Race::Unknown;
  throw Error(ErrorCode::SchemaViolation, "unknown race '" + std::string(s) + "'");
}

Gender parse_gender(std::string_view s) {
  if (s == "Male") return Gender::Male;
  if (s == "Female") return Gender::Female;
  if (s == "Unknown" || s.empty()) return Gender::Unknown;
  throw Error(ErrorCode::SchemaViolation, "unknown gender '" + std::string(s) + "'");
}

SetTag parse_set_tag(std::string_view s) {
  if (s == "Set1") return SetTag::Set1;
  if (s == "Set2") return SetTag::Set2;
  if (s == "Synthetic") return SetTag::Synthetic;
  throw Error(ErrorCode::SchemaViolation, "unknown set tag '" + std::string(s) + "'");
}

const FaceRecord& DatasetManifest::face(std::string_view face_id) const {
  if (auto idx = index_of(face_id)) return faces[*idx];
  throw Error(ErrorCode::UnknownFaceId, "no face '" + std::string(face_id) + "' in manifest");
}

std::optional<std::size_t> DatasetManifest::index_of(std::string_view face_id) const {
  for (std::size_t i = 0; i < faces.size(); ++i) {
    if (faces[i].face_id == face_id) return i;
  }
  return std::nullopt;
}

std::filesystem::path DatasetManifest::resolve_image(const FaceRecord& f) const {
  return f.image_path.is_absolute() ? f.image_path : root / f.image_path;
}

GrayImage DatasetManifest::load_image(const FaceRecord& f) const { return read_image(resolve_image(f)); }

LabelCounts DatasetManifest::counts() const {
  LabelCounts c;
  for (const auto& f : faces) {
    ++c.race[f.labels.race];
    ++c.gender[f.labels.gender];
    c.with_age += f.labels.age.has_value();
    c.with_height += f.labels.height.has_value();
    c.with_weight += f.labels.weight.has_value();
  }
  c.total = faces.size();
  return c;
}

void DatasetManifest::validate() const {
  if (faces.empty()) throw Error(ErrorCode::SchemaViolation, "faces: manifest has no faces");
  std::set<std::string> ids;
  for (const auto& f : faces) {
    if (f.face_id.empty()) throw Error(ErrorCode::SchemaViolation, "faces[].face_id: empty id");
    if (!ids.insert(f.face_id).second) throw Error(ErrorCode::DuplicateFaceId, "face_id '" + f.face_id + "' repeated");
  }
  if (!ids.count(reference_face_id)) {
    throw Error(ErrorCode::SchemaViolation,
                "reference_face_id: '" + reference_face_id + "' does not name a face in the manifest");
  }
  part_index_map.validate();
  std::set<std::size_t> subset(delaunay_subset.begin(), delaunay_subset.end());
  if (delaunay_subset.size() != 26 || subset.size() != 26 || *subset.rbegin() >= kLandmarkCount) {
    throw Error(ErrorCode::SchemaViolation, "delaunay_subset_indices: need 26 distinct landmark indices < 76");
  }
}

namespace {

std::string at_face(std::size_t i, const char* field) {
  return "faces[" + std::to_string(i) + "]." + field;
}

std::optional<double> optional_nonnegative(const json& labels, const char* key, std::size_t i) {
  if (!labels.contains(key) || labels[key].is_null()) return std::nullopt;
  if (!labels[key].is_number()) {
    throw Error(ErrorCode::SchemaViolation, at_face(i, "labels.") + key + ": expected a number");
  }
  const double v = labels[key].get<double>();
  if (!std::isfinite(v) || v < 0.0) {
    throw Error(ErrorCode::SchemaViolation, at_face(i, "labels.") + key + ": must be a nonnegative number");
  }
  return v;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw Error(ErrorCode::SchemaViolation, where + key + ": missing or not a string");
  }
  return obj[key].get<std::string>();
}

LandmarkSet parse_inline_landmarks(const json& arr, std::size_t i) {
  if (!arr.is_array()) throw Error(ErrorCode::SchemaViolation, at_face(i, "landmarks") + ": expected array");
  std::vector<Point2> pts;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorCode::SchemaViolation, at_face(i, "landmarks") + ": each entry must be [x, y]");
    }
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  try {
    return LandmarkSet::from_points(pts);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, at_face(i, "landmarks") + ": " + e.what());
  }
}

}  // namespace

LandmarkSet read_landmark_csv(const std::filesystem::path& path) {
  std::vector<Point2> pts;
  const auto lines = detail::read_lines(path);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto cells = detail::split_csv(lines[li]);
    std::optional<double> x, y;
    if (cells.size() == 2) {
      x = detail::parse_double(cells[0]);
      y = detail::parse_double(cells[1]);
    }
    if (!x || !y) {
      if (li == 0) continue;  // header
      throw Error(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(li + 1) + ": expected 'x,y'");
    }
    pts.push_back({*x, *y});
  }
  try {
    return LandmarkSet::from_points(pts);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

void write_landmark_csv(const LandmarkSet& landmarks, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y\n";
  for (const auto& p : landmarks.points) out << p.x << ',' << p.y << '\n';
  detail::write_text(path, out.str());
}

DatasetManifest parse_manifest(const json& doc, const std::filesystem::path& root, const LoadOptions& options) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "manifest: expected a JSON object");
  if (!doc.contains("faces") || !doc["faces"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "faces: missing or not an array");
  }
  DatasetManifest m;
  m.root = root;
  if (doc.contains("part_index_map")) {
    try {
      m.part_index_map = doc["part_index_map"].get<PartIndexMap>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, std::string("part_index_map: ") + e.what());
    }
  }
  if (doc.contains("delaunay_subset_indices")) {
    try {
      m.delaunay_subset = doc["delaunay_subset_indices"].get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, std::string("delaunay_subset_indices: ") + e.what());
    }
  }

  const auto& faces = doc["faces"];
  if (faces.empty()) throw Error(ErrorCode::SchemaViolation, "faces: manifest has no faces");
  m.faces.reserve(faces.size());
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const json& jf = faces[i];
    const std::string where = "faces[" + std::to_string(i) + "].";
    if (!jf.is_object()) throw Error(ErrorCode::SchemaViolation, where + ": expected object");
    FaceRecord f;
    f.face_id = require_string(jf, "face_id", where);
    f.image_path = require_string(jf, "image_path", where);
    f.set_tag = jf.contains("set") ? parse_set_tag(require_string(jf, "set", where)) : SetTag::Set1;
    if (jf.contains("landmarks")) {
      f.landmarks = parse_inline_landmarks(jf["landmarks"], i);
    } else if (jf.contains("landmarks_csv")) {
      const std::filesystem::path csv = require_string(jf, "landmarks_csv", where);
      f.landmarks = read_landmark_csv(csv.is_absolute() ? csv : root / csv);
    } else {
      throw Error(ErrorCode::SchemaViolation, where + "landmarks: missing (inline or landmarks_csv)");
    }
    if (jf.contains("labels")) {
      const json& jl = jf["labels"];
      if (!jl.is_object()) throw Error(ErrorCode::SchemaViolation, where + "labels: expected object");
      try {
        if (jl.contains("race")) f.labels.race = parse_race(jl["race"].get<std::string>());
        if (jl.contains("gender")) f.labels.gender = parse_gender(jl["gender"].get<std::string>());
      } catch (const json::exception&) {
        throw Error(ErrorCode::SchemaViolation, where + "labels: race/gender must be strings");
      } catch (const Error& e) {
        throw Error(ErrorCode::SchemaViolation, where + "labels: " + e.what());
      }
      f.labels.age = optional_nonnegative(jl, "age", i);
      f.labels.height = optional_nonnegative(jl, "height", i);
      f.labels.weight = optional_nonnegative(jl, "weight", i);
    }
    m.faces.push_back(std::move(f));
  }
  m.reference_face_id = doc.value("reference_face_id", m.faces.front().face_id);
  m.validate();

  if (options.check_images) {
    for (const auto& f : m.faces) {
      if (!std::filesystem::exists(m.resolve_image(f))) {
        throw Error(ErrorCode::MissingFile, "image for face '" + f.face_id + "' not found: " + m.resolve_image(f).string());
      }
    }
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, "manifest not found: " + path.string());
  json doc;
  try {
    doc = json::parse(detail::read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("manifest is not valid JSON: ") + e.what());
  }
  return parse_manifest(doc, path.parent_path(), options);
}

json manifest_to_json(const DatasetManifest& m) {
  json faces = json::array();
  for (const auto& f : m.faces) {
    json labels{{"race", to_string(f.labels.race)}, {"gender", to_string(f.labels.gender)}};
    if (f.labels.age) labels["age"] = *f.labels.age;
    if (f.labels.height) labels["height"] = *f.labels.height;
    if (f.labels.weight) labels["weight"] = *f.labels.weight;
    json lm = json::array();
    for (const auto& p : f.landmarks.points) lm.push_back({p.x, p.y});
    faces.push_back({{"face_id", f.face_id},
                     {"image_path", f.image_path.generic_string()},
                     {"set", to_string(f.set_tag)},
                     {"labels", labels},
                     {"landmarks", lm}});
  }
  return json{{"version", 1},
              {"reference_face_id", m.reference_face_id},
              {"part_index_map", m.part_index_map},
              {"delaunay_subset_indices", m.delaunay_subset},
              {"faces", faces}};
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  detail::write_text(path, manifest_to_json(manifest).dump(1) + "\n");
}

DatasetManifest load_cnsifd(const std::filesystem::path& root, const LoadOptions& options) {
  const auto lines = detail::read_lines(root / "labels.csv");
  if (lines.size() < 2) throw Error(ErrorCode::SchemaViolation, "labels.csv: no face rows");
  const auto header = detail::split_csv(lines[0]);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("face_id");
  const auto image_col = column("image");
  if (!id_col || !image_col) throw Error(ErrorCode::SchemaViolation, "labels.csv: need face_id and image columns");

  json doc;
  json faces = json::array();
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = detail::split_csv(lines[li]);
    auto cell = [&](std::string_view name) -> std::string {
      const auto c = column(name);
      return (c && *c < cells.size()) ? cells[*c] : std::string{};
    };
    json labels{{"race", cell("race").empty() ? "Unknown" : cell("race")},
                {"gender", cell("gender").empty() ? "Unknown" : cell("gender")}};
    for (const char* key : {"age", "height", "weight"}) {
      if (auto v = detail::parse_double(cell(key))) labels[key] = *v;
    }
    const std::string id = cell("face_id");
    faces.push_back({{"face_id", id},
                     {"image_path", std::string("images/") + cell("image")},
                     {"set", cell("set").empty() ? "Set1" : cell("set")},
                     {"labels", labels},
                     {"landmarks_csv", "landmarks/" + id + ".csv"}});
  }
  doc["faces"] = faces;
  if (std::filesystem::exists(root / "reference.txt")) {
    doc["reference_face_id"] = std::string(detail::trim(detail::read_text(root / "reference.txt")));
  }
  return parse_manifest(doc, root, options);
}

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "fold count must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [cls, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::TooFewFaces, "class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                              " faces, fewer than k=" + std::to_string(k));
    }
  }
  Rng rng(seed);
  std::vector<int> fold_label(static_cast<std::size_t>(k));
  std::iota(fold_label.begin(), fold_label.end(), 0);
  std::shuffle(fold_label.begin(), fold_label.end(), rng);

  std::vector<int> fold(labels.size(), -1);
  std::size_t position = 0;
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) fold[idx] = fold_label[position++ % static_cast<std::size_t>(k)];
  }
  return fold;
}

std::vector<int> random_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "fold count must be >= 2");
  if (n < static_cast<std::size_t>(k)) throw Error(ErrorCode::TooFewFaces, "fewer samples than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return fold;
}

FoldAssignment make_folds(const DatasetManifest& manifest, const std::map<std::string, int>& labels, int k,
                          std::uint64_t seed) {
  std::vector<std::string> ids;
  std::vector<int> y;
  for (const auto& f : manifest.faces) {
    auto it = labels.find(f.face_id);
    if (it == labels.end()) continue;
    ids.push_back(f.face_id);
    y.push_back(it->second);
  }
  for (const auto& [id, _] : labels) {
    if (!manifest.index_of(id)) throw Error(ErrorCode::UnknownFaceId, "label for unknown face '" + id + "'");
  }
  const auto folds = stratified_folds(y, k, seed);
  FoldAssignment out{{}, k, seed};
  for (std::size_t i = 0; i < ids.size(); ++i) out.fold_of_face[ids[i]] = folds[i];
  return out;
}

std::map<std::string, int> race_labels(const DatasetManifest& manifest) {
  std::map<std::string, int> out;
  for (const auto& f : manifest.faces) {
    if (f.labels.race == Race::North) out[f.face_id] = 0;
    if (f.labels.race == Race::South) out[f.face_id] = 1;
  }
  return out;
}

std::map<std::string, int> gender_labels(const DatasetManifest& manifest) {
  std::map<std::string, int> out;
  for (const auto& f : manifest.faces) {
    if (f.labels.gender == Gender::Male) out[f.face_id] = 0;
    if (f.labels.gender == Gender::Female) out[f.face_id] = 1;
  }
  return out;
}

}  // namespace cfk
