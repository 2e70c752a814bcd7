#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfk/image.hpp"
#include "cfk/landmarks.hpp"

namespace cfk {

enum class Race { North, South, Other, Unknown };
enum class Gender { Male, Female, Unknown };
enum class SetTag { Set1, Set2, Synthetic };

std::string_view to_string(Race r) noexcept;
std::string_view to_string(Gender g) noexcept;
std::string_view to_string(SetTag s) noexcept;
Race parse_race(std::string_view s);
Gender parse_gender(std::string_view s);
SetTag parse_set_tag(std::string_view s);

struct AttributeLabels {
  Race race = Race::Unknown;
  Gender gender = Gender::Unknown;
  std::optional<double> age;     // years
  std::optional<double> height;  // cm
  std::optional<double> weight;  // kg

  bool operator==(const AttributeLabels&) const = default;
};

struct FaceRecord {
  std::string face_id;
  std::filesystem::path image_path;  // relative paths resolve against the manifest directory
  LandmarkSet landmarks;
  AttributeLabels labels;
  SetTag set_tag = SetTag::Set1;

  bool operator==(const FaceRecord&) const = default;
};

struct LabelCounts {
  std::map<Race, std::size_t> race;
  std::map<Gender, std::size_t> gender;
  std::size_t with_age = 0;
  std::size_t with_height = 0;
  std::size_t with_weight = 0;
  std::size_t total = 0;
};

struct DatasetManifest {
  std::vector<FaceRecord> faces;
  std::string reference_face_id;
  PartIndexMap part_index_map = PartIndexMap::defaults();
  std::vector<std::size_t> delaunay_subset = default_delaunay_subset();
  std::filesystem::path root;  // directory of the manifest file; not serialized

  const FaceRecord& face(std::string_view face_id) const;
  std::optional<std::size_t> index_of(std::string_view face_id) const;
  const FaceRecord& reference_face() const { return face(reference_face_id); }
  std::filesystem::path resolve_image(const FaceRecord& f) const;
  GrayImage load_image(const FaceRecord& f) const;
  LabelCounts counts() const;

  /// Throws SchemaViolation / DuplicateFaceId on broken invariants.
  void validate() const;

  bool operator==(const DatasetManifest& other) const {
    return faces == other.faces && reference_face_id == other.reference_face_id &&
           part_index_map == other.part_index_map && delaunay_subset == other.delaunay_subset;
  }
};

struct LoadOptions {
  bool check_images = true;  // MissingFile unless every image exists
};

/// Manifest JSON:
///   { "version": 1, "reference_face_id": "...", "part_index_map": {...}?,
///     "delaunay_subset_indices": [...]?,
///     "faces": [ { "face_id", "image_path", "set": "Set1|Set2|Synthetic",
///                  "labels": {"race","gender","age"?,"height"?,"weight"?},
///                  "landmarks": [[x,y] x76] | "landmarks_csv": "file.csv" } ] }
DatasetManifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});
DatasetManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& root,
                               const LoadOptions& options = {});
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Landmark CSV: 76 rows of "x,y", optional header line.
LandmarkSet read_landmark_csv(const std::filesystem::path& path);
void write_landmark_csv(const LandmarkSet& landmarks, const std::filesystem::path& path);

/// Preset for a CNSIFD-style directory: <root>/labels.csv with columns
/// face_id,image,race,gender,age,height,weight,set (empty cells = absent) and
/// per-face landmark CSVs at <root>/landmarks/<face_id>.csv. The first face
/// becomes the equalization reference unless <root>/reference.txt names one.
DatasetManifest load_cnsifd(const std::filesystem::path& root, const LoadOptions& options = {});

struct FoldAssignment {
  std::map<std::string, int> fold_of_face;
  int k = 0;
  std::uint64_t seed = 0;
};

/// Stratified k-fold assignment over positional labels (any small integer
/// class ids). Per-fold class counts are floor or ceil of n_class / k and
/// fold sizes differ by at most one. Throws TooFewFaces when a class has
/// fewer than k members.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

/// Unstratified k-fold assignment (regression targets).
std::vector<int> random_folds(std::size_t n, int k, std::uint64_t seed);

FoldAssignment make_folds(const DatasetManifest& manifest, const std::map<std::string, int>& labels, int k,
                          std::uint64_t seed);

/// Race task labels: North=0, South=1; Other/Unknown faces are omitted.
std::map<std::string, int> race_labels(const DatasetManifest& manifest);
/// Gender task labels: Male=0, Female=1.
std::map<std::string, int> gender_labels(const DatasetManifest& manifest);

}  // namespace cfk
