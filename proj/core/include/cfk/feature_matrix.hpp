#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfk/dataset.hpp"
#include "cfk/features.hpp"

namespace cfk {

/// Faces x features table. Row r belongs to face_ids[r].
struct FeatureMatrix {
  FeatureFamily family = FeatureFamily::S;
  std::vector<std::string> face_ids;
  std::vector<std::string> names;  // optional column names (CSV header)
  Eigen::MatrixXd values;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
  std::optional<std::size_t> row_of(const std::string& face_id) const;

  /// Rows for the given ids, in that order. Throws UnknownFaceId.
  FeatureMatrix select(const std::vector<std::string>& ids) const;
};

/// Extracts one family for a list of normalized faces (parallel over faces;
/// rows keep the input order). Throws NonFinite if any value is not finite.
FeatureMatrix extract_matrix(FeatureFamily family, const std::vector<NormalizedFace>& faces,
                             const std::vector<std::string>& face_ids, const ExtractionContext& ctx, int jobs = 1);

/// Column-wise concatenation of matrices over the same faces (same order).
FeatureMatrix concat_columns(const std::vector<FeatureMatrix>& parts, FeatureFamily family);

/// Binary format, little-endian: "CFKM", u32 version (1), u32 family tag,
/// u64 rows, u64 cols, rows x (u32 length + UTF-8 face_id), then row-major
/// f64 values.
void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

/// CSV with header "face_id,<names...>" (generic names when none are set);
/// values printed with 17 significant digits.
void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path);

struct IngestResult {
  FeatureMatrix matrix;
  std::vector<std::string> missing;   // manifest faces without a vector
  std::vector<std::string> warnings;
};

/// Reads precomputed CNN vectors from CSV ("face_id,v0,v1,..."; optional
/// header whose first cell is "face_id") or a CFKM file. Every row must have
/// the family's dimension (DimMismatch otherwise). With a manifest, ids not
/// in it raise UnknownFaceId, rows follow manifest order, and absent faces are
/// listed in `missing`. An empty file yields an empty matrix and a warning.
IngestResult ingest_cnn_features(const std::filesystem::path& path, FeatureFamily family,
                                 const DatasetManifest* manifest = nullptr);

}  // namespace cfk
