#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfk/cross_validation.hpp"
#include "cfk/features.hpp"

namespace cfk {

/// A final model fitted on all faces plus the cross-validation summary that
/// justified it.
struct TrainedModel {
  FeatureFamily family = FeatureFamily::S;
  std::string target;  // "race", "gender", "age", ...
  FoldModel model;
  int cv_k = 0;
  int cv_repeats = 0;
  std::uint64_t cv_seed = 0;
  double cv_mean = 0.0;
  double cv_std = 0.0;
  std::size_t n_faces = 0;
};

/// Binary, little-endian: "CFKL", u32 version (1), then family, task, target,
/// PCA basis, LDA or lasso parameters, and CV provenance. Doubles are stored
/// bit-exactly, so write(read(x)) reproduces the same bytes.
std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);
void write_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel read_model(const std::filesystem::path& path);

/// Serialized bytes of a bare fold model (used to compare fits bit-for-bit).
std::vector<std::uint8_t> serialize_fold_model(const FoldModel& model);

}  // namespace cfk
