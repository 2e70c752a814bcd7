#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cfk/dataset.hpp"
#include "cfk/image.hpp"
#include "cfk/landmarks.hpp"
#include "cfk/responses.hpp"
#include "cfk/rng.hpp"

namespace cfk {

/// Generative face model for desk-scale checks. Class 0 (North) faces are the
/// canonical template plus iid Gaussian landmark noise; class 1 (South) faces
/// additionally stretch the chosen part horizontally about its center so that
/// its outermost landmarks move `effect * noise_sd / 2` each way (the part's
/// width grows by `effect * noise_sd`). Each face is then posed by a random
/// similarity transform and rendered as a smooth intensity field over its
/// landmark hull.
struct SyntheticOptions {
  std::size_t n_per_class = 50;
  double effect = 0.0;  // in landmark-noise SDs
  std::uint64_t seed = 1;
  double noise_sd = 2.0;  // px, in the canonical frame
  FacePart shifted_part = FacePart::Mouth;
  bool render_images = true;
  int canvas_width = 360;
  int canvas_height = 440;
  double max_rotation_deg = 8.0;
  double min_scale = 0.8;
  double max_scale = 1.25;
};

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<GrayImage> images;  // parallel to manifest.faces (empty when not rendered)
};

SyntheticDataset generate_synthetic(const SyntheticOptions& options);

/// Landmarks of one face in the canonical frame before posing.
LandmarkSet synthetic_shape(int cls, const SyntheticOptions& options, Rng& rng);

/// Writes <dir>/manifest.json and <dir>/images/<face_id>.png.
void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

/// Simulated race-classification subjects. Each face gets a latent accuracy
/// p_i; each subject answers every face correctly with probability p_i.
struct ResponseSimulation {
  std::size_t n_subjects = 20;
  double mean_accuracy = 0.64;
  double accuracy_sd = 0.15;
  double timeout_rate = 0.02;
  std::uint64_t seed = 1;
};

struct SimulatedResponses {
  std::vector<ResponseRecord> records;
  std::map<std::string, double> true_accuracy;
};

SimulatedResponses simulate_responses(const DatasetManifest& manifest, const ResponseSimulation& options);

}  // namespace cfk
