#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "cfk/dataset.hpp"
#include "cfk/image.hpp"
#include "cfk/preprocess.hpp"
#include "cfk/synthetic.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cfk-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline cfk::GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  cfk::GrayImage img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

/// Synthetic dataset written to disk, with its manifest reloaded from there.
inline cfk::DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, std::size_t n_per_class,
                                                    double effect, std::uint64_t seed) {
  cfk::SyntheticOptions o;
  o.n_per_class = n_per_class;
  o.effect = effect;
  o.seed = seed;
  cfk::write_synthetic(cfk::generate_synthetic(o), dir);
  return cfk::load_manifest(dir / "manifest.json");
}

/// Normalized faces of an in-memory synthetic dataset.
inline std::vector<cfk::NormalizedFace> normalized_synthetic(const cfk::SyntheticDataset& data) {
  std::vector<cfk::NormalizedFace> out;
  for (std::size_t i = 0; i < data.manifest.faces.size(); ++i) {
    out.push_back(cfk::normalize_geometry(data.manifest.faces[i], data.images[i], data.manifest.part_index_map));
  }
  return out;
}

}  // namespace fixtures
