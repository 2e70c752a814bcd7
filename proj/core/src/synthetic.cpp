#include "cfk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cfk/error.hpp"
#include "cfk/preprocess.hpp"

namespace cfk {

namespace {

std::string synthetic_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "syn%05zu", i);
  return buf;
}

struct Blob {
  std::size_t landmark;
  double amplitude;
  double sigma;  // canonical-frame px
};

std::vector<Blob> default_blobs(const PartIndexMap& parts) {
  std::vector<Blob> blobs;
  for (const auto* eye : {&parts.left_eye, &parts.right_eye}) {
    for (std::size_t k = 0; k + 1 < eye->size(); ++k) blobs.push_back({(*eye)[k], -25.0, 3.0});
    blobs.push_back({eye->back(), -70.0, 5.0});
  }
  for (std::size_t i : parts.left_eyebrow) blobs.push_back({i, -50.0, 4.0});
  for (std::size_t i : parts.right_eyebrow) blobs.push_back({i, -50.0, 4.0});
  blobs.push_back({parts.nose[5], -45.0, 3.5});
  blobs.push_back({parts.nose[10], -45.0, 3.5});
  for (std::size_t k = 0; k < 12; ++k) blobs.push_back({parts.mouth[k], -35.0, 4.0});
  for (std::size_t k = 12; k < 18; ++k) blobs.push_back({parts.mouth[k], -50.0, 3.0});
  return blobs;
}

GrayImage render_face(const LandmarkSet& posed, double pose_scale, double skin_offset, const PartIndexMap& parts,
                      const SyntheticOptions& options, Rng& rng) {
  const int w = options.canvas_width, h = options.canvas_height;
  std::vector<double> field(static_cast<std::size_t>(w) * h, 30.0);
  const PixelMask mask = hull_mask(posed.points, w, h);
  const Point2 center = centroid(posed.points);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (mask.inside[i]) field[i] = 150.0 + skin_offset + 0.1 * (x - center.x) - 0.05 * (y - center.y);
    }
  }
  for (const Blob& b : default_blobs(parts)) {
    const Point2 c = posed[b.landmark];
    const double s = b.sigma * pose_scale;
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - 3 * s)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + 3 * s)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - 3 * s)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + 3 * s)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!mask.inside[i]) continue;
        const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
        field[i] += b.amplitude * std::exp(-0.5 * d2 / (s * s));
      }
    }
  }
  std::normal_distribution<double> pixel_noise(0.0, 2.0);
  GrayImage image(w, h);
  for (std::size_t i = 0; i < field.size(); ++i) {
    image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(field[i] + pixel_noise(rng)), 0L, 255L));
  }
  return image;
}

}  // namespace

LandmarkSet synthetic_shape(int cls, const SyntheticOptions& options, Rng& rng) {
  const PartIndexMap parts = PartIndexMap::defaults();
  LandmarkSet shape = canonical_template();
  if (cls == 1 && options.effect != 0.0) {
    const auto& idx = parts.part(options.shifted_part);
    const Point2 c = centroid(shape.select(idx));
    double half_width = 0.0;
    for (std::size_t i : idx) half_width = std::max(half_width, std::abs(shape[i].x - c.x));
    const double shift = 0.5 * options.effect * options.noise_sd;
    for (std::size_t i : idx) shape[i].x += shift * (shape[i].x - c.x) / half_width;
  }
  std::normal_distribution<double> noise(0.0, options.noise_sd);
  for (auto& p : shape.points) {
    p.x += noise(rng);
    p.y += noise(rng);
  }
  return shape;
}

SyntheticDataset generate_synthetic(const SyntheticOptions& options) {
  if (options.n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  if (!(options.noise_sd > 0.0) || !std::isfinite(options.effect)) {
    throw Error(ErrorCode::InvalidArgument, "noise_sd must be positive and effect finite");
  }
  Rng rng(options.seed);
  const PartIndexMap parts = PartIndexMap::defaults();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticDataset out;
  out.manifest.part_index_map = parts;
  out.manifest.delaunay_subset = default_delaunay_subset();
  const std::size_t n = 2 * options.n_per_class;
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 2);
    FaceRecord face;
    face.face_id = synthetic_id(i);
    face.image_path = "images/" + face.face_id + ".png";
    face.set_tag = SetTag::Synthetic;
    face.labels.race = cls == 0 ? Race::North : Race::South;
    face.labels.gender = unit(rng) < 0.5 ? Gender::Male : Gender::Female;

    LandmarkSet shape = synthetic_shape(cls, options, rng);
    // Latent build drives the contour width and the weight label.
    const double build = gauss(rng);
    for (std::size_t k : parts.contour) shape[k].x = 160.0 + (shape[k].x - 160.0) * (1.0 + 0.03 * build);
    face.labels.age = std::round(20.0 + 40.0 * unit(rng));
    face.labels.height = std::round(10.0 * (165.0 + 8.0 * gauss(rng))) / 10.0;
    face.labels.weight = std::round(10.0 * (65.0 + 8.0 * build + 4.0 * gauss(rng))) / 10.0;

    const double deg = options.max_rotation_deg * (2.0 * unit(rng) - 1.0);
    const double scale = options.min_scale + (options.max_scale - options.min_scale) * unit(rng);
    SimilarityTransform pose{deg * std::numbers::pi / 180.0, scale, 0.0, 0.0};
    const Point2 eye_mid = pose.apply(Point2{160.0, 140.0});
    pose.dx = 0.5 * options.canvas_width + 8.0 * (2.0 * unit(rng) - 1.0) - eye_mid.x;
    pose.dy = 0.36 * options.canvas_height + 8.0 * (2.0 * unit(rng) - 1.0) - eye_mid.y;
    face.landmarks = pose.apply(shape);
    const double skin = 10.0 * gauss(rng);

    if (options.render_images) {
      out.images.push_back(render_face(face.landmarks, scale, skin, parts, options, rng));
    }
    out.manifest.faces.push_back(std::move(face));
  }
  out.manifest.reference_face_id = out.manifest.faces.front().face_id;
  return out;
}

void write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    write_png(data.images[i], dir / data.manifest.faces[i].image_path);
  }
  save_manifest(data.manifest, dir / "manifest.json");
}

SimulatedResponses simulate_responses(const DatasetManifest& manifest, const ResponseSimulation& options) {
  Rng rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::lognormal_distribution<double> rt(std::log(1300.0), 0.35);

  SimulatedResponses out;
  std::vector<const FaceRecord*> faces;
  for (const auto& f : manifest.faces) {
    if (f.labels.race != Race::North && f.labels.race != Race::South) continue;
    faces.push_back(&f);
    out.true_accuracy[f.face_id] = std::clamp(options.mean_accuracy + options.accuracy_sd * gauss(rng), 0.02, 0.98);
  }

  for (std::size_t s = 0; s < options.n_subjects; ++s) {
    char subject[32];
    std::snprintf(subject, sizeof subject, "sub%03zu", s + 1);
    std::vector<const FaceRecord*> queue = faces;
    std::shuffle(queue.begin(), queue.end(), rng);
    std::size_t trial = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const FaceRecord& f = *queue[q];
      ResponseRecord r;
      r.session_id = std::string("sim-") + subject;
      r.subject_id = subject;
      r.face_id = f.face_id;
      r.trial_index = trial;
      r.presented_at = 1'700'000'000'000LL + static_cast<std::int64_t>(trial) * 7000;
      ++trial;
      if (unit(rng) < options.timeout_rate) {
        r.choice = Choice::Timeout;
        r.rt_ms = kStimulusTimeoutMs;
        queue.push_back(queue[q]);
      } else {
        const bool correct = unit(rng) < out.true_accuracy[f.face_id];
        const Choice truth = f.labels.race == Race::North ? Choice::North : Choice::South;
        r.choice = correct ? truth : (truth == Choice::North ? Choice::South : Choice::North);
        r.correct = correct;
        r.rt_ms = std::min(std::round(rt(rng)), kStimulusTimeoutMs - 1.0);
      }
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace cfk
