#include "cfk/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "cfk/error.hpp"

namespace cfk {

namespace {

std::vector<std::size_t> range(std::size_t first, std::size_t count) {
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

// Default layout offsets.
constexpr std::size_t kContour = 0;        // 15
constexpr std::size_t kLeftBrow = 15;      // 6
constexpr std::size_t kRightBrow = 21;     // 6
constexpr std::size_t kLeftEye = 27;       // 9
constexpr std::size_t kRightEye = 36;      // 9
constexpr std::size_t kNose = 45;          // 12
constexpr std::size_t kMouth = 57;         // 18
constexpr std::size_t kForehead = 75;      // 1, unreferenced by parts

constexpr double kMidX = 160.0;

}  // namespace

LandmarkSet LandmarkSet::from_points(std::span<const Point2> points) {
  if (points.size() != kLandmarkCount) {
    throw Error(ErrorCode::SchemaViolation,
                "expected 76 landmarks, got " + std::to_string(points.size()));
  }
  LandmarkSet set;
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      throw Error(ErrorCode::SchemaViolation, "landmark " + std::to_string(i) + " is not finite");
    }
    set.points[i] = points[i];
  }
  return set;
}

std::vector<Point2> LandmarkSet::select(std::span<const std::size_t> indices) const {
  std::vector<Point2> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points.at(i));
  return out;
}

std::string_view to_string(FacePart part) noexcept {
  switch (part) {
    case FacePart::LeftEye: return "left_eye";
    case FacePart::RightEye: return "right_eye";
    case FacePart::Nose: return "nose";
    case FacePart::Mouth: return "mouth";
    case FacePart::Contour: return "contour";
    case FacePart::LeftEyebrow: return "left_eyebrow";
    case FacePart::RightEyebrow: return "right_eyebrow";
  }
  return "unknown";
}

PartIndexMap PartIndexMap::defaults() {
  PartIndexMap m;
  m.contour = range(kContour, 15);
  m.left_eyebrow = range(kLeftBrow, 6);
  m.right_eyebrow = range(kRightBrow, 6);
  m.left_eye = range(kLeftEye, 9);
  m.right_eye = range(kRightEye, 9);
  m.nose = range(kNose, 12);
  m.mouth = range(kMouth, 18);
  m.left_contour = range(kContour, 5);
  m.chin = range(kContour + 5, 5);
  m.right_contour = range(kContour + 10, 5);
  return m;
}

const std::vector<std::size_t>& PartIndexMap::part(FacePart p) const {
  switch (p) {
    case FacePart::LeftEye: return left_eye;
    case FacePart::RightEye: return right_eye;
    case FacePart::Nose: return nose;
    case FacePart::Mouth: return mouth;
    case FacePart::Contour: return contour;
    case FacePart::LeftEyebrow: return left_eyebrow;
    case FacePart::RightEyebrow: return right_eyebrow;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown face part");
}

void PartIndexMap::validate() const {
  auto check_size = [](const std::vector<std::size_t>& v, std::size_t n, const char* name) {
    if (v.size() != n) {
      throw Error(ErrorCode::SchemaViolation, std::string("part '") + name + "' must have " + std::to_string(n) +
                                                  " landmarks, has " + std::to_string(v.size()));
    }
  };
  check_size(left_eye, 9, "left_eye");
  check_size(right_eye, 9, "right_eye");
  check_size(nose, 12, "nose");
  check_size(mouth, 18, "mouth");
  check_size(contour, 15, "contour");
  if (left_eyebrow.empty() || right_eyebrow.empty()) {
    throw Error(ErrorCode::SchemaViolation, "eyebrow parts must be non-empty");
  }

  std::set<std::size_t> seen;
  for (FacePart p : {FacePart::LeftEye, FacePart::RightEye, FacePart::Nose, FacePart::Mouth, FacePart::Contour,
                     FacePart::LeftEyebrow, FacePart::RightEyebrow}) {
    for (std::size_t i : part(p)) {
      if (i >= kLandmarkCount) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string("part '") + std::string(to_string(p)) + "' references landmark " + std::to_string(i));
      }
      if (!seen.insert(i).second) {
        throw Error(ErrorCode::SchemaViolation, "landmark " + std::to_string(i) + " assigned to more than one part");
      }
    }
  }

  std::vector<std::size_t> split;
  split.insert(split.end(), left_contour.begin(), left_contour.end());
  split.insert(split.end(), chin.begin(), chin.end());
  split.insert(split.end(), right_contour.begin(), right_contour.end());
  std::vector<std::size_t> a = split, b = contour;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b || left_contour.empty() || chin.empty() || right_contour.empty()) {
    throw Error(ErrorCode::SchemaViolation, "left_contour/chin/right_contour must partition the contour");
  }
}

void to_json(nlohmann::json& j, const PartIndexMap& m) {
  j = nlohmann::json{{"left_eye", m.left_eye},           {"right_eye", m.right_eye},
                     {"nose", m.nose},                   {"mouth", m.mouth},
                     {"contour", m.contour},             {"left_eyebrow", m.left_eyebrow},
                     {"right_eyebrow", m.right_eyebrow}, {"left_contour", m.left_contour},
                     {"chin", m.chin},                   {"right_contour", m.right_contour}};
}

void from_json(const nlohmann::json& j, PartIndexMap& m) {
  j.at("left_eye").get_to(m.left_eye);
  j.at("right_eye").get_to(m.right_eye);
  j.at("nose").get_to(m.nose);
  j.at("mouth").get_to(m.mouth);
  j.at("contour").get_to(m.contour);
  j.at("left_eyebrow").get_to(m.left_eyebrow);
  j.at("right_eyebrow").get_to(m.right_eyebrow);
  j.at("left_contour").get_to(m.left_contour);
  j.at("chin").get_to(m.chin);
  j.at("right_contour").get_to(m.right_contour);
}

std::vector<std::size_t> default_delaunay_subset() {
  return {
      kLeftBrow + 0,  kLeftBrow + 5,  kRightBrow + 5, kRightBrow + 0,                              // eyebrow ends
      kLeftEye + 0,   kLeftEye + 2,   kLeftEye + 4,   kLeftEye + 6,   kLeftEye + 8,                // left eye
      kRightEye + 0,  kRightEye + 2,  kRightEye + 4,  kRightEye + 6,  kRightEye + 8,               // right eye
      kNose + 0,      kNose + 4,      kNose + 6,      kNose + 7,      kNose + 9,                   // nose
      kMouth + 0,     kMouth + 3,     kMouth + 6,     kMouth + 9,                                  // mouth
      kContour + 3,   kContour + 7,   kContour + 11,                                               // jaw, chin
  };
}

LandmarkSet canonical_template() {
  using std::numbers::pi;
  LandmarkSet t;
  auto mirror = [](Point2 p) { return Point2{2.0 * kMidX - p.x, p.y}; };

  // Contour: half-ellipse below the eye line, mirrored for exact symmetry.
  for (std::size_t k = 0; k < 7; ++k) {
    const double theta = pi - static_cast<double>(k) * pi / 14.0;
    t[kContour + k] = {kMidX + 90.0 * std::cos(theta), 140.0 + 222.0 * std::sin(theta)};
    t[kContour + 14 - k] = mirror(t[kContour + k]);
  }
  t[kContour + 7] = {kMidX, 362.0};

  // Eyebrows: outer end at y=118, inner end at y=112, arched in between.
  for (std::size_t k = 0; k < 6; ++k) {
    const double s = static_cast<double>(k) / 5.0;
    const Point2 p{98.0 + 48.0 * s, 118.0 - 6.0 * s - 8.0 * std::sin(pi * s)};
    t[kLeftBrow + k] = p;
    t[kRightBrow + k] = mirror(p);
  }

  // Eyes: 8 outline points starting at the outer corner, then the pupil.
  const double outline[8] = {pi, 0.75 * pi, 0.5 * pi, 0.25 * pi, 0.0, -0.25 * pi, -0.5 * pi, -0.75 * pi};
  for (std::size_t k = 0; k < 8; ++k) {
    const Point2 p{125.0 + 16.0 * std::cos(outline[k]), 140.0 - 7.0 * std::sin(outline[k])};
    t[kLeftEye + k] = p;
    t[kRightEye + k] = mirror(p);
  }
  t[kLeftEye + 8] = {125.0, 140.0};
  t[kRightEye + 8] = mirror(t[kLeftEye + 8]);

  const Point2 nose[12] = {{160, 165}, {160, 177}, {160, 189}, {150, 190}, {143, 203}, {150, 211},
                           {160, 204}, {160, 214}, {170, 190}, {177, 203}, {170, 211}, {160, 209}};
  for (std::size_t k = 0; k < 12; ++k) t[kNose + k] = nose[k];

  // Outer lip: left corner, upper lip left->right, right corner, lower lip right->left.
  for (std::size_t k = 0; k < 12; ++k) {
    const double phi = pi - static_cast<double>(k) * pi / 6.0;
    t[kMouth + k] = {kMidX + 35.0 * std::cos(phi), 265.0 - 14.0 * std::sin(phi)};
  }
  t[kMouth + 0] = {kMidX - 35.0, 265.0};
  t[kMouth + 3] = {kMidX, 251.0};
  t[kMouth + 6] = {kMidX + 35.0, 265.0};
  t[kMouth + 9] = {kMidX, 279.0};
  for (std::size_t k : {1, 2}) t[kMouth + 6 - k] = mirror(t[kMouth + k]);
  for (std::size_t k : {7, 8}) t[kMouth + 18 - k] = mirror(t[kMouth + k]);
  // Inner lip.
  const double inner[6] = {pi, 2.0 * pi / 3.0, pi / 3.0, 0.0, -pi / 3.0, -2.0 * pi / 3.0};
  for (std::size_t k = 0; k < 6; ++k) {
    t[kMouth + 12 + k] = {kMidX + 22.0 * std::cos(inner[k]), 265.0 - 4.0 * std::sin(inner[k])};
  }
  t[kMouth + 14] = mirror(t[kMouth + 13]);
  t[kMouth + 15] = mirror(t[kMouth + 12]);
  t[kMouth + 16] = mirror(t[kMouth + 17]);

  t[kForehead] = {kMidX, 80.0};
  return t;
}

}  // namespace cfk
