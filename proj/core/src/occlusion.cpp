#include "cfk/occlusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cfk/error.hpp"
#include "cfk/rng.hpp"
#include "cfk/stats.hpp"

namespace cfk {

bool OcclusionBand::covers(Point2 p) const noexcept {
  if (empty()) return false;
  return p.y >= y_top && p.y <= y_top + height && p.x >= x_left && p.x <= x_right;
}

namespace {

struct Span {
  double lo, hi;
};

Span y_span(const LandmarkSet& lm, const std::vector<std::size_t>& idx) {
  Span s{lm[idx.front()].y, lm[idx.front()].y};
  for (std::size_t i : idx) {
    s.lo = std::min(s.lo, lm[i].y);
    s.hi = std::max(s.hi, lm[i].y);
  }
  return s;
}

std::vector<std::size_t> concat(std::initializer_list<const std::vector<std::size_t>*> parts) {
  std::vector<std::size_t> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

}  // namespace

std::array<OcclusionBand, kConditionCount> make_bands(const LandmarkSet& lm, const PartIndexMap& parts,
                                                       const BandOptions& options) {
  if (!(options.margin >= 0.0)) throw Error(ErrorCode::InvalidArgument, "band margin must be non-negative");
  const auto eyes = concat({&parts.left_eye, &parts.right_eye});
  const auto brows = concat({&parts.left_eyebrow, &parts.right_eyebrow});
  const Span eye = y_span(lm, eyes);
  const Span nose_full = y_span(lm, parts.nose);
  const Span nose{0.5 * (nose_full.lo + nose_full.hi), nose_full.hi};
  const Span mouth = y_span(lm, parts.mouth);

  double height = 0.0;
  for (const Span& s : {eye, nose, mouth}) height = std::max(height, s.hi - s.lo);
  height += 2.0 * options.margin;

  double x_left = lm[0].x, x_right = lm[0].x;
  for (const auto& p : lm.points) {
    x_left = std::min(x_left, p.x);
    x_right = std::max(x_right, p.x);
  }

  std::array<OcclusionBand, kConditionCount> bands;
  bands[index_of(Condition::None)].condition = Condition::None;
  const std::array<std::pair<Condition, Span>, 3> targets{
      {{Condition::Eye, eye}, {Condition::Nose, nose}, {Condition::Mouth, mouth}}};
  for (const auto& [cond, span] : targets) {
    OcclusionBand b;
    b.condition = cond;
    b.height = height;
    b.y_top = 0.5 * (span.lo + span.hi) - 0.5 * height;
    b.x_left = x_left;
    b.x_right = x_right;
    b.fill = options.fill;

    std::vector<std::size_t> others;
    switch (cond) {
      case Condition::Eye: others = concat({&brows, &parts.nose, &parts.mouth}); break;
      case Condition::Nose: others = concat({&eyes, &brows, &parts.mouth}); break;
      case Condition::Mouth: others = concat({&eyes, &brows, &parts.nose}); break;
      case Condition::None: break;
    }
    for (std::size_t i : others) {
      if (b.covers(lm[i])) {
        throw Error(ErrorCode::PartsOverlap, std::string(to_string(cond)) + " band of height " +
                                                 std::to_string(height) + " px would cover landmark " +
                                                 std::to_string(i));
      }
    }
    bands[index_of(cond)] = b;
  }
  return bands;
}

OcclusionBand make_band(const LandmarkSet& landmarks, const PartIndexMap& parts, Condition condition,
                        const BandOptions& options) {
  return make_bands(landmarks, parts, options)[index_of(condition)];
}

GrayImage apply_band(const GrayImage& image, const OcclusionBand& band) {
  GrayImage out = image;
  if (band.empty()) return out;
  const int y0 = std::max(0, static_cast<int>(std::ceil(band.y_top)));
  const int y1 = std::min(image.height - 1, static_cast<int>(std::floor(band.y_top + band.height)));
  const int x0 = std::max(0, static_cast<int>(std::ceil(band.x_left)));
  const int x1 = std::min(image.width - 1, static_cast<int>(std::floor(band.x_right)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) out.at(x, y) = band.fill;
  }
  return out;
}

nlohmann::json to_json(const OcclusionBand& band) {
  return {{"condition", to_string(band.condition)}, {"y_top", band.y_top},   {"height", band.height},
          {"x_left", band.x_left},                  {"x_right", band.x_right}, {"fill", band.fill}};
}

std::vector<std::string> ConditionDesign::members(Condition c) const {
  std::vector<std::string> out = common;
  const auto& u = unique[index_of(c)];
  out.insert(out.end(), u.begin(), u.end());
  return out;
}

namespace {

// Group 0 is the common set, groups 1..4 the unique sets of none/eye/nose/mouth.
constexpr std::size_t kGroups = 1 + kConditionCount;

struct Assignment {
  std::vector<std::size_t> face;  // candidate index per slot
  std::vector<std::size_t> group; // group per slot
  std::array<double, kGroups> sum{};
};

}  // namespace

ConditionDesign build_design(std::span<const DesignCandidate> candidates, const DesignOptions& options) {
  const std::size_t total = options.n_common + kConditionCount * options.n_unique;
  if (total % 2 != 0) throw Error(ErrorCode::InvalidArgument, "design size must be even for class balance");
  std::array<std::vector<std::size_t>, 2> pool;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!seen.insert(c.face_id).second) throw Error(ErrorCode::DuplicateFaceId, "duplicate candidate " + c.face_id);
    if (c.cls != 0 && c.cls != 1) throw Error(ErrorCode::InvalidArgument, "candidate class must be 0 or 1");
    if (!std::isfinite(c.accuracy)) throw Error(ErrorCode::NonFinite, "candidate accuracy is not finite");
    if (c.accuracy >= options.min_accuracy) pool[static_cast<std::size_t>(c.cls)].push_back(i);
  }
  const std::size_t per_class = total / 2;
  if (pool[0].size() + pool[1].size() < total) {
    throw Error(ErrorCode::InfeasibleBalance, "need " + std::to_string(total) + " eligible faces, have " +
                                                  std::to_string(pool[0].size() + pool[1].size()));
  }
  if (pool[0].size() < per_class || pool[1].size() < per_class) {
    throw Error(ErrorCode::InfeasibleBalance, "need " + std::to_string(per_class) + " eligible faces per class");
  }
  double target = 0.0;
  if (options.target) {
    target = *options.target;
  } else {
    for (const auto& p : pool) {
      for (std::size_t i : p) target += candidates[i].accuracy;
    }
    target /= static_cast<double>(pool[0].size() + pool[1].size());
  }

  // Per-group class counts: common splits evenly, unique sets alternate the odd face.
  std::array<std::array<std::size_t, 2>, kGroups> quota{};
  quota[0] = {options.n_common / 2, options.n_common - options.n_common / 2};
  for (std::size_t g = 1; g < kGroups; ++g) {
    const std::size_t big = (options.n_unique + 1) / 2, small = options.n_unique / 2;
    quota[g] = (g % 2 == 1) ? std::array<std::size_t, 2>{big, small} : std::array<std::size_t, 2>{small, big};
  }
  for (int c = 0; c < 2; ++c) {
    std::size_t q = 0;
    for (const auto& g : quota) q += g[static_cast<std::size_t>(c)];
    if (q != per_class) {
      // Rebalance the last unique set so both classes total per_class.
      throw Error(ErrorCode::InfeasibleBalance, "class quotas cannot be balanced for this design size");
    }
  }

  const double per_condition = static_cast<double>(options.n_common + options.n_unique);
  auto condition_means = [&](const std::array<double, kGroups>& sum) {
    std::array<double, kConditionCount> m{};
    for (std::size_t c = 0; c < kConditionCount; ++c) m[c] = (sum[0] + sum[1 + c]) / per_condition;
    return m;
  };
  auto loss = [&](const std::array<double, kGroups>& sum) {
    double l = 0.0;
    for (double m : condition_means(sum)) l += (m - target) * (m - target);
    return l;
  };
  auto worst = [&](const std::array<double, kGroups>& sum) {
    double w = 0.0;
    for (double m : condition_means(sum)) w = std::max(w, std::abs(m - target));
    return w;
  };

  for (int restart = 0; restart < std::max(options.restarts, 1); ++restart) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(restart)));
    // Slots: selected faces per class (grouped) and the unselected remainder.
    std::array<std::vector<std::size_t>, 2> selected, spare;
    for (std::size_t c = 0; c < 2; ++c) {
      std::vector<std::size_t> order = pool[c];
      std::shuffle(order.begin(), order.end(), rng);
      selected[c].assign(order.begin(), order.begin() + static_cast<long>(per_class));
      spare[c].assign(order.begin() + static_cast<long>(per_class), order.end());
    }
    // Group membership: selected[c][k] goes to group_of[c][k].
    std::array<std::vector<std::size_t>, 2> group_of;
    std::array<double, kGroups> sum{};
    for (std::size_t c = 0; c < 2; ++c) {
      std::size_t k = 0;
      for (std::size_t g = 0; g < kGroups; ++g) {
        for (std::size_t q = 0; q < quota[g][c]; ++q, ++k) {
          group_of[c].push_back(g);
          sum[g] += candidates[selected[c][k]].accuracy;
        }
      }
    }

    double current = loss(sum);
    std::uniform_int_distribution<int> pick_class(0, 1);
    const std::size_t max_iter = 200000;
    std::size_t stale = 0;
    for (std::size_t it = 0; it < max_iter && worst(sum) > 0.5 * options.tolerance && stale < 20000; ++it) {
      const auto c = static_cast<std::size_t>(pick_class(rng));
      std::uniform_int_distribution<std::size_t> pick_sel(0, per_class - 1);
      const std::size_t a = pick_sel(rng);
      const bool with_spare = !spare[c].empty() && (rng() % 3 == 0);
      std::array<double, kGroups> trial = sum;
      std::size_t b = 0;
      if (with_spare) {
        std::uniform_int_distribution<std::size_t> pick_spare(0, spare[c].size() - 1);
        b = pick_spare(rng);
        trial[group_of[c][a]] += candidates[spare[c][b]].accuracy - candidates[selected[c][a]].accuracy;
      } else {
        b = pick_sel(rng);
        if (group_of[c][a] == group_of[c][b]) {
          ++stale;
          continue;
        }
        const double da = candidates[selected[c][a]].accuracy, db = candidates[selected[c][b]].accuracy;
        trial[group_of[c][a]] += db - da;
        trial[group_of[c][b]] += da - db;
      }
      const double next = loss(trial);
      if (next < current) {
        current = next;
        sum = trial;
        if (with_spare) {
          std::swap(selected[c][a], spare[c][b]);
        } else {
          std::swap(selected[c][a], selected[c][b]);
        }
        stale = 0;
      } else {
        ++stale;
      }
    }
    if (worst(sum) <= options.tolerance) {
      ConditionDesign d;
      d.target = target;
      d.restarts_used = restart + 1;
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
          const std::size_t g = group_of[c][k];
          const std::string& id = candidates[selected[c][k]].face_id;
          if (g == 0) {
            d.common.push_back(id);
          } else {
            d.unique[g - 1].push_back(id);
          }
        }
      }
      std::sort(d.common.begin(), d.common.end());
      for (auto& u : d.unique) std::sort(u.begin(), u.end());
      d.mean_accuracy = condition_means(sum);
      return d;
    }
  }
  throw Error(ErrorCode::InfeasibleBalance, "no assignment within tolerance after " +
                                                std::to_string(options.restarts) + " restarts");
}

nlohmann::json to_json(const ConditionDesign& design) {
  nlohmann::json j;
  j["target"] = design.target;
  j["common"] = design.common;
  j["unique"] = nlohmann::json::object();
  j["mean_accuracy"] = nlohmann::json::object();
  for (std::size_t c = 0; c < kConditionCount; ++c) {
    const std::string name(to_string(static_cast<Condition>(c)));
    j["unique"][name] = design.unique[c];
    j["mean_accuracy"][name] = design.mean_accuracy[c];
  }
  return j;
}

ConditionDesign design_from_json(const nlohmann::json& j) {
  try {
    ConditionDesign d;
    d.target = j.value("target", 0.0);
    d.common = j.at("common").get<std::vector<std::string>>();
    for (std::size_t c = 0; c < kConditionCount; ++c) {
      const std::string name(to_string(static_cast<Condition>(c)));
      d.unique[c] = j.at("unique").at(name).get<std::vector<std::string>>();
      if (j.contains("mean_accuracy")) d.mean_accuracy[c] = j["mean_accuracy"].value(name, 0.0);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("condition design: ") + e.what());
  }
}

namespace {

ConditionSummary summarize(const std::vector<const ResponseRecord*>& trials) {
  ConditionSummary s;
  std::vector<double> rts;
  for (const auto* r : trials) {
    ++s.n_trials;
    if (*r->correct) ++s.n_correct;
    rts.push_back(r->rt_ms);
  }
  if (s.n_trials == 0) return s;
  s.accuracy = static_cast<double>(s.n_correct) / static_cast<double>(s.n_trials);
  s.mean_rt_ms = std::accumulate(rts.begin(), rts.end(), 0.0) / static_cast<double>(rts.size());
  std::sort(rts.begin(), rts.end());
  const std::size_t m = rts.size() / 2;
  s.median_rt_ms = rts.size() % 2 ? rts[m] : 0.5 * (rts[m - 1] + rts[m]);
  return s;
}

}  // namespace

OcclusionAnalysis analyze_occlusion(std::span<const ResponseRecord> responses, const ConditionDesign* design) {
  const std::vector<ResponseRecord> eff = effective_responses(responses);
  std::set<std::string> common;
  if (design != nullptr) common.insert(design->common.begin(), design->common.end());
  std::array<std::vector<const ResponseRecord*>, kConditionCount> all, com, uni;
  for (const auto& r : eff) {
    const std::size_t c = index_of(r.condition);
    all[c].push_back(&r);
    if (design != nullptr) (common.count(r.face_id) ? com : uni)[c].push_back(&r);
  }
  OcclusionAnalysis out;
  for (std::size_t c = 0; c < kConditionCount; ++c) {
    out.all[c] = summarize(all[c]);
    out.common[c] = summarize(com[c]);
    out.unique[c] = summarize(uni[c]);
  }
  auto labels = [](const std::vector<const ResponseRecord*>& trials) {
    std::vector<double> v;
    for (const auto* r : trials) v.push_back(*r->correct ? 1.0 : 0.0);
    return v;
  };
  for (std::size_t a = 0; a < kConditionCount; ++a) {
    for (std::size_t b = a + 1; b < kConditionCount; ++b) {
      ConditionComparison cmp{static_cast<Condition>(a), static_cast<Condition>(b), {}};
      if (!all[a].empty() && !all[b].empty()) cmp.test = rank_sum_test(labels(all[a]), labels(all[b]));
      out.comparisons.push_back(cmp);
    }
  }
  return out;
}

}  // namespace cfk
