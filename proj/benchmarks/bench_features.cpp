#include <benchmark/benchmark.h>

#include "cfk/delaunay.hpp"
#include "cfk/features.hpp"
#include "cfk/preprocess.hpp"
#include "cfk/synthetic.hpp"
#include "cfk/texture.hpp"

using namespace cfk;

namespace {

struct Fixture {
  SyntheticDataset data;
  NormalizedFace face;
  ExtractionContext ctx;

  Fixture() {
    SyntheticOptions o;
    o.n_per_class = 1;
    data = generate_synthetic(o);
    face = normalize_geometry(data.manifest.faces[0], data.images[0], data.manifest.part_index_map);
    ctx = ExtractionContext::for_manifest(data.manifest);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Normalize(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(normalize_geometry(f.data.manifest.faces[0], f.data.images[0], f.data.manifest.part_index_map));
  }
}
BENCHMARK(BM_Normalize);

void BM_Extract(benchmark::State& state) {
  const auto& f = fixture();
  const auto family = static_cast<FeatureFamily>(state.range(0));
  state.SetLabel(std::string(to_string(family)));
  for (auto _ : state) benchmark::DoNotOptimize(extract(family, f.face, f.ctx));
}
BENCHMARK(BM_Extract)
    ->Arg(static_cast<int>(FeatureFamily::SI))
    ->Arg(static_cast<int>(FeatureFamily::SIex))
    ->Arg(static_cast<int>(FeatureFamily::LBP))
    ->Arg(static_cast<int>(FeatureFamily::HOG))
    ->Arg(static_cast<int>(FeatureFamily::ENMC));

void BM_Delaunay26(benchmark::State& state) {
  const LandmarkSet t = canonical_template();
  std::vector<Point2> pts;
  for (std::size_t i : default_delaunay_subset()) pts.push_back(t[i]);
  for (auto _ : state) benchmark::DoNotOptimize(delaunay(pts));
}
BENCHMARK(BM_Delaunay26);

}  // namespace

BENCHMARK_MAIN();
