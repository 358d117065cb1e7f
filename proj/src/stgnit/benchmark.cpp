#include "stgnit/benchmark.hpp"

#include "stgnit/random.hpp"

namespace stgnit {

namespace {

Box random_box(Rng& rng, double reach, double size_min, double size_max) {
  const double w = rng.uniform(size_min, size_max), h = rng.uniform(size_min, size_max);
  const double x = rng.uniform(-reach, reach - w), y = rng.uniform(-reach, reach - h);
  return {{x, y}, {x + w, y + h}};
}

}  // namespace

SynthSpec benchmark_scene_spec(const BenchmarkSpec& spec, int k) {
  Rng rng(spec.seed * 1000003u + static_cast<std::uint64_t>(k));
  SynthSpec s;
  s.scene_id = spec.name + "-" + std::to_string(k);
  s.n_pedestrians = spec.pedestrians;
  s.n_frames = spec.frames;
  s.walker = spec.walker;
  s.frame_rate_hz = spec.frame_rate_hz;
  s.seed = rng.next();
  for (int o = 0; o < spec.obstacles; ++o) s.obstacles.push_back(random_box(rng, 4.0, 0.6, 1.6));
  for (int o = 0; o < spec.occluders; ++o) s.occluders.push_back(random_box(rng, 5.0, 1.0, 2.5));
  return s;
}

Dataset make_benchmark(const BenchmarkSpec& spec) {
  if (spec.scenes <= 0) throw std::invalid_argument("benchmark needs at least one scene");
  Dataset d;
  d.name = spec.name;
  for (int k = 0; k < spec.scenes; ++k) {
    const SynthSpec s = benchmark_scene_spec(spec, k);
    Scene scene = generate_synthetic(s);
    const std::string grid_id = s.scene_id + "-grid";
    scene.grid_ref = grid_id;
    d.grids[grid_id] = std::make_shared<const OccupancyGrid>(rasterize(synthesize_cloud(s)));
    d.observation.push_back(scene);
    d.label.push_back(std::move(scene));
  }
  return d;
}

}  // namespace stgnit
