#pragma once

#include <cstdint>
#include <string>

#include "stgnit/dataset_io.hpp"
#include "stgnit/train_eval.hpp"

namespace stgnit {

// Synthetic scenes with random obstacles and occluders, each registered to a
// grid rasterized from a synthetic point cloud of its obstacles.
struct BenchmarkSpec {
  std::string name = "synthetic";
  int scenes = 4;
  int pedestrians = 8;
  int frames = 40;
  int obstacles = 3;  // per scene
  int occluders = 1;  // per scene
  WalkerModel walker = WalkerModel::Waypoint;
  double frame_rate_hz = 2.5;
  std::uint64_t seed = 0;
};

// Scene k gets id "<name>-<k>" and grid "<name>-<k>-grid". Both views carry
// the occluded ground truth.
Dataset make_benchmark(const BenchmarkSpec& spec);

// The SynthSpec used for scene k, exposed so the CLI can emit point clouds.
SynthSpec benchmark_scene_spec(const BenchmarkSpec& spec, int k);

}  // namespace stgnit
