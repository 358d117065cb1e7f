#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stgnit/core_data.hpp"
#include "stgnit/occupancy_map.hpp"

namespace stgnit {

// Line-delimited JSON: {"scene_id", "frame", "pedestrian_id", "x", "y"} with
// null coordinates for unobserved entries. A record without "frame" is a scene
// header carrying "frame_rate_hz" and/or "grid_ref".
std::vector<Scene> read_scenes(std::istream& is, const std::string& source_name = "<stream>");
std::vector<Scene> load_scenes(const std::string& path);
void write_scenes(std::ostream& os, const std::vector<Scene>& scenes);
void save_scenes(const std::vector<Scene>& scenes, const std::string& path);

// Stable-sorts tracks by first frame, which is the order load_scenes produces.
void canonicalize(Scene& scene);

struct CorruptionSpec {
  double drop_fraction = 0.10;
  std::uint64_t seed = 0;
  // Trailing frames of each scene that only ever serve as labels; never dropped.
  int label_only_tail = kDefaultPredLen;
};

struct CorruptedScenes {
  std::vector<Scene> observation;
  std::vector<Scene> label;
};

// Flips exactly round(drop_fraction * N) of the N droppable observed entries
// to unobserved in the observation view. The label view is the input, untouched.
CorruptedScenes corrupt(const std::vector<Scene>& scenes, const CorruptionSpec& spec);

struct Box {
  Point2 min;
  Point2 max;

  bool contains(const Point2& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  bool covers(const Box& other) const { return contains(other.min) && contains(other.max); }
  Point2 nearest(const Point2& p) const;
};

enum class WalkerModel { Waypoint, Crossing, Standing };

struct SynthSpec {
  std::string scene_id = "synthetic";
  int n_pedestrians = 8;
  int n_frames = 40;
  WalkerModel walker = WalkerModel::Waypoint;
  Box arena{{-6.0, -6.0}, {6.0, 6.0}};
  // Boxes that hide pedestrians from the sensor.
  std::vector<Box> occluders;
  // Static obstacles that waypoint walkers steer around.
  std::vector<Box> obstacles;
  double speed_min = 0.3;  // m/frame
  double speed_max = 0.5;  // m/frame
  double frame_rate_hz = 2.5;
  std::uint64_t seed = 0;
};

// Ground-truth tracks with occlusion applied by geometry.
Scene generate_synthetic(const SynthSpec& spec);

// Ground returns over the arena plus stacked returns over each obstacle box,
// suitable for rasterize().
PointCloud synthesize_cloud(const SynthSpec& spec, double spacing = 0.1);

// No STCrowd converter is provided. The expected mapping: per annotated frame
// and pedestrian id, the 3-D box centre (x, y) in the LIDAR frame becomes one
// record; frames where the id is not labelled become null records.

}  // namespace stgnit
