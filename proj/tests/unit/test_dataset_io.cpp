#include <cmath>
#include <sstream>

#include "doctest.h"
#include "stgnit/dataset_io.hpp"

using namespace stgnit;

namespace {

std::vector<Scene> parse(const std::string& text) {
  std::istringstream is(text);
  return read_scenes(is, "mem");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::string dump(const std::vector<Scene>& scenes) {
  std::ostringstream os;
  write_scenes(os, scenes);
  return os.str();
}

std::size_t observed_entries(const std::vector<Scene>& scenes) {
  std::size_t n = 0;
  for (const auto& s : scenes)
    for (const auto& t : s.tracks)
      for (const auto& p : t.positions) n += p.is_observed();
  return n;
}

}  // namespace

TEST_CASE("scene records parse into tracks with unobserved gaps") {
  const auto scenes = parse(
      R"({"scene_id":"a","frame":0,"pedestrian_id":"p","x":1.0,"y":2.0}
{"scene_id":"a","frame":1,"pedestrian_id":"p","x":null,"y":null}
{"scene_id":"a","frame":1,"pedestrian_id":"q","x":0.5,"y":0.5}
{"scene_id":"a","frame":3,"pedestrian_id":"p","x":3.0,"y":4.0}
)");
  REQUIRE(scenes.size() == 1);
  const Scene& s = scenes[0];
  CHECK(s.frame_rate_hz == 2.5);
  REQUIRE(s.tracks.size() == 2);
  const Track& p = s.tracks[0];
  CHECK(p.pedestrian_id == "p");
  CHECK(p.positions.size() == 4);
  CHECK(p.at(0).x() == 1.0);
  CHECK_FALSE(p.at(1).is_observed());
  CHECK_FALSE(p.at(2).is_observed());
  CHECK(p.at(3).y() == 4.0);
  CHECK(s.tracks[1].first_frame == 1);
}

TEST_CASE("serialization round-trips, including unobserved entries and headers") {
  Scene s;
  s.scene_id = "x";
  s.frame_rate_hz = 10.0;
  s.grid_ref = "g";
  s.tracks = {{"a", 2, {ObservedPosition::observed(0.1, 0.2), ObservedPosition::unobserved(),
                        ObservedPosition::observed(1.0 / 3.0, -7e-12)}}};
  const std::string text = dump({s});
  const auto back = parse(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == s);
  CHECK(dump(back) == text);
}

TEST_CASE("malformed input reports the line") {
  CHECK(error_of("{\"scene_id\":\"a\",\"frame\":0,\"pedestrian_id\":\"p\",\"x\":1}\n").find("mem:1") == 0);
  CHECK(error_of("{\"scene_id\":\"a\",\"frame\":0,\"pedestrian_id\":\"p\",\"x\":1,\"y\":1}\nnot json\n").find("mem:2") ==
        0);
  CHECK_FALSE(error_of(R"({"scene_id":"a","frame":0,"pedestrian_id":"p","x":1,"y":null})").empty());
  CHECK_FALSE(error_of(R"({"scene_id":"a","frame":0,"pedestrian_id":"p","x":1,"y":1,"z":0})").empty());
  CHECK_FALSE(error_of(R"({"scene_id":"a","frame":0,"pedestrian_id":"p","x":1,"y":1}
{"scene_id":"a","frame":0,"pedestrian_id":"p","x":2,"y":1})")
                  .empty());
  CHECK_FALSE(error_of(R"({"scene_id":"a","frame":3,"pedestrian_id":"p","x":1,"y":1}
{"scene_id":"a","frame":1,"pedestrian_id":"q","x":2,"y":1})")
                  .empty());
}

TEST_CASE("corruption drops an exact count and leaves labels and the tail intact") {
  Scene s;
  s.scene_id = "c";
  for (int i = 0; i < 5; ++i) {
    Track t{"p" + std::to_string(i), 0, {}};
    for (int f = 0; f < 40; ++f) t.positions.push_back(ObservedPosition::observed(f, i));
    s.tracks.push_back(t);
  }
  const std::vector<Scene> scenes{s};
  CorruptionSpec spec;
  spec.drop_fraction = 0.1;
  spec.seed = 3;
  const auto out = corrupt(scenes, spec);
  CHECK(out.label == scenes);
  const std::size_t pool = 5 * (40 - 12);
  const auto expected_drop = static_cast<std::size_t>(std::llround(0.1 * pool));
  CHECK(observed_entries(scenes) - observed_entries(out.observation) == expected_drop);
  for (const auto& t : out.observation[0].tracks) {
    for (Frame f = 28; f < 40; ++f) CHECK(t.at(f).is_observed());
  }
  CHECK(corrupt(scenes, spec).observation == out.observation);
  spec.seed = 4;
  CHECK_FALSE(corrupt(scenes, spec).observation == out.observation);
  spec.drop_fraction = 0.0;
  CHECK(corrupt(scenes, spec).observation == scenes);
}

TEST_CASE("synthetic scenes are deterministic and respect occluders and obstacles") {
  SynthSpec spec;
  spec.n_pedestrians = 6;
  spec.n_frames = 30;
  spec.seed = 5;
  spec.obstacles = {{{-1.0, -1.0}, {1.0, 1.0}}};
  spec.occluders = {{{2.0, -6.0}, {4.0, 6.0}}};
  const Scene a = generate_synthetic(spec);
  CHECK(a == generate_synthetic(spec));
  CHECK(a.tracks.size() == 6);
  std::size_t hidden = 0;
  for (const auto& t : a.tracks) {
    for (const auto& p : t.positions) {
      if (!p.is_observed()) {
        ++hidden;
        continue;
      }
      CHECK_FALSE(spec.occluders[0].contains(p.point()));
      CHECK_FALSE(spec.obstacles[0].contains(p.point()));
    }
  }
  CHECK(hidden > 0);
  SynthSpec blind = spec;
  blind.occluders = {{{-7.0, -7.0}, {7.0, 7.0}}};
  CHECK_THROWS(generate_synthetic(blind));
}

TEST_CASE("synthetic point clouds place returns above obstacles only") {
  SynthSpec spec;
  spec.obstacles = {{{0.0, 0.0}, {0.5, 0.5}}};
  const PointCloud cloud = synthesize_cloud(spec);
  for (const auto& p : cloud.points) {
    if (p.z > 0.2) CHECK(spec.obstacles[0].contains({p.x, p.y}));
  }
}
