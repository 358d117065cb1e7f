#include "stgnit/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "stgnit/random.hpp"

namespace stgnit {

using nlohmann::json;

namespace {

struct SceneBuilder {
  Scene scene;
  bool has_data = false;
  Frame last_frame = 0;
  std::map<std::string, std::size_t> track_index;
  std::vector<std::vector<std::pair<Frame, ObservedPosition>>> entries;
};

std::string id_field(const json& rec, const char* key, const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end()) throw DataError(where + ": missing \"" + key + "\"");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw DataError(where + ": \"" + key + "\" must be a string or integer");
}

}  // namespace

std::vector<Scene> read_scenes(std::istream& is, const std::string& source_name) {
  std::vector<SceneBuilder> builders;
  std::map<std::string, std::size_t> scene_index;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = source_name + ":" + std::to_string(lineno);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
    if (!rec.is_object()) throw DataError(where + ": record must be a JSON object");
    for (const auto& [key, _] : rec.items()) {
      static const char* kKnown[] = {"scene_id", "frame",  "pedestrian_id", "x",
                                     "y",        "frame_rate_hz", "grid_ref"};
      if (std::find_if(std::begin(kKnown), std::end(kKnown),
                       [&](const char* k) { return key == k; }) == std::end(kKnown)) {
        throw DataError(where + ": unknown field \"" + key + "\"");
      }
    }
    const std::string scene_id = id_field(rec, "scene_id", where);
    auto [sit, inserted] = scene_index.try_emplace(scene_id, builders.size());
    if (inserted) {
      builders.emplace_back();
      builders.back().scene.scene_id = scene_id;
    }
    SceneBuilder& b = builders[sit->second];

    if (!rec.contains("frame")) {
      if (rec.contains("pedestrian_id") || rec.contains("x") || rec.contains("y")) {
        throw DataError(where + ": position record without \"frame\"");
      }
      if (auto it = rec.find("frame_rate_hz"); it != rec.end()) {
        if (!it->is_number() || !(it->get<double>() > 0.0)) {
          throw DataError(where + ": frame_rate_hz must be a positive number");
        }
        b.scene.frame_rate_hz = it->get<double>();
      }
      if (auto it = rec.find("grid_ref"); it != rec.end()) {
        if (!it->is_string()) throw DataError(where + ": grid_ref must be a string");
        b.scene.grid_ref = it->get<std::string>();
      }
      continue;
    }
    if (rec.contains("frame_rate_hz") || rec.contains("grid_ref")) {
      throw DataError(where + ": scene metadata must be on a header record");
    }
    const json& fj = rec["frame"];
    if (!fj.is_number_integer()) throw DataError(where + ": \"frame\" must be an integer");
    const Frame frame = fj.get<Frame>();
    const std::string ped = id_field(rec, "pedestrian_id", where);
    if (!rec.contains("x") || !rec.contains("y")) throw DataError(where + ": missing \"x\" or \"y\"");
    const json& xj = rec["x"];
    const json& yj = rec["y"];
    ObservedPosition pos;
    if (xj.is_null() && yj.is_null()) {
      pos = ObservedPosition::unobserved();
    } else if (xj.is_number() && yj.is_number()) {
      try {
        pos = ObservedPosition::observed(xj.get<double>(), yj.get<double>());
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    } else {
      throw DataError(where + ": x and y must both be numbers or both be null");
    }
    if (b.has_data && frame < b.last_frame) {
      throw DataError(where + ": frame " + std::to_string(frame) + " after frame " +
                      std::to_string(b.last_frame) + " in scene '" + scene_id + "' (non-monotonic)");
    }
    b.has_data = true;
    b.last_frame = frame;
    auto [tit, new_track] = b.track_index.try_emplace(ped, b.entries.size());
    if (new_track) b.entries.emplace_back();
    auto& te = b.entries[tit->second];
    if (!te.empty() && te.back().first == frame) {
      throw DataError(where + ": duplicate record for pedestrian '" + ped + "' at frame " +
                      std::to_string(frame));
    }
    te.emplace_back(frame, pos);
  }

  std::vector<Scene> scenes;
  scenes.reserve(builders.size());
  for (auto& b : builders) {
    std::vector<std::string> ids(b.entries.size());
    for (const auto& [id, idx] : b.track_index) ids[idx] = id;
    for (std::size_t k = 0; k < b.entries.size(); ++k) {
      const auto& te = b.entries[k];
      Track t;
      t.pedestrian_id = ids[k];
      t.first_frame = te.front().first;
      t.positions.assign(static_cast<std::size_t>(te.back().first - te.front().first + 1),
                         ObservedPosition::unobserved());
      for (const auto& [f, p] : te) t.positions[static_cast<std::size_t>(f - t.first_frame)] = p;
      b.scene.tracks.push_back(std::move(t));
    }
    canonicalize(b.scene);
    scenes.push_back(std::move(b.scene));
  }
  return scenes;
}

std::vector<Scene> load_scenes(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open scene file '" + path + "'");
  return read_scenes(is, path);
}

void canonicalize(Scene& scene) {
  std::stable_sort(scene.tracks.begin(), scene.tracks.end(),
                   [](const Track& a, const Track& b) { return a.first_frame < b.first_frame; });
}

void write_scenes(std::ostream& os, const std::vector<Scene>& scenes) {
  for (const Scene& scene : scenes) {
    scene.validate();
    if (scene.frame_rate_hz != 2.5 || scene.grid_ref) {
      nlohmann::ordered_json h;
      h["scene_id"] = scene.scene_id;
      h["frame_rate_hz"] = scene.frame_rate_hz;
      if (scene.grid_ref) h["grid_ref"] = *scene.grid_ref;
      os << h.dump() << '\n';
    }
    if (scene.empty()) continue;
    for (Frame f = scene.first_frame(); f <= scene.last_frame(); ++f) {
      for (const Track& t : scene.tracks) {
        if (f < t.first_frame || f > t.last_frame()) continue;
        const ObservedPosition p = t.at(f);
        nlohmann::ordered_json r;
        r["scene_id"] = scene.scene_id;
        r["frame"] = f;
        r["pedestrian_id"] = t.pedestrian_id;
        r["x"] = p.is_observed() ? json(p.x()) : json(nullptr);
        r["y"] = p.is_observed() ? json(p.y()) : json(nullptr);
        os << r.dump() << '\n';
      }
    }
  }
}

void save_scenes(const std::vector<Scene>& scenes, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write scene file '" + path + "'");
  write_scenes(os, scenes);
  if (!os) throw std::runtime_error("failed writing scene file '" + path + "'");
}

CorruptedScenes corrupt(const std::vector<Scene>& scenes, const CorruptionSpec& spec) {
  if (!(spec.drop_fraction >= 0.0 && spec.drop_fraction <= 1.0)) {
    throw std::invalid_argument("corrupt: drop_fraction must lie in [0, 1]");
  }
  if (spec.label_only_tail < 0) throw std::invalid_argument("corrupt: label_only_tail must be >= 0");
  CorruptedScenes out{scenes, scenes};

  struct Slot {
    std::size_t scene, track, pos;
  };
  std::vector<Slot> pool;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const Scene& sc = scenes[s];
    if (sc.empty()) continue;
    const Frame last_input = sc.last_frame() - spec.label_only_tail;
    for (std::size_t k = 0; k < sc.tracks.size(); ++k) {
      const Track& t = sc.tracks[k];
      for (std::size_t i = 0; i < t.positions.size(); ++i) {
        if (t.first_frame + static_cast<Frame>(i) > last_input) break;
        if (t.positions[i].is_observed()) pool.push_back({s, k, i});
      }
    }
  }
  const auto n_drop = static_cast<std::size_t>(std::llround(spec.drop_fraction * static_cast<double>(pool.size())));
  Rng rng(spec.seed);
  // Partial Fisher-Yates: the first n_drop slots become a uniform sample.
  for (std::size_t i = 0; i < n_drop; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
    std::swap(pool[i], pool[j]);
    const Slot& sl = pool[i];
    out.observation[sl.scene].tracks[sl.track].positions[sl.pos] = ObservedPosition::unobserved();
  }
  return out;
}

Point2 Box::nearest(const Point2& p) const {
  return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y)};
}

namespace {

bool inside_any(const std::vector<Box>& boxes, const Point2& p) {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(p); });
}

Point2 random_free_point(Rng& rng, const SynthSpec& spec) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Point2 p{rng.uniform(spec.arena.min.x, spec.arena.max.x),
             rng.uniform(spec.arena.min.y, spec.arena.max.y)};
    if (!inside_any(spec.obstacles, p)) return p;
  }
  throw std::invalid_argument("generate_synthetic: obstacles leave no free space in the arena");
}

Point2 rotate(const Point2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

double norm(const Point2& v) { return std::hypot(v.x, v.y); }

std::vector<std::vector<Point2>> simulate_waypoint(Rng& rng, const SynthSpec& spec,
                                                   const std::vector<double>& speed) {
  constexpr double kObstacleRange = 1.0;
  constexpr double kSocialRange = 0.8;
  const std::size_t n = speed.size();
  std::vector<Point2> pos(n), goal(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = random_free_point(rng, spec);
    goal[i] = random_free_point(rng, spec);
  }
  std::vector<std::vector<Point2>> paths(n);
  for (std::size_t i = 0; i < n; ++i) paths[i].push_back(pos[i]);

  for (int f = 1; f < spec.n_frames; ++f) {
    std::vector<Point2> next = pos;
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 p = pos[i];
      Point2 to_goal{goal[i].x - p.x, goal[i].y - p.y};
      const double dg = norm(to_goal);
      Point2 dir = dg > 1e-12 ? Point2{to_goal.x / dg, to_goal.y / dg} : Point2{};
      for (const Box& b : spec.obstacles) {
        const Point2 q = b.nearest(p);
        const Point2 v{p.x - q.x, p.y - q.y};
        const double d = norm(v);
        if (d >= kObstacleRange || d < 1e-12) continue;
        const Point2 u{v.x / d, v.y / d};
        const double w = (kObstacleRange - d) / kObstacleRange;
        // Sidestep along the obstacle face, on the side facing the goal.
        Point2 tangent{-u.y, u.x};
        if (tangent.x * dir.x + tangent.y * dir.y < 0) tangent = {-tangent.x, -tangent.y};
        dir.x += 2.0 * w * u.x + 1.5 * w * tangent.x;
        dir.y += 2.0 * w * u.y + 1.5 * w * tangent.y;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Point2 v{p.x - pos[j].x, p.y - pos[j].y};
        const double d = norm(v);
        if (d >= kSocialRange || d < 1e-12) continue;
        const double w = 1.5 * (kSocialRange - d) / kSocialRange;
        dir.x += w * v.x / d;
        dir.y += w * v.y / d;
      }
      const double dn = norm(dir);
      if (dn < 1e-12) continue;
      const double step = std::min(speed[i], dg);
      const Point2 base{dir.x / dn * step, dir.y / dn * step};
      for (double angle : {0.0, 0.25, -0.25, 0.5, -0.5}) {
        const Point2 s = rotate(base, angle * std::numbers::pi);
        const Point2 cand{p.x + s.x, p.y + s.y};
        if (!inside_any(spec.obstacles, cand)) {
          next[i] = cand;
          break;
        }
      }
      if (distance(next[i], goal[i]) < std::max(speed[i], 1e-6)) goal[i] = random_free_point(rng, spec);
    }
    pos = next;
    for (std::size_t i = 0; i < n; ++i) paths[i].push_back(pos[i]);
  }
  return paths;
}

}  // namespace

Scene generate_synthetic(const SynthSpec& spec) {
  if (spec.n_pedestrians < 1 || spec.n_frames < 1) {
    throw std::invalid_argument("generate_synthetic: need at least one pedestrian and one frame");
  }
  if (!(spec.speed_min >= 0.0 && spec.speed_min <= spec.speed_max)) {
    throw std::invalid_argument("generate_synthetic: invalid speed range");
  }
  if (!(spec.arena.min.x < spec.arena.max.x && spec.arena.min.y < spec.arena.max.y)) {
    throw std::invalid_argument("generate_synthetic: empty arena");
  }
  if (!(spec.frame_rate_hz > 0.0)) throw std::invalid_argument("generate_synthetic: frame_rate_hz must be > 0");
  for (const Box& o : spec.occluders) {
    if (o.covers(spec.arena)) {
      throw std::invalid_argument("generate_synthetic: an occluder covers the whole arena");
    }
  }

  Rng rng(spec.seed);
  const auto n = static_cast<std::size_t>(spec.n_pedestrians);
  std::vector<double> speed(n);
  for (auto& s : speed) s = rng.uniform(spec.speed_min, spec.speed_max);

  std::vector<std::vector<Point2>> paths(n);
  switch (spec.walker) {
    case WalkerModel::Standing:
      for (std::size_t i = 0; i < n; ++i) {
        paths[i].assign(static_cast<std::size_t>(spec.n_frames), random_free_point(rng, spec));
      }
      break;
    case WalkerModel::Crossing:
      for (std::size_t i = 0; i < n; ++i) {
        const Box& a = spec.arena;
        const bool horizontal = rng.uniform() < 0.5;
        const bool forward = rng.uniform() < 0.5;
        Point2 start, end;
        if (horizontal) {
          start = {forward ? a.min.x : a.max.x, rng.uniform(a.min.y, a.max.y)};
          end = {forward ? a.max.x : a.min.x, rng.uniform(a.min.y, a.max.y)};
        } else {
          start = {rng.uniform(a.min.x, a.max.x), forward ? a.min.y : a.max.y};
          end = {rng.uniform(a.min.x, a.max.x), forward ? a.max.y : a.min.y};
        }
        const double len = distance(start, end);
        const Point2 u{(end.x - start.x) / len, (end.y - start.y) / len};
        for (int f = 0; f < spec.n_frames; ++f) {
          paths[i].push_back({start.x + u.x * speed[i] * f, start.y + u.y * speed[i] * f});
        }
      }
      break;
    case WalkerModel::Waypoint:
      paths = simulate_waypoint(rng, spec, speed);
      break;
  }

  Scene scene;
  scene.scene_id = spec.scene_id;
  scene.frame_rate_hz = spec.frame_rate_hz;
  bool any_observed = false;
  for (std::size_t i = 0; i < n; ++i) {
    Track t;
    t.pedestrian_id = "p" + std::to_string(i);
    t.first_frame = 0;
    for (const Point2& p : paths[i]) {
      const bool hidden = inside_any(spec.occluders, p);
      any_observed = any_observed || !hidden;
      t.positions.push_back(hidden ? ObservedPosition::unobserved() : ObservedPosition::observed(p));
    }
    scene.tracks.push_back(std::move(t));
  }
  if (!any_observed) throw std::invalid_argument("generate_synthetic: occluders hide every position");
  return scene;
}

PointCloud synthesize_cloud(const SynthSpec& spec, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("synthesize_cloud: spacing must be > 0");
  PointCloud cloud;
  const auto fill = [&](const Box& b, std::initializer_list<double> zs) {
    for (double x = b.min.x; x <= b.max.x + 1e-9; x += spacing) {
      for (double y = b.min.y; y <= b.max.y + 1e-9; y += spacing) {
        for (double z : zs) cloud.points.push_back({x, y, z});
      }
    }
  };
  fill(spec.arena, {0.0});
  for (const Box& b : spec.obstacles) fill(b, {0.5, 1.0, 1.5});
  return cloud;
}

}  // namespace stgnit
