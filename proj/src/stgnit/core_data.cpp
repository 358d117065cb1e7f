#include "stgnit/core_data.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stgnit/numfmt.hpp"

namespace stgnit {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

ObservedPosition ObservedPosition::observed(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw DataError("observed position must have finite coordinates");
  }
  ObservedPosition p;
  p.observed_ = true;
  p.p_ = {x, y};
  return p;
}

const Point2& ObservedPosition::point() const {
  if (!observed_) throw std::logic_error("coordinates requested from an unobserved position");
  return p_;
}

ObservedPosition Track::at(Frame frame) const {
  if (frame < first_frame || frame > last_frame()) return ObservedPosition::unobserved();
  return positions[static_cast<std::size_t>(frame - first_frame)];
}

bool Scene::empty() const { return tracks.empty(); }

Frame Scene::first_frame() const {
  if (tracks.empty()) return 0;
  Frame f = tracks.front().first_frame;
  for (const auto& t : tracks) f = std::min(f, t.first_frame);
  return f;
}

Frame Scene::last_frame() const {
  if (tracks.empty()) return -1;
  Frame f = tracks.front().last_frame();
  for (const auto& t : tracks) f = std::max(f, t.last_frame());
  return f;
}

Frame Scene::frame_count() const { return tracks.empty() ? 0 : last_frame() - first_frame() + 1; }

void Scene::validate() const {
  if (!(frame_rate_hz > 0.0) || !std::isfinite(frame_rate_hz)) {
    throw DataError("scene '" + scene_id + "': frame_rate_hz must be positive");
  }
  for (const auto& t : tracks) {
    if (t.positions.empty()) {
      throw DataError("scene '" + scene_id + "': track '" + t.pedestrian_id + "' is empty");
    }
  }
}

std::vector<std::vector<bool>> Window::label_mask() const {
  std::vector<std::vector<bool>> mask(static_cast<std::size_t>(t_pred),
                                      std::vector<bool>(size(), false));
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t t = 0; t < future[i].size(); ++t) mask[t][i] = future[i][t].is_observed();
  }
  return mask;
}

std::optional<Point2> Window::last_observed(std::size_t i) const {
  const auto& row = history.at(i);
  for (auto it = row.rbegin(); it != row.rend(); ++it) {
    if (it->is_observed()) return it->point();
  }
  return std::nullopt;
}

const char* to_string(Mode mode) { return mode == Mode::Filtration ? "filtration" : "pad"; }

Mode mode_from_string(const std::string& s) {
  if (s == "filtration" || s == "f") return Mode::Filtration;
  if (s == "pad" || s == "p") return Mode::Pad;
  throw std::invalid_argument("unknown mode '" + s + "' (expected filtration|pad)");
}

std::vector<Window> slice_windows(const Scene& scene, int t_obs, int t_pred, int stride) {
  return slice_windows(scene, scene, t_obs, t_pred, stride);
}

std::vector<Window> slice_windows(const Scene& observation_view, const Scene& label_view,
                                  int t_obs, int t_pred, int stride) {
  if (t_obs < 1 || t_pred < 1 || stride < 1) {
    throw std::invalid_argument("slice_windows: t_obs, t_pred and stride must be >= 1");
  }
  if (observation_view.tracks.size() != label_view.tracks.size()) {
    throw DataError("slice_windows: observation and label views disagree on track count");
  }
  std::vector<Window> out;
  if (observation_view.empty()) return out;
  const Frame first = observation_view.first_frame();
  const Frame last = observation_view.last_frame();
  if (last - first + 1 < t_obs + t_pred) return out;

  for (Frame t0 = first + t_obs - 1; t0 + t_pred <= last; t0 += stride) {
    Window w;
    w.scene_id = observation_view.scene_id;
    w.t0 = t0;
    w.t_obs = t_obs;
    w.t_pred = t_pred;
    for (std::size_t k = 0; k < observation_view.tracks.size(); ++k) {
      const Track& obs = observation_view.tracks[k];
      const Track& lbl = label_view.tracks[k];
      std::vector<ObservedPosition> hist;
      hist.reserve(static_cast<std::size_t>(t_obs));
      for (Frame f = t0 - t_obs + 1; f <= t0; ++f) hist.push_back(obs.at(f));
      if (observed_count(hist) == 0) continue;
      std::vector<ObservedPosition> fut;
      fut.reserve(static_cast<std::size_t>(t_pred));
      for (Frame f = t0 + 1; f <= t0 + t_pred; ++f) fut.push_back(lbl.at(f));
      w.pedestrian_ids.push_back(obs.pedestrian_id);
      w.history.push_back(std::move(hist));
      w.future.push_back(std::move(fut));
    }
    out.push_back(std::move(w));
  }
  return out;
}

int observed_count(const std::vector<ObservedPosition>& row) {
  return static_cast<int>(
      std::count_if(row.begin(), row.end(), [](const auto& p) { return p.is_observed(); }));
}

bool is_complete(const std::vector<ObservedPosition>& row) {
  return !row.empty() && observed_count(row) == static_cast<int>(row.size());
}

bool is_eligible(const std::vector<ObservedPosition>& history_row) {
  if (history_row.empty() || !history_row.back().is_observed()) return false;
  return observed_count(history_row) > 2;
}

Window materialize_mode(const Window& window, Mode mode) {
  Window out;
  out.scene_id = window.scene_id;
  out.t0 = window.t0;
  out.t_obs = window.t_obs;
  out.t_pred = window.t_pred;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const auto& row = window.history[i];
    const bool keep = mode == Mode::Filtration ? is_complete(row) : is_eligible(row);
    if (!keep) continue;
    out.pedestrian_ids.push_back(window.pedestrian_ids[i]);
    out.history.push_back(row);
    out.future.push_back(window.future[i]);
  }
  return out;
}

namespace {
void write_row(std::ostream& os, const std::vector<ObservedPosition>& row) {
  for (const auto& p : row) {
    if (p.is_observed()) {
      os << ' ' << format_double(p.x()) << ',' << format_double(p.y());
    } else {
      os << " _";
    }
  }
  os << '\n';
}
}  // namespace

std::string serialize(const Window& window) {
  std::ostringstream os;
  os << "window " << window.scene_id << ' ' << window.t0 << ' ' << window.t_obs << ' '
     << window.t_pred << ' ' << window.size() << '\n';
  for (std::size_t i = 0; i < window.size(); ++i) {
    os << window.pedestrian_ids[i] << '\n' << 'H';
    write_row(os, window.history[i]);
    os << 'F';
    write_row(os, window.future[i]);
  }
  return os.str();
}

}  // namespace stgnit
