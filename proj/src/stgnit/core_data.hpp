#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stgnit {

// Raised for malformed input data (bad records, broken invariants in files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
  friend auto operator<=>(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

// A per-frame position that is either observed (finite x, y) or unobserved
// (no coordinates at all).
class ObservedPosition {
 public:
  ObservedPosition() = default;

  static ObservedPosition observed(double x, double y);
  static ObservedPosition observed(const Point2& p) { return observed(p.x, p.y); }
  static ObservedPosition unobserved() { return {}; }

  bool is_observed() const { return observed_; }
  // Only meaningful when is_observed().
  const Point2& point() const;
  double x() const { return point().x; }
  double y() const { return point().y; }

  friend bool operator==(const ObservedPosition& a, const ObservedPosition& b) {
    return a.observed_ == b.observed_ && (!a.observed_ || a.p_ == b.p_);
  }

 private:
  bool observed_ = false;
  Point2 p_{};
};

using Frame = std::int64_t;

struct Track {
  std::string pedestrian_id;
  Frame first_frame = 0;
  std::vector<ObservedPosition> positions;  // contiguous from first_frame

  Frame last_frame() const { return first_frame + static_cast<Frame>(positions.size()) - 1; }
  // Outside the track lifetime the pedestrian is absent, which reads as unobserved.
  ObservedPosition at(Frame frame) const;

  friend bool operator==(const Track&, const Track&) = default;
};

struct Scene {
  std::string scene_id;
  double frame_rate_hz = 2.5;
  std::vector<Track> tracks;
  std::optional<std::string> grid_ref;

  bool empty() const;
  Frame first_frame() const;
  Frame last_frame() const;
  Frame frame_count() const;
  // Throws DataError when frame_rate_hz <= 0 or a track is empty.
  void validate() const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

inline constexpr int kDefaultObsLen = 8;
inline constexpr int kDefaultPredLen = 12;

// One prediction sample. history[i] covers frames t0-t_obs+1 .. t0 and
// future[i] covers t0+1 .. t0+t_pred for pedestrian i.
struct Window {
  std::string scene_id;
  Frame t0 = 0;
  int t_obs = kDefaultObsLen;
  int t_pred = kDefaultPredLen;
  std::vector<std::string> pedestrian_ids;
  std::vector<std::vector<ObservedPosition>> history;
  std::vector<std::vector<ObservedPosition>> future;

  std::size_t size() const { return pedestrian_ids.size(); }
  // A materialized window with no retained pedestrians; callers skip these.
  bool empty() const { return pedestrian_ids.empty(); }
  // label_mask()[t][i]: future frame t of pedestrian i carries a label.
  std::vector<std::vector<bool>> label_mask() const;
  // Last observed history position of pedestrian i (the decoder anchor).
  std::optional<Point2> last_observed(std::size_t i) const;

  friend bool operator==(const Window&, const Window&) = default;
};

enum class Mode { Filtration, Pad };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

// Windows over one scene. History comes from `observation_view`, labels from
// `label_view`; both must describe the same scene. The single-scene overload
// uses the scene for both.
std::vector<Window> slice_windows(const Scene& scene, int t_obs = kDefaultObsLen,
                                  int t_pred = kDefaultPredLen, int stride = 1);
std::vector<Window> slice_windows(const Scene& observation_view, const Scene& label_view,
                                  int t_obs = kDefaultObsLen, int t_pred = kDefaultPredLen,
                                  int stride = 1);

int observed_count(const std::vector<ObservedPosition>& row);
bool is_complete(const std::vector<ObservedPosition>& row);
// Latest frame observed and more than two observed frames overall.
bool is_eligible(const std::vector<ObservedPosition>& history_row);

Window materialize_mode(const Window& window, Mode mode);

// Deterministic text form used for byte-level comparisons and debugging.
std::string serialize(const Window& window);

}  // namespace stgnit
