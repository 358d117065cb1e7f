#pragma once

#include <string>
#include <vector>

#include "stgnit/core_data.hpp"
#include "stgnit/occupancy_map.hpp"

namespace stgnit {

struct PlotTrack {
  std::string pedestrian_id;
  std::vector<Point2> history;
  std::vector<Point2> label;
  std::vector<std::vector<Point2>> candidates;
};

struct PlotWindow {
  std::string title;
  std::vector<PlotTrack> tracks;
  const OccupancyGrid* grid = nullptr;
  std::string metadata;  // embedded verbatim (escaped) in the SVG
};

// Occupied cells in grey, histories blue, labels green, candidates red dashed.
std::string render_svg(const PlotWindow& window);

}  // namespace stgnit
