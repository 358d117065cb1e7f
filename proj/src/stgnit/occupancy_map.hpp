#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stgnit/core_data.hpp"

namespace stgnit {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PointCloud {
  std::vector<Point3> points;
};

// Row-major occupancy raster. Cell (r, c) is centred at
// (origin.x + (c + 0.5) * resolution, origin.y + (r + 0.5) * resolution).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(Point2 origin, double resolution, int width, int height);

  const Point2& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool occupied(int row, int col) const;
  void set_occupied(int row, int col, bool value = true);
  Point2 cell_center(int row, int col) const;
  std::size_t occupied_count() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t index(int row, int col) const;

  Point2 origin_{};
  double resolution_ = 1.0;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> cells_;
};

struct RasterizeOptions {
  double resolution = 0.2;
  double z_min = 0.2;
  double z_max = 2.0;
  int count_threshold = 3;
};

// Cells with at least count_threshold in-band points are occupied. The grid
// covers the xy extent of every point, in-band or not.
OccupancyGrid rasterize(const PointCloud& cloud, const RasterizeOptions& options = {});

std::vector<Point2> occupied_points(const OccupancyGrid& grid);

// Throws std::invalid_argument on an empty set.
double min_distance(const Point2& point, std::span<const Point2> set);

// Occupied cell centres strictly closer than `od` to some trajectory point.
std::vector<Point2> obstacles_near(const OccupancyGrid& grid, std::span<const Point2> trajectories,
                                   double od);

// Greedy thinning in lexicographic order: a point survives iff no previously
// kept point is closer than `fd`.
std::vector<Point2> thin_obstacles(std::vector<Point2> obstacles, double fd);

// "ogrid v1 <width> <height> <x0> <y0> <resolution>" then `height` lines of
// '.'/'#', row 0 first.
void write_grid(std::ostream& os, const OccupancyGrid& grid);
OccupancyGrid read_grid(std::istream& is);
void save_grid(const OccupancyGrid& grid, const std::string& path);
OccupancyGrid load_grid(const std::string& path);

// Whitespace-separated "x y z" per line; '#' starts a comment.
PointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace stgnit
