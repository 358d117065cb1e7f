#include "stgnit/occupancy_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "stgnit/numfmt.hpp"

namespace stgnit {

OccupancyGrid::OccupancyGrid(Point2 origin, double resolution, int width, int height)
    : origin_(origin), resolution_(resolution), width_(width), height_(height) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  if (width < 0 || height < 0) throw std::invalid_argument("grid dimensions must be >= 0");
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t OccupancyGrid::index(int row, int col) const {
  if (row < 0 || row >= height_ || col < 0 || col >= width_) {
    throw std::out_of_range("grid cell out of range");
  }
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
         static_cast<std::size_t>(col);
}

bool OccupancyGrid::occupied(int row, int col) const { return cells_[index(row, col)] != 0; }

void OccupancyGrid::set_occupied(int row, int col, bool value) {
  cells_[index(row, col)] = value ? 1 : 0;
}

Point2 OccupancyGrid::cell_center(int row, int col) const {
  return {origin_.x + (col + 0.5) * resolution_, origin_.y + (row + 0.5) * resolution_};
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

OccupancyGrid rasterize(const PointCloud& cloud, const RasterizeOptions& options) {
  if (!(options.resolution > 0.0)) throw std::invalid_argument("rasterize: resolution must be > 0");
  if (!(options.z_min < options.z_max)) throw std::invalid_argument("rasterize: z_min must be < z_max");
  if (options.count_threshold < 1) throw std::invalid_argument("rasterize: count_threshold must be >= 1");
  if (cloud.points.empty()) return OccupancyGrid({0.0, 0.0}, options.resolution, 0, 0);

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw std::invalid_argument("rasterize: point cloud contains non-finite coordinates");
    }
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  const double res = options.resolution;
  // Snap the origin to the resolution lattice so cells line up across clouds.
  const Point2 origin{std::floor(min_x / res) * res, std::floor(min_y / res) * res};
  const auto cell_of = [&](double v, double o) { return static_cast<int>(std::floor((v - o) / res)); };
  const int width = cell_of(max_x, origin.x) + 1;
  const int height = cell_of(max_y, origin.y) + 1;
  OccupancyGrid grid(origin, res, width, height);

  std::vector<int> counts(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
  for (const auto& p : cloud.points) {
    if (p.z < options.z_min || p.z > options.z_max) continue;
    const int c = std::clamp(cell_of(p.x, origin.x), 0, width - 1);
    const int r = std::clamp(cell_of(p.y, origin.y), 0, height - 1);
    ++counts[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)];
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (counts[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c)] >=
          options.count_threshold) {
        grid.set_occupied(r, c);
      }
    }
  }
  return grid;
}

std::vector<Point2> occupied_points(const OccupancyGrid& grid) {
  std::vector<Point2> out;
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      if (grid.occupied(r, c)) out.push_back(grid.cell_center(r, c));
    }
  }
  return out;
}

double min_distance(const Point2& point, std::span<const Point2> set) {
  if (set.empty()) throw std::invalid_argument("min_distance: empty point set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, distance(point, q));
  return best;
}

std::vector<Point2> obstacles_near(const OccupancyGrid& grid, std::span<const Point2> trajectories,
                                   double od) {
  if (!(od > 0.0)) throw std::invalid_argument("obstacles_near: od must be > 0");
  std::vector<Point2> out;
  if (trajectories.empty()) return out;
  for (const auto& p : occupied_points(grid)) {
    if (min_distance(p, trajectories) < od) out.push_back(p);
  }
  return out;
}

std::vector<Point2> thin_obstacles(std::vector<Point2> obstacles, double fd) {
  if (fd < 0.0) throw std::invalid_argument("thin_obstacles: fd must be >= 0");
  std::sort(obstacles.begin(), obstacles.end());
  std::vector<Point2> kept;
  for (const auto& p : obstacles) {
    const bool crowded =
        std::any_of(kept.begin(), kept.end(), [&](const Point2& q) { return distance(p, q) < fd; });
    if (!crowded) kept.push_back(p);
  }
  return kept;
}

void write_grid(std::ostream& os, const OccupancyGrid& grid) {
  os << "ogrid v1 " << grid.width() << ' ' << grid.height() << ' ' << format_double(grid.origin().x)
     << ' ' << format_double(grid.origin().y) << ' ' << format_double(grid.resolution()) << '\n';
  for (int r = 0; r < grid.height(); ++r) {
    std::string line(static_cast<std::size_t>(grid.width()), '.');
    for (int c = 0; c < grid.width(); ++c) {
      if (grid.occupied(r, c)) line[static_cast<std::size_t>(c)] = '#';
    }
    os << line << '\n';
  }
}

OccupancyGrid read_grid(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw DataError("grid: missing header");
  std::istringstream hs(header);
  std::string magic, version, xs, ys, rs;
  int width = -1;
  int height = -1;
  hs >> magic >> version >> width >> height >> xs >> ys >> rs;
  double x0 = 0, y0 = 0, res = 0;
  if (!hs || magic != "ogrid" || version != "v1" || width < 0 || height < 0 ||
      !parse_double(xs, x0) || !parse_double(ys, y0) || !parse_double(rs, res) || !(res > 0.0)) {
    throw DataError("grid: malformed header '" + header + "'");
  }
  OccupancyGrid grid({x0, y0}, res, width, height);
  std::string line;
  for (int r = 0; r < height; ++r) {
    if (!std::getline(is, line)) {
      throw DataError("grid: expected " + std::to_string(height) + " rows, got " + std::to_string(r));
    }
    if (static_cast<int>(line.size()) != width) {
      throw DataError("grid: row " + std::to_string(r) + " has width " + std::to_string(line.size()));
    }
    for (int c = 0; c < width; ++c) {
      const char ch = line[static_cast<std::size_t>(c)];
      if (ch == '#') {
        grid.set_occupied(r, c);
      } else if (ch != '.') {
        throw DataError("grid: invalid cell character at row " + std::to_string(r));
      }
    }
  }
  return grid;
}

void save_grid(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write grid file '" + path + "'");
  write_grid(os, grid);
  if (!os) throw std::runtime_error("failed writing grid file '" + path + "'");
}

OccupancyGrid load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open grid file '" + path + "'");
  return read_grid(is);
}

PointCloud load_point_cloud(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open point cloud '" + path + "'");
  PointCloud cloud;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Point3 p;
    if (!(ls >> p.x)) continue;
    if (!(ls >> p.y >> p.z) || !std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected three finite numbers");
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

void save_point_cloud(const PointCloud& cloud, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write point cloud '" + path + "'");
  for (const auto& p : cloud.points) {
    os << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << '\n';
  }
}

}  // namespace stgnit
