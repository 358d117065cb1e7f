#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "stgnit/core_data.hpp"
#include "stgnit/tensor.hpp"

namespace stgnit {

enum class NodeKind { Pedestrian, Obstacle };

// Observation flags, on[t][i] for frame t and node i.
using ObservationFlags = std::vector<std::vector<bool>>;

// Spatio-temporal graph for one window. All tensors are in slot order; slot s
// holds entity order[s], where entities are the window's pedestrians (0..m-1)
// followed by injected obstacles.
struct STGraph {
  Tensor V;   // [T, n, 4]    x, y, dx, dy
  Tensor A;   // [T, n, n, 4] relative state
  Tensor No;  // [T, n, 4]    node observation codes
  Tensor Eo;  // [T, n, n, 4] edge observation codes
  ObservationFlags on;           // [T][n]
  std::vector<NodeKind> kinds;   // [n]
  std::vector<int> order;        // [n] slot -> entity
  std::vector<Point2> anchors;   // [n] last observed position per slot

  int frames() const { return V.empty() ? 0 : V.dim(0); }
  int nodes() const { return static_cast<int>(kinds.size()); }
  int pedestrian_count() const;
  // Slot holding entity e.
  int slot_of(int entity) const;
};

struct GraphOptions {
  double cluster_eps = 1.0;  // DBSCAN radius
  int cluster_min_pts = 1;
  bool cluster = true;       // false keeps entity order
  bool encode = true;        // false replaces every code word by [1,1,1,1]
};

struct NodeTensors {
  Tensor V;  // [T, n, 4]
  ObservationFlags on;
};

NodeTensors build_nodes(const Window& window);
Tensor build_edges(const Tensor& V);

struct ObservationCodes {
  Tensor No;
  Tensor Eo;
};
ObservationCodes encode_observation_states(const ObservationFlags& on);

// DBSCAN over the points; clusters in order of their smallest index, members
// ascending, noise last.
std::vector<int> order_nodes_dbscan(std::span<const Point2> positions, double eps, int min_pts);

// Cluster label per point (-1 for noise), clusters numbered by discovery.
std::vector<int> dbscan(std::span<const Point2> positions, double eps, int min_pts);

STGraph build_graph(const Window& window, const GraphOptions& options = {});
STGraph inject_obstacles(const STGraph& graph, std::span<const Point2> obstacles,
                         const GraphOptions& options = {});

// "stgraph v1 T n" then kinds, order, V, A, No, Eo lines in decimal text.
void write_graph_dump(std::ostream& os, const STGraph& graph);

}  // namespace stgnit
