#include "stgnit/graph_builder.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "stgnit/numfmt.hpp"

namespace stgnit {

int STGraph::pedestrian_count() const {
  return static_cast<int>(std::count(kinds.begin(), kinds.end(), NodeKind::Pedestrian));
}

int STGraph::slot_of(int entity) const {
  auto it = std::find(order.begin(), order.end(), entity);
  if (it == order.end()) throw std::out_of_range("STGraph::slot_of: unknown entity");
  return static_cast<int>(it - order.begin());
}

NodeTensors build_nodes(const Window& window) {
  const int T = window.t_obs;
  const int n = static_cast<int>(window.size());
  NodeTensors out{Tensor({T, n, 4}), ObservationFlags(static_cast<std::size_t>(T), std::vector<bool>(static_cast<std::size_t>(n)))};
  for (int i = 0; i < n; ++i) {
    const auto& row = window.history[static_cast<std::size_t>(i)];
    for (int t = 0; t < T; ++t) {
      const ObservedPosition& p = row[static_cast<std::size_t>(t)];
      out.on[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = p.is_observed();
      if (!p.is_observed()) continue;
      out.V(t, i, 0) = p.x();
      out.V(t, i, 1) = p.y();
      // Velocity needs both endpoints observed; an unobserved frame zeroes
      // its own delta and the next one.
      if (t > 0 && row[static_cast<std::size_t>(t - 1)].is_observed()) {
        out.V(t, i, 2) = p.x() - row[static_cast<std::size_t>(t - 1)].x();
        out.V(t, i, 3) = p.y() - row[static_cast<std::size_t>(t - 1)].y();
      }
    }
  }
  return out;
}

Tensor build_edges(const Tensor& V) {
  const int T = V.dim(0);
  const int n = V.dim(1);
  Tensor A({T, n, n, 4});
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < 4; ++c) A(t, i, j, c) = V(t, i, c) - V(t, j, c);
      }
    }
  }
  return A;
}

namespace {

// (now, before): (T,T) -> 1111, (T,F) -> 1100, (F,*) -> 0000.
void write_code(bool now, bool before, double* out) {
  const double hi = now ? 1.0 : 0.0;
  const double lo = (now && before) ? 1.0 : 0.0;
  out[0] = hi;
  out[1] = hi;
  out[2] = lo;
  out[3] = lo;
}

}  // namespace

ObservationCodes encode_observation_states(const ObservationFlags& on) {
  const int T = static_cast<int>(on.size());
  const int n = T > 0 ? static_cast<int>(on.front().size()) : 0;
  ObservationCodes codes{Tensor({T, n, 4}), Tensor({T, n, n, 4})};
  for (int t = 0; t < T; ++t) {
    // The first frame has no predecessor; it is treated as unchanged.
    const auto& now = on[static_cast<std::size_t>(t)];
    const auto& before = on[static_cast<std::size_t>(t > 0 ? t - 1 : 0)];
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      write_code(now[ui], before[ui], &codes.No(t, i, 0));
      for (int j = 0; j < n; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        write_code(now[ui] && now[uj], before[ui] && before[uj], &codes.Eo(t, i, j, 0));
      }
    }
  }
  return codes;
}

std::vector<int> dbscan(std::span<const Point2> positions, double eps, int min_pts) {
  if (eps < 0.0) throw std::invalid_argument("dbscan: eps must be >= 0");
  if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");
  const int n = static_cast<int>(positions.size());
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(static_cast<std::size_t>(n), kUnvisited);
  const auto neighbours = [&](int p) {
    std::vector<int> out;
    for (int q = 0; q < n; ++q) {
      if (distance(positions[static_cast<std::size_t>(p)], positions[static_cast<std::size_t>(q)]) <= eps) {
        out.push_back(q);
      }
    }
    return out;
  };
  int cluster = 0;
  for (int p = 0; p < n; ++p) {
    if (label[static_cast<std::size_t>(p)] != kUnvisited) continue;
    auto seeds = neighbours(p);
    if (static_cast<int>(seeds.size()) < min_pts) {
      label[static_cast<std::size_t>(p)] = kNoise;
      continue;
    }
    label[static_cast<std::size_t>(p)] = cluster;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const int q = seeds[k];
      auto& lq = label[static_cast<std::size_t>(q)];
      if (lq == kNoise) lq = cluster;  // border point
      if (lq != kUnvisited) continue;
      lq = cluster;
      auto more = neighbours(q);
      if (static_cast<int>(more.size()) >= min_pts) seeds.insert(seeds.end(), more.begin(), more.end());
    }
    ++cluster;
  }
  return label;
}

std::vector<int> order_nodes_dbscan(std::span<const Point2> positions, double eps, int min_pts) {
  const auto labels = dbscan(positions, eps, min_pts);
  const int n = static_cast<int>(labels.size());
  const int clusters = labels.empty() ? 0 : std::max(0, *std::max_element(labels.begin(), labels.end()) + 1);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(clusters));
  std::vector<int> noise;
  for (int i = 0; i < n; ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    (l < 0 ? noise : members[static_cast<std::size_t>(l)]).push_back(i);
  }
  // Members are already ascending; order clusters by their smallest member.
  std::sort(members.begin(), members.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  for (const auto& m : members) order.insert(order.end(), m.begin(), m.end());
  order.insert(order.end(), noise.begin(), noise.end());
  return order;
}

namespace {

STGraph assemble(const Tensor& V_entity, const ObservationFlags& on_entity,
                 const std::vector<NodeKind>& kinds, const std::vector<Point2>& anchors,
                 const GraphOptions& options) {
  const int T = V_entity.dim(0);
  const int n = V_entity.dim(1);
  STGraph g;
  if (options.cluster) {
    g.order = order_nodes_dbscan(anchors, options.cluster_eps, options.cluster_min_pts);
  } else {
    g.order.resize(static_cast<std::size_t>(n));
    std::iota(g.order.begin(), g.order.end(), 0);
  }
  g.V = Tensor({T, n, 4});
  g.on.assign(static_cast<std::size_t>(T), std::vector<bool>(static_cast<std::size_t>(n)));
  for (int s = 0; s < n; ++s) {
    const int e = g.order[static_cast<std::size_t>(s)];
    g.kinds.push_back(kinds[static_cast<std::size_t>(e)]);
    g.anchors.push_back(anchors[static_cast<std::size_t>(e)]);
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < 4; ++c) g.V(t, s, c) = V_entity(t, e, c);
      g.on[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] =
          on_entity[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
    }
  }
  g.A = build_edges(g.V);
  if (options.encode) {
    auto codes = encode_observation_states(g.on);
    g.No = std::move(codes.No);
    g.Eo = std::move(codes.Eo);
  } else {
    g.No = Tensor({T, n, 4}, 1.0);
    g.Eo = Tensor({T, n, n, 4}, 1.0);
  }
  return g;
}

}  // namespace

STGraph build_graph(const Window& window, const GraphOptions& options) {
  auto nodes = build_nodes(window);
  std::vector<Point2> anchors;
  for (std::size_t i = 0; i < window.size(); ++i) {
    auto last = window.last_observed(i);
    if (!last) throw std::invalid_argument("build_graph: pedestrian without any observed frame");
    anchors.push_back(*last);
  }
  std::vector<NodeKind> kinds(window.size(), NodeKind::Pedestrian);
  return assemble(nodes.V, nodes.on, kinds, anchors, options);
}

STGraph inject_obstacles(const STGraph& graph, std::span<const Point2> obstacles,
                         const GraphOptions& options) {
  if (obstacles.empty()) return graph;
  const int T = graph.frames();
  const int n0 = graph.nodes();
  const int n = n0 + static_cast<int>(obstacles.size());
  Tensor V({T, n, 4});
  ObservationFlags on(static_cast<std::size_t>(T), std::vector<bool>(static_cast<std::size_t>(n), true));
  std::vector<NodeKind> kinds(static_cast<std::size_t>(n), NodeKind::Obstacle);
  std::vector<Point2> anchors(static_cast<std::size_t>(n));
  for (int s = 0; s < n0; ++s) {
    const int e = graph.order[static_cast<std::size_t>(s)];
    kinds[static_cast<std::size_t>(e)] = graph.kinds[static_cast<std::size_t>(s)];
    anchors[static_cast<std::size_t>(e)] = graph.anchors[static_cast<std::size_t>(s)];
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < 4; ++c) V(t, e, c) = graph.V(t, s, c);
      on[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] =
          graph.on[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)];
    }
  }
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    const int e = n0 + static_cast<int>(k);
    anchors[static_cast<std::size_t>(e)] = obstacles[k];
    for (int t = 0; t < T; ++t) {
      V(t, e, 0) = obstacles[k].x;
      V(t, e, 1) = obstacles[k].y;
    }
  }
  return assemble(V, on, kinds, anchors, options);
}

namespace {
void write_values(std::ostream& os, const char* name, const Tensor& t) {
  os << name;
  for (double v : t.values()) os << ' ' << format_double(v);
  os << '\n';
}
}  // namespace

void write_graph_dump(std::ostream& os, const STGraph& graph) {
  os << "stgraph v1 " << graph.frames() << ' ' << graph.nodes() << '\n';
  os << "kinds";
  for (auto k : graph.kinds) os << ' ' << (k == NodeKind::Pedestrian ? 'P' : 'O');
  os << "\norder";
  for (int e : graph.order) os << ' ' << e;
  os << '\n';
  write_values(os, "V", graph.V);
  write_values(os, "A", graph.A);
  write_values(os, "No", graph.No);
  write_values(os, "Eo", graph.Eo);
}

}  // namespace stgnit
