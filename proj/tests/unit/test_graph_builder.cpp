#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "stgnit/graph_builder.hpp"
#include "support.hpp"

using namespace stgnit;

namespace {

using Row = std::vector<ObservedPosition>;

ObservedPosition at(double x, double y) { return ObservedPosition::observed(x, y); }
ObservedPosition gap() { return ObservedPosition::unobserved(); }

Window window_of(std::vector<Row> history) {
  Window w;
  w.t_obs = static_cast<int>(history.front().size());
  w.t_pred = 1;
  for (std::size_t i = 0; i < history.size(); ++i) w.pedestrian_ids.push_back("p" + std::to_string(i));
  w.history = std::move(history);
  w.future.assign(w.history.size(), Row{at(0, 0)});
  return w;
}

std::vector<double> vec(const Tensor& t, int a, int b) { return {t(a, b, 0), t(a, b, 1), t(a, b, 2), t(a, b, 3)}; }
std::vector<double> vec(const Tensor& t, int a, int b, int c) {
  return {t(a, b, c, 0), t(a, b, c, 1), t(a, b, c, 2), t(a, b, c, 3)};
}

const std::vector<double> kFull{1, 1, 1, 1}, kBack{1, 1, 0, 0}, kNone{0, 0, 0, 0};

}  // namespace

TEST_CASE("node features") {
  const auto nodes = build_nodes(window_of({{at(2, 3), at(2, 3), at(2, 3)}}));
  for (int t = 0; t < 3; ++t) CHECK(vec(nodes.V, t, 0) == std::vector<double>{2, 3, 0, 0});

  const auto moving = build_nodes(window_of({{at(0, 0), at(1, 0)}}));
  CHECK(vec(moving.V, 1, 0) == std::vector<double>{1, 0, 1, 0});
  CHECK(vec(moving.V, 0, 0) == std::vector<double>{0, 0, 0, 0});

  const auto gapped = build_nodes(window_of({{at(4, 4), gap(), at(5, 5), at(6, 5)}}));
  CHECK(vec(gapped.V, 1, 0) == std::vector<double>{0, 0, 0, 0});
  CHECK(vec(gapped.V, 2, 0) == std::vector<double>{5, 5, 0, 0});
  CHECK(vec(gapped.V, 3, 0) == std::vector<double>{6, 5, 1, 0});
  CHECK(gapped.on == ObservationFlags{{true}, {false}, {true}, {true}});
}

TEST_CASE("edge features are pairwise differences") {
  Tensor V({1, 2, 4});
  V(0, 0, 0) = 1;
  V(0, 0, 2) = 1;
  const Tensor A = build_edges(V);
  CHECK(vec(A, 0, 0, 1) == std::vector<double>{1, 0, 1, 0});
  CHECK(vec(A, 0, 1, 0) == std::vector<double>{-1, 0, -1, 0});
  CHECK(vec(A, 0, 0, 0) == kNone);
}

TEST_CASE("observation codes follow the code tables") {
  const ObservationFlags on{{true, true, false}, {true, false, true}, {false, true, true}};
  const auto codes = encode_observation_states(on);
  // First frame uses its own state as predecessor.
  CHECK(vec(codes.No, 0, 0) == kFull);
  CHECK(vec(codes.No, 0, 2) == kNone);
  CHECK(vec(codes.No, 1, 0) == kFull);
  CHECK(vec(codes.No, 1, 2) == kBack);
  CHECK(vec(codes.No, 2, 0) == kNone);
  CHECK(vec(codes.No, 2, 1) == kBack);
  // i observed at both frames, j unobserved at t: conjunction false.
  CHECK(vec(codes.Eo, 1, 0, 1) == kNone);
  CHECK(vec(codes.Eo, 1, 0, 0) == kFull);
  CHECK(vec(codes.Eo, 2, 1, 2) == kBack);
}

TEST_CASE("code words are exhaustive over two-frame states") {
  // Every (ON_t, ON_t-1) pair for two nodes: 16 combinations.
  std::set<std::vector<double>> node_words, edge_words;
  for (unsigned bits = 0; bits < 16; ++bits) {
    const bool i_prev = bits & 1u, i_now = bits & 2u, j_prev = bits & 4u, j_now = bits & 8u;
    const auto codes = encode_observation_states({{i_prev, j_prev}, {i_now, j_now}});
    const auto expect = [](bool now, bool before) { return !now ? kNone : (before ? kFull : kBack); };
    CHECK(vec(codes.No, 1, 0) == expect(i_now, i_prev));
    CHECK(vec(codes.No, 1, 1) == expect(j_now, j_prev));
    CHECK(vec(codes.Eo, 1, 0, 1) == expect(i_now && j_now, i_prev && j_prev));
    CHECK(vec(codes.Eo, 1, 1, 0) == vec(codes.Eo, 1, 0, 1));
    node_words.insert(vec(codes.No, 1, 0));
    edge_words.insert(vec(codes.Eo, 1, 0, 1));
  }
  const std::set<std::vector<double>> table{kFull, kBack, kNone};
  CHECK(node_words == table);
  CHECK(edge_words == table);
}

TEST_CASE("clustering reproduces the six-node ordering example") {
  // Clusters {1,4}, {2,5,6}, {3} in one-based labels.
  const std::vector<Point2> pts{{0, 0}, {5, 0}, {10, 0}, {0.5, 0.3}, {5.6, 0.4}, {6.2, 0.2}};
  const auto order = order_nodes_dbscan(pts, 1.0, 1);
  CHECK(order == std::vector<int>{0, 3, 1, 4, 5, 2});
  const std::vector<Point2> apart{{0, 0}, {2, 0}, {4, 0}};
  CHECK(order_nodes_dbscan(apart, 1.0, 1) == std::vector<int>{0, 1, 2});
  // Exactly eps apart counts as a neighbour.
  const std::vector<Point2> edge{{0, 0}, {3, 0}, {1, 0}};
  CHECK(order_nodes_dbscan(edge, 1.0, 1) == std::vector<int>{0, 2, 1});
  // Noise goes last when min_pts excludes singletons.
  CHECK(order_nodes_dbscan(edge, 1.0, 2) == std::vector<int>{0, 2, 1});
  const std::vector<Point2> noisy{{9, 9}, {0, 0}, {0.5, 0}};
  CHECK(order_nodes_dbscan(noisy, 1.0, 2) == std::vector<int>{1, 2, 0});
}

TEST_CASE("clustering yields contiguous clusters on random geometry") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(15));
    std::vector<Point2> pts;
    for (int k = 0; k < n; ++k) pts.push_back({rng.uniform(0, 6), rng.uniform(0, 6)});
    const auto order = order_nodes_dbscan(pts, 1.0, 1);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < n; ++k) REQUIRE(sorted[static_cast<std::size_t>(k)] == k);
    const auto labels = dbscan(pts, 1.0, 1);
    // Brute-force connectivity: same label iff linked by a chain of <= eps hops.
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (distance(pts[static_cast<std::size_t>(a)], pts[static_cast<std::size_t>(b)]) <= 1.0)
          CHECK(labels[static_cast<std::size_t>(a)] == labels[static_cast<std::size_t>(b)]);
    std::set<int> closed;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int lab = labels[static_cast<std::size_t>(order[k])];
      if (k > 0 && labels[static_cast<std::size_t>(order[k - 1])] != lab) closed.insert(labels[static_cast<std::size_t>(order[k - 1])]);
      CHECK_FALSE(closed.count(lab));
      if (k > 0 && lab == labels[static_cast<std::size_t>(order[k - 1])]) CHECK(order[k] > order[k - 1]);
    }
    // Relabelling permutes the same partition.
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) perm[static_cast<std::size_t>(k)] = k;
    rng.shuffle(perm);
    std::vector<Point2> permuted(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) permuted[static_cast<std::size_t>(k)] = pts[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    const auto plabels = dbscan(permuted, 1.0, 1);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        CHECK((plabels[static_cast<std::size_t>(a)] == plabels[static_cast<std::size_t>(b)]) ==
              (labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])] ==
               labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(b)])]));
  }
}

TEST_CASE("graph invariants on random windows") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Window w = test::random_window(rng, 1 + static_cast<int>(rng.index(6)), 8, 12, 0.6);
    const STGraph g = build_graph(w);
    const int n = g.nodes();
    CHECK(g.V.shape() == std::vector<int>{8, n, 4});
    CHECK(g.A.shape() == std::vector<int>{8, n, n, 4});
    CHECK(g.Eo.shape() == std::vector<int>{8, n, n, 4});
    for (int t = 0; t < 8; ++t)
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < 4; ++c) CHECK(g.A(t, i, j, c) + g.A(t, j, i, c) == 0.0);
        if (!g.on[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) CHECK(vec(g.V, t, i) == kNone);
      }
    std::vector<int> order = g.order;
    std::sort(order.begin(), order.end());
    for (int k = 0; k < n; ++k) CHECK(order[static_cast<std::size_t>(k)] == k);
  }
}

TEST_CASE("obstacle injection") {
  const Window w = window_of({{at(1, 1), at(1, 1), at(1, 1)}, {at(9, 9), at(9, 9), at(9, 9)}});
  const STGraph g = build_graph(w);
  CHECK(inject_obstacles(g, {}).V == g.V);
  const std::vector<Point2> obstacles{{1, 1}};
  const STGraph h = inject_obstacles(g, obstacles);
  CHECK(h.nodes() == 3);
  CHECK(h.pedestrian_count() == 2);
  const int s = h.slot_of(2);
  CHECK(h.kinds[static_cast<std::size_t>(s)] == NodeKind::Obstacle);
  // Clustered next to the pedestrian it coincides with.
  CHECK(h.order == std::vector<int>{0, 2, 1});
  for (int t = 0; t < 3; ++t) {
    CHECK(vec(h.V, t, s) == std::vector<double>{1, 1, 0, 0});
    CHECK(vec(h.No, t, s) == kFull);
    CHECK(vec(h.A, t, s, h.slot_of(0)) == kNone);
  }
  CHECK(h.anchors[static_cast<std::size_t>(s)] == Point2{1, 1});
}

TEST_CASE("ablation switches") {
  const Window w = window_of({{gap(), at(5, 5), at(5, 5)}, {at(0, 0), at(0, 0), at(0, 0)}});
  GraphOptions plain;
  plain.cluster = false;
  plain.encode = false;
  const STGraph g = build_graph(w, plain);
  CHECK(g.order == std::vector<int>{0, 1});
  for (double v : g.No.values()) CHECK(v == 1.0);
  for (double v : g.Eo.values()) CHECK(v == 1.0);
  const STGraph c = build_graph(w);
  CHECK(c.order == std::vector<int>{0, 1});
  CHECK(vec(c.No, 0, 0) == kNone);
}

TEST_CASE("unobserved frames contribute zero features") {
  const Window a = window_of({{at(1, 2), gap(), at(3, 4)}});
  const auto nodes = build_nodes(a);
  CHECK(vec(nodes.V, 1, 0) == kNone);
  CHECK(vec(nodes.V, 2, 0) == std::vector<double>{3, 4, 0, 0});
}

TEST_CASE("graph dump format") {
  const STGraph g = build_graph(window_of({{at(1, 1), at(2, 1)}}));
  std::ostringstream os;
  write_graph_dump(os, g);
  CHECK(os.str().rfind("stgraph v1 2 1\n", 0) == 0);
}
