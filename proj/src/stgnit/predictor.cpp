#include "stgnit/predictor.hpp"

namespace stgnit {

Tensor pedestrian_rows(const Tensor& slot_positions, const STGraph& graph) {
  const int K = slot_positions.dim(0), P = slot_positions.dim(1);
  const int m = graph.pedestrian_count();
  Tensor out({K, P, m, 2});
  for (int s = 0; s < graph.nodes(); ++s) {
    if (graph.kinds[static_cast<std::size_t>(s)] != NodeKind::Pedestrian) continue;
    const int e = graph.order[static_cast<std::size_t>(s)];
    for (int k = 0; k < K; ++k) {
      for (int t = 0; t < P; ++t) {
        out(k, t, e, 0) = slot_positions(k, t, s, 0);
        out(k, t, e, 1) = slot_positions(k, t, s, 1);
      }
    }
  }
  return out;
}

SlotLabels slot_labels(const Window& window, const STGraph& graph) {
  const int P = window.t_pred, n = graph.nodes();
  SlotLabels out{Tensor({P, n, 2}), LabelMask(static_cast<std::size_t>(P), std::vector<bool>(static_cast<std::size_t>(n), false))};
  for (int s = 0; s < n; ++s) {
    if (graph.kinds[static_cast<std::size_t>(s)] != NodeKind::Pedestrian) continue;
    const auto& row = window.future.at(static_cast<std::size_t>(graph.order[static_cast<std::size_t>(s)]));
    for (int t = 0; t < P; ++t) {
      const auto& p = row.at(static_cast<std::size_t>(t));
      if (!p.is_observed()) continue;
      out.gt(t, s, 0) = p.x();
      out.gt(t, s, 1) = p.y();
      out.mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = true;
    }
  }
  return out;
}

std::vector<Point2> select_obstacles(const OccupancyGrid& grid, const Tensor& pass1_candidates,
                                     const PredictorConfig& config) {
  std::vector<Point2> trajectory_points;
  const int K = config.all_candidates ? pass1_candidates.dim(0) : 1;
  for (int k = 0; k < K; ++k) {
    for (int t = 0; t < pass1_candidates.dim(1); ++t) {
      for (int i = 0; i < pass1_candidates.dim(2); ++i) {
        trajectory_points.push_back({pass1_candidates(k, t, i, 0), pass1_candidates(k, t, i, 1)});
      }
    }
  }
  return thin_obstacles(obstacles_near(grid, trajectory_points, config.od), config.fd);
}

STGraph second_pass_graph(const ModelParams& params, const STGraph& pass1_graph, const OccupancyGrid* grid,
                          const PredictorConfig& config, std::vector<Point2>* obstacles) {
  if (!grid || !config.use_obstacles) return pass1_graph;
  const auto first = forward(params, pass1_graph);
  auto obs = select_obstacles(*grid, pedestrian_rows(first.positions, pass1_graph), config);
  STGraph g = inject_obstacles(pass1_graph, obs, config.graph);
  if (obstacles) *obstacles = std::move(obs);
  return g;
}

PredictionResult predict_two_pass(const Window& window, const OccupancyGrid* grid, const ModelParams& params,
                                  const PredictorConfig& config) {
  PredictionResult r;
  if (window.empty()) return r;
  if (window.t_obs != params.config.t_obs || window.t_pred != params.config.t_pred) {
    throw std::invalid_argument("predict: window lengths do not match the model");
  }
  for (const auto& row : window.history) r.eligibility.push_back(is_eligible(row));
  const STGraph g1 = build_graph(window, config.graph);
  const auto first = forward(params, g1);
  const Tensor cands1 = pedestrian_rows(first.positions, g1);
  const int P = cands1.dim(1), m = cands1.dim(2);
  r.pass1 = Tensor({P, m, 2});
  for (int t = 0; t < P; ++t) {
    for (int i = 0; i < m; ++i) {
      r.pass1(t, i, 0) = cands1(0, t, i, 0);
      r.pass1(t, i, 1) = cands1(0, t, i, 1);
    }
  }
  r.chosen.assign(static_cast<std::size_t>(m), 0);
  if (grid && config.use_obstacles) r.obstacles_used = select_obstacles(*grid, cands1, config);
  if (r.obstacles_used.empty()) {
    r.candidates = cands1;
    r.graph = g1;
    return r;
  }
  r.graph = inject_obstacles(g1, r.obstacles_used, config.graph);
  r.second_pass = true;
  r.candidates = pedestrian_rows(forward(params, r.graph).positions, r.graph);
  return r;
}

void check_grid_matches(const Scene& scene, const std::optional<std::string>& grid_id) {
  if (scene.grid_ref && grid_id && *scene.grid_ref != *grid_id) {
    throw DataError("scene '" + scene.scene_id + "' is registered to grid '" + *scene.grid_ref +
                    "', but grid '" + *grid_id + "' was supplied");
  }
}

std::optional<double> response_latency(const Track& track, double frame_rate_hz, int t_obs) {
  if (!(frame_rate_hz > 0.0)) throw std::invalid_argument("response_latency: frame rate must be > 0");
  Frame first_seen = -1;
  for (std::size_t k = 0; k < track.positions.size(); ++k) {
    if (track.positions[k].is_observed()) {
      first_seen = track.first_frame + static_cast<Frame>(k);
      break;
    }
  }
  if (first_seen < 0) return std::nullopt;
  for (Frame f = first_seen; f <= track.last_frame(); ++f) {
    std::vector<ObservedPosition> row;
    for (Frame h = f - t_obs + 1; h <= f; ++h) row.push_back(track.at(h));
    if (is_eligible(row)) return static_cast<double>(f - first_seen + 1) / frame_rate_hz;
  }
  return std::nullopt;
}

}  // namespace stgnit
