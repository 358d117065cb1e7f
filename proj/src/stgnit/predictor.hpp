#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stgnit/core_data.hpp"
#include "stgnit/metrics.hpp"
#include "stgnit/graph_builder.hpp"
#include "stgnit/network.hpp"
#include "stgnit/occupancy_map.hpp"
#include "stgnit/params.hpp"

namespace stgnit {

struct PredictorConfig {
  double od = 0.8;  // obstacle search radius around pass-1 trajectories
  double fd = 1.0;  // obstacle thinning radius
  GraphOptions graph;
  bool use_obstacles = true;     // false: single pass (obstacle ablation)
  bool all_candidates = false;   // obstacle search over every head, not just head 0
};

struct PredictionResult {
  Tensor candidates;         // [K, P, m, 2], window pedestrian order
  std::vector<int> chosen;   // per pedestrian; head 0 unless labels selected another
  Tensor pass1;              // [P, m, 2] head-0 trajectories of the first pass
  std::vector<Point2> obstacles_used;
  std::vector<bool> eligibility;
  bool second_pass = false;  // true when obstacle nodes were injected
  STGraph graph;             // graph of the final pass

  bool empty() const { return chosen.empty(); }
};

// Candidate rows of the window's pedestrians, [K, P, m, 2], reordered from
// slot order back to pedestrian order.
Tensor pedestrian_rows(const Tensor& slot_positions, const STGraph& graph);

// Ground truth and label mask of the window's future, arranged by graph slot:
// gt [P, n, 2], mask[t][s]. Obstacle slots carry no labels.
struct SlotLabels {
  Tensor gt;
  LabelMask mask;
};
SlotLabels slot_labels(const Window& window, const STGraph& graph);

// Obstacles for the second pass: occupied cells within od of the pass-1
// trajectories, thinned by fd.
std::vector<Point2> select_obstacles(const OccupancyGrid& grid, const Tensor& pass1_candidates,
                                     const PredictorConfig& config);

// Graph for the final pass; `pass1_graph` must come from build_graph.
STGraph second_pass_graph(const ModelParams& params, const STGraph& pass1_graph, const OccupancyGrid* grid,
                          const PredictorConfig& config, std::vector<Point2>* obstacles = nullptr);

// Pass 1 without environment, obstacle lookup, pass 2 with obstacle nodes.
// Without a grid (or with use_obstacles off) only the first pass runs.
PredictionResult predict_two_pass(const Window& window, const OccupancyGrid* grid, const ModelParams& params,
                                  const PredictorConfig& config = {});

// Throws DataError when the scene names a grid other than `grid_id`.
void check_grid_matches(const Scene& scene, const std::optional<std::string>& grid_id);

// Seconds from first observation until the eligibility rule first holds, with
// the first observed frame counted as one frame period; nullopt if never.
std::optional<double> response_latency(const Track& track, double frame_rate_hz = 2.5,
                                       int t_obs = kDefaultObsLen);

}  // namespace stgnit
