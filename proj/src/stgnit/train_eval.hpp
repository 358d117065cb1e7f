#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stgnit/core_data.hpp"
#include "stgnit/occupancy_map.hpp"
#include "stgnit/params.hpp"
#include "stgnit/predictor.hpp"

namespace stgnit {

// Paired views of the same scenes plus the grids they reference by grid_ref.
struct Dataset {
  std::string name = "dataset";
  std::vector<Scene> observation;
  std::vector<Scene> label;
  std::map<std::string, std::shared_ptr<const OccupancyGrid>> grids;
};

// One materialized window ready for the network.
struct Sample {
  Window window;
  std::shared_ptr<const OccupancyGrid> grid;
  // Pedestrians that count towards metrics; empty means all of them.
  std::vector<bool> scored;
};

// Windows of every scene materialized in `mode`. Windows without pedestrians
// or without any future label are skipped.
std::vector<Sample> make_samples(const Dataset& dataset, Mode mode, int t_obs = kDefaultObsLen,
                                 int t_pred = kDefaultPredLen, int stride = 1);

// Pairs windows of two sample sets by (scene, t0) and restricts scoring in
// both to the pedestrians present in both. Unpaired windows and windows
// without a common labelled pedestrian are dropped.
void align_scored(std::vector<Sample>& a, std::vector<Sample>& b);

struct Ablation {
  bool no_obs = false;
  bool no_code = false;
  bool no_clu = false;

  std::string label() const;  // "full" or e.g. "no_obs+no_clu"
  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct InteractionParams {
  double od = 0.8;  // obstacle search radius
  double ad = 1.0;  // clustering radius
  double fd = 1.0;  // obstacle thinning radius
};

PredictorConfig predictor_config(const Ablation& ablation, const InteractionParams& interaction = {});

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 16;
  int epochs = 200;
  Mode mode = Mode::Pad;
  Ablation ablation;
  InteractionParams interaction;
  std::uint64_t seed = 0;
  // Stop once an epoch's mean loss falls below this value.
  std::optional<double> stop_below;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int batch, double loss);
  int epoch;
  int batch;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

// Called after every epoch with the updated parameters.
using EpochCallback = std::function<void(const EpochRecord&, const ModelParams&)>;

// Adaptive-moment optimizer state over a ModelParams layout.
class Adam {
 public:
  Adam(const ModelConfig& config, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step(ModelParams& params, const ModelParams& grad);
  long steps() const { return t_; }

 private:
  ModelParams m_, v_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
};

// Mean winner-takes-all loss of one batch and its gradient, from the
// second-pass graph under the current parameters.
double batch_gradient(const ModelParams& params, const std::vector<const Sample*>& batch,
                      const std::vector<const STGraph*>& pass1_graphs, const PredictorConfig& config,
                      ModelParams& grad);

TrainResult train(const std::vector<Sample>& samples, ModelParams init, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct EvalMetrics {
  double min_ade = 0.0;
  double min_fde = 0.0;
  int windows = 0;
  int pedestrians = 0;  // scored pedestrians with at least one label
  bool empty = true;
};

// Best-of-K metrics pooled over every scored, labelled pedestrian of every
// window: ADE over labelled frames, FDE over pedestrians whose final frame is
// labelled. Does not modify params.
EvalMetrics evaluate_samples(const ModelParams& params, const std::vector<Sample>& samples,
                             const PredictorConfig& config);

struct EvalRow {
  std::string dataset;
  Mode train_mode = Mode::Pad;
  Mode test_mode = Mode::Pad;
  bool corrupted = false;
  std::string ablation = "full";
  EvalMetrics metrics;
  std::string semantics;
};

std::string condition_semantics(Mode train_mode, Mode test_mode, bool corrupted);

struct EvalReport {
  std::string provenance_json = "{}";
  std::vector<EvalRow> rows;
};

void write_report_json(std::ostream& os, const EvalReport& report);
void write_report_text(std::ostream& os, const EvalReport& report);
void write_history_jsonl(std::ostream& os, const std::vector<EpochRecord>& history);

}  // namespace stgnit
