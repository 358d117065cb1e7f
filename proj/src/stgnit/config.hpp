#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgnit/benchmark.hpp"
#include "stgnit/occupancy_map.hpp"
#include "stgnit/params.hpp"
#include "stgnit/train_eval.hpp"

namespace stgnit {

// One evaluation condition: train/test modes plus clean or corrupted input.
struct EvalCondition {
  Mode train_mode = Mode::Pad;
  Mode test_mode = Mode::Pad;
  bool corrupted = false;

  std::string label() const;  // e.g. "pp-clean"
  friend bool operator==(const EvalCondition&, const EvalCondition&) = default;
};

// "ff", "pp" or "pf", optionally suffixed "-clean" / "-corrupted".
EvalCondition parse_condition(const std::string& s);

// Every tunable of every command, with the published defaults.
struct RunConfig {
  ModelConfig model;
  InteractionParams interaction;
  double learning_rate = 0.001;
  int batch_size = 16;
  int epochs = 200;
  Mode train_mode = Mode::Pad;
  Mode test_mode = Mode::Pad;
  Ablation ablation;
  bool all_candidates = false;
  std::uint64_t seed = 0;
  int stride = 1;
  double drop_fraction = 0.1;
  std::uint64_t corruption_seed = 0;
  std::vector<EvalCondition> conditions;  // empty: the mode pair, clean and corrupted
  RasterizeOptions raster;
  BenchmarkSpec synth;
  std::string dataset;     // scene JSONL (observation view)
  std::string labels;      // label view; empty: same as dataset
  std::string grid;        // grid file, or directory of <grid_ref>.ogrid files
  std::string checkpoint;  // model file
  std::string out;

  void validate() const;
  TrainConfig train_config() const;
  PredictorConfig predictor() const;
};

// Unknown keys and mistyped values throw std::invalid_argument.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config, int indent = -1);
// Applies one "key=value" style override; value is JSON or a bare string.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace stgnit
