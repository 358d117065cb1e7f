#pragma once

#include <string>
#include <vector>

#include "stgnit/config.hpp"
#include "stgnit/train_eval.hpp"

namespace stgnit {

// Command implementations shared by the C API and the tests. Every artifact
// they write embeds the run config.

// Loads the configured dataset (observation view, label view, grids). With
// `corrupted`, the observation view is a corrupted copy of the label view.
Dataset load_dataset(const RunConfig& config, bool corrupted = false);

// Validates and canonicalizes a scene file. Returns the scene count.
std::size_t ingest(const std::string& input, const std::string& output);

// Rasterizes a point-cloud file into a grid file. Returns the occupied count.
std::size_t make_grid(const std::string& cloud_path, const std::string& grid_path, const RasterizeOptions& options);

// Writes <dir>/scenes.jsonl, <dir>/grids/<id>.ogrid and <dir>/clouds/<id>.xyz.
void synthesize(const RunConfig& config, const std::string& dir);

// Writes <dir>/observation.jsonl (corrupted) and <dir>/label.jsonl.
void corrupt_files(const RunConfig& config, const std::string& dir);

std::string checkpoint_metadata(const RunConfig& config, const std::string& extra_json = "{}");

// Trains from `init` (or fresh parameters when null) on the configured dataset.
// With a non-empty out directory, writes checkpoint.stgnit after every epoch
// and history.jsonl at the end.
TrainResult run_training(const RunConfig& config, const ModelParams* init = nullptr);

// One row per configured condition.
EvalReport run_evaluation(const ModelParams& params, const RunConfig& config,
                          const std::string& model_metadata = "{}");

// JSONL prediction records after a {"config": ...} header line. Returns the
// number of records.
std::size_t run_prediction(const ModelParams& params, const RunConfig& config, const std::string& out_path);

// One SVG per (scene, t0) in the prediction file. Returns the image count.
std::size_t run_plot(const RunConfig& config, const std::string& predictions_path, const std::string& out_dir);

}  // namespace stgnit
