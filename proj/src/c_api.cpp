#include "stgnit/stgnit.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "stgnit/config.hpp"
#include "stgnit/dataset_io.hpp"
#include "stgnit/workflow.hpp"

struct stgnit_config {
  stgnit::RunConfig value;
};
struct stgnit_scenes {
  std::vector<stgnit::Scene> value;
};
struct stgnit_grid {
  stgnit::OccupancyGrid value;
};
struct stgnit_model {
  stgnit::ModelParams value;
  std::string metadata = "{}";
};

namespace {

thread_local std::string last_error;

stgnit_status fail(stgnit_status s, const std::string& message) {
  last_error = message;
  return s;
}

template <typename F>
stgnit_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return STGNIT_OK;
  } catch (const stgnit::TrainingDiverged& e) {
    return fail(STGNIT_ERR_DIVERGED, e.what());
  } catch (const stgnit::DataError& e) {
    return fail(STGNIT_ERR_DATA, e.what());
  } catch (const stgnit::CheckpointError& e) {
    return fail(STGNIT_ERR_DATA, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(STGNIT_ERR_DATA, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(STGNIT_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(STGNIT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(STGNIT_ERR_INTERNAL, e.what());
  }
}

stgnit_status null_arg(const char* name) { return fail(STGNIT_ERR_USAGE, std::string(name) + " is NULL"); }

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* stgnit_last_error(void) { return last_error.c_str(); }
const char* stgnit_version(void) { return "1.0.0"; }
void stgnit_string_free(char* s) { delete[] s; }

stgnit_status stgnit_config_new(stgnit_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new stgnit_config{}; });
}

stgnit_status stgnit_config_load(const char* path, stgnit_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new stgnit_config{stgnit::load_config(path)}; });
}

stgnit_status stgnit_config_set(stgnit_config* config, const char* key, const char* value) {
  if (!config) return null_arg("config");
  if (!key || !value) return null_arg("key/value");
  return guarded([&] { stgnit::apply_override(config->value, key, value); });
}

stgnit_status stgnit_config_set_mode(stgnit_config* config, const char* mode_pair) {
  if (!config) return null_arg("config");
  if (!mode_pair) return null_arg("mode_pair");
  return guarded([&] {
    const std::string pair(mode_pair);
    if (pair.find('-') != std::string::npos) throw std::invalid_argument("mode must be ff, pp or pf");
    const auto cond = stgnit::parse_condition(pair);
    config->value.train_mode = cond.train_mode;
    config->value.test_mode = cond.test_mode;
    config->value.conditions.clear();
  });
}

stgnit_status stgnit_config_add_ablation(stgnit_config* config, const char* name) {
  if (!config) return null_arg("config");
  if (!name) return null_arg("name");
  return guarded([&] {
    const std::string n(name);
    if (n == "obs") config->value.ablation.no_obs = true;
    else if (n == "code") config->value.ablation.no_code = true;
    else if (n == "clu") config->value.ablation.no_clu = true;
    else throw std::invalid_argument("unknown ablation '" + n + "' (expected obs, code or clu)");
  });
}

stgnit_status stgnit_config_to_json(const stgnit_config* config, char** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] { *out = copy_string(stgnit::config_to_json(config->value, 2)); });
}

void stgnit_config_free(stgnit_config* config) { delete config; }

stgnit_status stgnit_scenes_load(const char* path, stgnit_scenes** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new stgnit_scenes{stgnit::load_scenes(path)}; });
}

stgnit_status stgnit_scenes_save(const stgnit_scenes* scenes, const char* path) {
  if (!scenes) return null_arg("scenes");
  if (!path) return null_arg("path");
  return guarded([&] { stgnit::save_scenes(scenes->value, path); });
}

size_t stgnit_scenes_count(const stgnit_scenes* scenes) { return scenes ? scenes->value.size() : 0; }

size_t stgnit_scenes_observed(const stgnit_scenes* scenes) {
  if (!scenes) return 0;
  size_t n = 0;
  for (const auto& s : scenes->value)
    for (const auto& t : s.tracks)
      for (const auto& p : t.positions) n += p.is_observed() ? 1 : 0;
  return n;
}

stgnit_status stgnit_scenes_corrupt(const stgnit_scenes* scenes, const stgnit_config* config,
                                    stgnit_scenes** observation_out) {
  if (!scenes) return null_arg("scenes");
  if (!config) return null_arg("config");
  if (!observation_out) return null_arg("observation_out");
  return guarded([&] {
    stgnit::CorruptionSpec spec;
    spec.drop_fraction = config->value.drop_fraction;
    spec.seed = config->value.corruption_seed;
    spec.label_only_tail = config->value.model.t_pred;
    *observation_out = new stgnit_scenes{stgnit::corrupt(scenes->value, spec).observation};
  });
}

void stgnit_scenes_free(stgnit_scenes* scenes) { delete scenes; }

stgnit_status stgnit_grid_from_cloud(const char* cloud_path, const stgnit_config* config, stgnit_grid** out) {
  if (!cloud_path) return null_arg("cloud_path");
  if (!out) return null_arg("out");
  return guarded([&] {
    const stgnit::RasterizeOptions opts = config ? config->value.raster : stgnit::RasterizeOptions{};
    *out = new stgnit_grid{stgnit::rasterize(stgnit::load_point_cloud(cloud_path), opts)};
  });
}

stgnit_status stgnit_grid_load(const char* path, stgnit_grid** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new stgnit_grid{stgnit::load_grid(path)}; });
}

stgnit_status stgnit_grid_save(const stgnit_grid* grid, const char* path) {
  if (!grid) return null_arg("grid");
  if (!path) return null_arg("path");
  return guarded([&] { stgnit::save_grid(grid->value, path); });
}

size_t stgnit_grid_occupied(const stgnit_grid* grid) { return grid ? grid->value.occupied_count() : 0; }

void stgnit_grid_size(const stgnit_grid* grid, int* width, int* height) {
  if (width) *width = grid ? grid->value.width() : 0;
  if (height) *height = grid ? grid->value.height() : 0;
}

void stgnit_grid_free(stgnit_grid* grid) { delete grid; }

stgnit_status stgnit_model_new(const stgnit_config* config, stgnit_model** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    config->value.model.validate();
    *out = new stgnit_model{stgnit::initialize_params(config->value.model, config->value.seed)};
  });
}

stgnit_status stgnit_model_load(const char* path, stgnit_model** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    std::string meta;
    auto params = stgnit::load_checkpoint(path, &meta);
    *out = new stgnit_model{std::move(params), meta};
  });
}

stgnit_status stgnit_model_save(const stgnit_model* model, const stgnit_config* config, const char* path) {
  if (!model) return null_arg("model");
  if (!path) return null_arg("path");
  return guarded([&] {
    const std::string meta = config ? stgnit::checkpoint_metadata(config->value) : model->metadata;
    stgnit::save_checkpoint(model->value, path, meta);
  });
}

size_t stgnit_model_parameter_count(const stgnit_model* model) { return model ? model->value.parameter_count() : 0; }

stgnit_status stgnit_config_adopt_model(stgnit_config* config, const stgnit_model* model) {
  if (!config) return null_arg("config");
  if (!model) return null_arg("model");
  return guarded([&] {
    config->value.model = model->value.config;
    // A model trained with ablations is evaluated with them unless the
    // config already names some.
    const auto meta = nlohmann::json::parse(model->metadata, nullptr, false);
    const auto& a = config->value.ablation;
    if (a.no_obs || a.no_code || a.no_clu || meta.is_discarded()) return;
    if (!meta.contains("config") || !meta["config"].contains("ablate")) return;
    for (const auto& name : meta["config"]["ablate"]) {
      if (name == "obs") config->value.ablation.no_obs = true;
      if (name == "code") config->value.ablation.no_code = true;
      if (name == "clu") config->value.ablation.no_clu = true;
    }
  });
}

void stgnit_model_free(stgnit_model* model) { delete model; }

stgnit_status stgnit_ingest(const char* input_path, const char* output_path, size_t* scenes_out) {
  if (!input_path || !output_path) return null_arg("path");
  return guarded([&] {
    const size_t n = stgnit::ingest(input_path, output_path);
    if (scenes_out) *scenes_out = n;
  });
}

stgnit_status stgnit_synth(const stgnit_config* config, const char* out_dir) {
  if (!config) return null_arg("config");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { stgnit::synthesize(config->value, out_dir); });
}

stgnit_status stgnit_corrupt(const stgnit_config* config, const char* out_dir) {
  if (!config) return null_arg("config");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { stgnit::corrupt_files(config->value, out_dir); });
}

stgnit_status stgnit_train(const stgnit_config* config, const stgnit_model* init, stgnit_model** out,
                           int* epochs_run, double* final_loss) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    auto r = stgnit::run_training(config->value, init ? &init->value : nullptr);
    if (epochs_run) *epochs_run = static_cast<int>(r.history.size());
    if (final_loss) *final_loss = r.history.empty() ? 0.0 : r.history.back().loss;
    *out = new stgnit_model{std::move(r.params), stgnit::checkpoint_metadata(config->value)};
  });
}

stgnit_status stgnit_eval(const stgnit_model* model, const stgnit_config* config, const char* out_dir,
                          char** text_out) {
  if (!model) return null_arg("model");
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto report = stgnit::run_evaluation(model->value, config->value, model->metadata);
    std::ostringstream text;
    stgnit::write_report_text(text, report);
    if (out_dir) {
      namespace fs = std::filesystem;
      fs::create_directories(out_dir);
      std::ofstream json(fs::path(out_dir) / "report.json");
      stgnit::write_report_json(json, report);
      std::ofstream txt(fs::path(out_dir) / "report.txt");
      txt << text.str();
      if (!json || !txt) throw stgnit::DataError(std::string("cannot write report under '") + out_dir + "'");
    }
    if (text_out) *text_out = copy_string(text.str());
  });
}

stgnit_status stgnit_predict(const stgnit_model* model, const stgnit_config* config, const char* out_path,
                             size_t* records_out) {
  if (!model) return null_arg("model");
  if (!config) return null_arg("config");
  if (!out_path) return null_arg("out_path");
  return guarded([&] {
    const size_t n = stgnit::run_prediction(model->value, config->value, out_path);
    if (records_out) *records_out = n;
  });
}

stgnit_status stgnit_plot(const stgnit_config* config, const char* predictions_path, const char* out_dir,
                          size_t* images_out) {
  if (!config) return null_arg("config");
  if (!predictions_path || !out_dir) return null_arg("path");
  return guarded([&] {
    const size_t n = stgnit::run_plot(config->value, predictions_path, out_dir);
    if (images_out) *images_out = n;
  });
}

}  // extern "C"
