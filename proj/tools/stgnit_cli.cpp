#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stgnit/stgnit.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Common {
  std::string config_path;
  std::string mode;
  std::string dataset;
  std::string labels;
  std::string grid;
  std::vector<std::string> ablate;
  std::string seed;
  std::string out;
  std::string checkpoint;
  std::vector<std::string> overrides;
};

struct ConfigDeleter {
  void operator()(stgnit_config* c) const { stgnit_config_free(c); }
};
struct ModelDeleter {
  void operator()(stgnit_model* m) const { stgnit_model_free(m); }
};
using ConfigPtr = std::unique_ptr<stgnit_config, ConfigDeleter>;
using ModelPtr = std::unique_ptr<stgnit_model, ModelDeleter>;

int report(stgnit_status s) {
  if (s == STGNIT_OK) return 0;
  std::fprintf(stderr, "error: %s\n", stgnit_last_error());
  return s == STGNIT_ERR_INTERNAL ? kExitData : static_cast<int>(s);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--mode", c.mode, "train/test mode pair")->check(CLI::IsMember({"ff", "pp", "pf"}));
  cmd->add_option("--dataset", c.dataset, "scene JSONL file (observation view)");
  cmd->add_option("--labels", c.labels, "scene JSONL file holding the label view");
  cmd->add_option("--grid", c.grid, "grid file, or directory of <grid_ref>.ogrid files");
  cmd->add_option("--ablate", c.ablate, "disable a module")->check(CLI::IsMember({"obs", "code", "clu"}));
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--set", c.overrides, "config override key=value");
}

// Config from file, then flags. Returns an exit code, 0 on success.
int build_config(const Common& c, ConfigPtr& out) {
  stgnit_config* raw = nullptr;
  stgnit_status s = c.config_path.empty() ? stgnit_config_new(&raw) : stgnit_config_load(c.config_path.c_str(), &raw);
  if (s != STGNIT_OK) return report(s);
  out.reset(raw);
  const auto set = [&](const char* key, const std::string& value) {
    if (value.empty()) return STGNIT_OK;
    return stgnit_config_set(raw, key, value.c_str());
  };
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return kExitUsage;
    }
    if ((s = stgnit_config_set(raw, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str())) != STGNIT_OK) return report(s);
  }
  if (!c.mode.empty() && (s = stgnit_config_set_mode(raw, c.mode.c_str())) != STGNIT_OK) return report(s);
  for (const auto& a : c.ablate) {
    if ((s = stgnit_config_add_ablation(raw, a.c_str())) != STGNIT_OK) return report(s);
  }
  if ((s = set("dataset", c.dataset)) != STGNIT_OK) return report(s);
  if ((s = set("labels", c.labels)) != STGNIT_OK) return report(s);
  if ((s = set("grid", c.grid)) != STGNIT_OK) return report(s);
  if ((s = set("seed", c.seed)) != STGNIT_OK) return report(s);
  if ((s = set("checkpoint", c.checkpoint)) != STGNIT_OK) return report(s);
  if ((s = set("out", c.out)) != STGNIT_OK) return report(s);
  return 0;
}

int load_model(const Common& c, stgnit_config* config, ModelPtr& out) {
  if (c.checkpoint.empty()) {
    std::fprintf(stderr, "error: --checkpoint is required\n");
    return kExitUsage;
  }
  stgnit_model* raw = nullptr;
  if (auto s = stgnit_model_load(c.checkpoint.c_str(), &raw); s != STGNIT_OK) return report(s);
  out.reset(raw);
  return report(stgnit_config_adopt_model(config, raw));
}

int require_out(const Common& c) {
  if (!c.out.empty()) return 0;
  std::fprintf(stderr, "error: --out is required\n");
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian trajectory prediction with gapped tracks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(stgnit_version()));

  Common c;
  std::string input, predictions;

  auto* ingest = app.add_subcommand("ingest", "validate and canonicalize a scene file");
  ingest->add_option("input", input, "scene JSONL file")->required();
  ingest->add_option("--out", c.out, "canonical output file")->required();

  auto* make_grid = app.add_subcommand("make-grid", "rasterize a point cloud into an occupancy grid");
  make_grid->add_option("cloud", input, "point cloud (x y z per line)")->required();
  make_grid->add_option("--config", c.config_path, "JSON run config")->check(CLI::ExistingFile);
  make_grid->add_option("--set", c.overrides, "config override key=value");
  make_grid->add_option("--out", c.out, "grid file")->required();

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset with grids and point clouds");
  add_common(synth, c);

  auto* corrupt = app.add_subcommand("corrupt", "write corrupted observation and label views");
  add_common(corrupt, c);

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, c);
  train->add_option("--checkpoint", c.checkpoint, "initial model");

  auto* eval = app.add_subcommand("eval", "evaluate a model");
  add_common(eval, c);
  eval->add_option("--checkpoint", c.checkpoint, "model file")->required();

  auto* predict = app.add_subcommand("predict", "write candidate trajectories");
  add_common(predict, c);
  predict->add_option("--checkpoint", c.checkpoint, "model file")->required();

  auto* plot = app.add_subcommand("plot", "render predictions as SVG images");
  add_common(plot, c);
  plot->add_option("--predictions", predictions, "prediction records")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (ingest->parsed()) {
    size_t n = 0;
    if (int rc = report(stgnit_ingest(input.c_str(), c.out.c_str(), &n))) return rc;
    std::printf("ingested %zu scenes into %s\n", n, c.out.c_str());
    return 0;
  }

  ConfigPtr config;
  const std::string out = c.out;
  if (make_grid->parsed()) c.out.clear();
  if (int rc = build_config(c, config)) return rc;

  if (make_grid->parsed()) {
    stgnit_grid* grid = nullptr;
    if (int rc = report(stgnit_grid_from_cloud(input.c_str(), config.get(), &grid))) return rc;
    int w = 0, h = 0;
    stgnit_grid_size(grid, &w, &h);
    const size_t occupied = stgnit_grid_occupied(grid);
    const int rc = report(stgnit_grid_save(grid, out.c_str()));
    stgnit_grid_free(grid);
    if (rc) return rc;
    if (w == 0 || h == 0) std::fprintf(stderr, "warning: point cloud is empty; wrote a 0x0 grid\n");
    std::printf("grid %dx%d, %zu occupied cells -> %s\n", w, h, occupied, out.c_str());
    return 0;
  }
  if (synth->parsed()) {
    if (int rc = require_out(c)) return rc;
    if (int rc = report(stgnit_synth(config.get(), c.out.c_str()))) return rc;
    std::printf("synthetic dataset written to %s\n", c.out.c_str());
    return 0;
  }
  if (corrupt->parsed()) {
    if (int rc = require_out(c)) return rc;
    if (int rc = report(stgnit_corrupt(config.get(), c.out.c_str()))) return rc;
    std::printf("observation and label views written to %s\n", c.out.c_str());
    return 0;
  }
  if (train->parsed()) {
    ModelPtr init;
    if (!c.checkpoint.empty()) {
      if (int rc = load_model(c, config.get(), init)) return rc;
    }
    stgnit_model* model = nullptr;
    int epochs = 0;
    double loss = 0.0;
    if (int rc = report(stgnit_train(config.get(), init.get(), &model, &epochs, &loss))) return rc;
    ModelPtr trained(model);
    std::printf("trained %d epochs, final loss %.6g\n", epochs, loss);
    if (!c.out.empty()) std::printf("checkpoint and history written to %s\n", c.out.c_str());
    return 0;
  }
  if (eval->parsed()) {
    ModelPtr model;
    if (int rc = load_model(c, config.get(), model)) return rc;
    char* text = nullptr;
    if (int rc = report(stgnit_eval(model.get(), config.get(), c.out.empty() ? nullptr : c.out.c_str(), &text)))
      return rc;
    std::fputs(text, stdout);
    stgnit_string_free(text);
    return 0;
  }
  if (predict->parsed()) {
    if (int rc = require_out(c)) return rc;
    ModelPtr model;
    if (int rc = load_model(c, config.get(), model)) return rc;
    size_t n = 0;
    if (int rc = report(stgnit_predict(model.get(), config.get(), c.out.c_str(), &n))) return rc;
    std::printf("%zu prediction records written to %s\n", n, c.out.c_str());
    return 0;
  }
  if (plot->parsed()) {
    if (int rc = require_out(c)) return rc;
    size_t n = 0;
    if (int rc = report(stgnit_plot(config.get(), predictions.c_str(), c.out.c_str(), &n))) return rc;
    std::printf("%zu images written to %s\n", n, c.out.c_str());
    return 0;
  }
  return kExitUsage;
}
