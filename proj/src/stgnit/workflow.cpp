#include "stgnit/workflow.hpp"

#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "stgnit/dataset_io.hpp"
#include "stgnit/plot.hpp"

namespace stgnit {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

Json config_json(const RunConfig& c) { return Json::parse(config_to_json(c)); }

// Attaches grids to the scenes, either one grid file for every scene or a
// directory of <grid_ref>.ogrid files.
std::map<std::string, std::shared_ptr<const OccupancyGrid>> attach_grids(const RunConfig& c,
                                                                        std::vector<Scene>& obs,
                                                                        std::vector<Scene>& lbl) {
  std::map<std::string, std::shared_ptr<const OccupancyGrid>> grids;
  fs::path source = c.grid;
  if (source.empty()) {
    const fs::path guess = fs::path(c.dataset).parent_path() / "grids";
    if (!fs::is_directory(guess)) return grids;
    source = guess;
  }
  if (fs::is_directory(source)) {
    for (const auto& s : obs) {
      if (!s.grid_ref || grids.count(*s.grid_ref)) continue;
      const fs::path file = source / (*s.grid_ref + ".ogrid");
      if (!fs::exists(file)) {
        throw DataError("scene '" + s.scene_id + "': grid '" + *s.grid_ref + "' not found in " + source.string());
      }
      grids[*s.grid_ref] = std::make_shared<const OccupancyGrid>(load_grid(file.string()));
    }
    return grids;
  }
  const std::string id = source.stem().string();
  auto grid = std::make_shared<const OccupancyGrid>(load_grid(source.string()));
  for (auto* view : {&obs, &lbl}) {
    for (auto& s : *view) {
      check_grid_matches(s, id);
      s.grid_ref = id;
    }
  }
  grids[id] = grid;
  return grids;
}

std::vector<EvalCondition> conditions_of(const RunConfig& c) {
  if (!c.conditions.empty()) return c.conditions;
  return {{c.train_mode, c.test_mode, false}, {c.train_mode, c.test_mode, true}};
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return out;
}

}  // namespace

Dataset load_dataset(const RunConfig& c, bool corrupted) {
  if (c.dataset.empty()) throw std::invalid_argument("no dataset given (--dataset)");
  Dataset d;
  d.name = fs::path(c.dataset).stem().string();
  d.observation = load_scenes(c.dataset);
  d.label = c.labels.empty() ? d.observation : load_scenes(c.labels);
  if (d.observation.size() != d.label.size()) {
    throw DataError("observation and label files hold different scene counts");
  }
  for (std::size_t k = 0; k < d.observation.size(); ++k) {
    if (d.observation[k].scene_id != d.label[k].scene_id) {
      throw DataError("scene " + std::to_string(k) + " differs between observation and label files");
    }
  }
  if (corrupted) {
    CorruptionSpec spec;
    spec.drop_fraction = c.drop_fraction;
    spec.seed = c.corruption_seed;
    spec.label_only_tail = c.model.t_pred;
    d.observation = corrupt(d.label, spec).observation;
  }
  d.grids = attach_grids(c, d.observation, d.label);
  return d;
}

std::size_t ingest(const std::string& input, const std::string& output) {
  auto scenes = load_scenes(input);
  for (auto& s : scenes) {
    s.validate();
    canonicalize(s);
  }
  auto out = open_out(output);
  write_scenes(out, scenes);
  if (!out) throw DataError("failed writing '" + output + "'");
  return scenes.size();
}

std::size_t make_grid(const std::string& cloud_path, const std::string& grid_path, const RasterizeOptions& options) {
  const OccupancyGrid grid = rasterize(load_point_cloud(cloud_path), options);
  auto out = open_out(grid_path);
  write_grid(out, grid);
  return grid.occupied_count();
}

void synthesize(const RunConfig& c, const std::string& dir) {
  const Dataset d = make_benchmark(c.synth);
  fs::create_directories(fs::path(dir) / "grids");
  fs::create_directories(fs::path(dir) / "clouds");
  save_scenes(d.label, (fs::path(dir) / "scenes.jsonl").string());
  for (int k = 0; k < c.synth.scenes; ++k) {
    const SynthSpec spec = benchmark_scene_spec(c.synth, k);
    save_point_cloud(synthesize_cloud(spec), (fs::path(dir) / "clouds" / (spec.scene_id + ".xyz")).string());
  }
  for (const auto& [id, grid] : d.grids) save_grid(*grid, (fs::path(dir) / "grids" / (id + ".ogrid")).string());
  auto meta = open_out((fs::path(dir) / "config.json").string());
  meta << config_to_json(c, 2) << "\n";
}

void corrupt_files(const RunConfig& c, const std::string& dir) {
  const auto scenes = load_scenes(c.dataset);
  CorruptionSpec spec;
  spec.drop_fraction = c.drop_fraction;
  spec.seed = c.corruption_seed;
  spec.label_only_tail = c.model.t_pred;
  const auto views = corrupt(scenes, spec);
  fs::create_directories(dir);
  save_scenes(views.observation, (fs::path(dir) / "observation.jsonl").string());
  save_scenes(views.label, (fs::path(dir) / "label.jsonl").string());
}

std::string checkpoint_metadata(const RunConfig& c, const std::string& extra_json) {
  Json j;
  j["config"] = config_json(c);
  j["extra"] = Json::parse(extra_json);
  return j.dump();
}

TrainResult run_training(const RunConfig& c, const ModelParams* init) {
  c.validate();
  const Dataset d = load_dataset(c);
  const auto samples = make_samples(d, c.train_mode, c.model.t_obs, c.model.t_pred, c.stride);
  if (samples.empty()) throw DataError("dataset '" + c.dataset + "' yields no training windows");
  ModelParams start = init ? *init : initialize_params(c.model, c.seed);
  if (!(start.config == c.model)) throw std::invalid_argument("initial model does not match the configured shape");
  EpochCallback cb;
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    const std::string path = (fs::path(c.out) / "checkpoint.stgnit").string();
    cb = [&c, path](const EpochRecord& rec, const ModelParams& p) {
      Json extra;
      extra["epoch"] = rec.epoch;
      extra["loss"] = rec.loss;
      save_checkpoint(p, path, checkpoint_metadata(c, extra.dump()));
    };
  }
  TrainResult r = train(samples, std::move(start), c.train_config(), cb);
  if (!c.out.empty()) {
    auto out = open_out((fs::path(c.out) / "history.jsonl").string());
    Json header;
    header["config"] = config_json(c);
    out << header.dump() << "\n";
    write_history_jsonl(out, r.history);
  }
  return r;
}

EvalReport run_evaluation(const ModelParams& params, const RunConfig& c, const std::string& model_metadata) {
  c.validate();
  if (!(params.config == c.model)) throw std::invalid_argument("model shape does not match the configuration");
  EvalReport report;
  const PredictorConfig pcfg = c.predictor();
  std::map<bool, Dataset> data;
  for (const auto& cond : conditions_of(c)) {
    if (!data.count(cond.corrupted)) data.emplace(cond.corrupted, load_dataset(c, cond.corrupted));
    const Dataset& d = data.at(cond.corrupted);
    const auto samples = make_samples(d, cond.test_mode, c.model.t_obs, c.model.t_pred, c.stride);
    EvalRow row;
    row.dataset = d.name;
    row.train_mode = cond.train_mode;
    row.test_mode = cond.test_mode;
    row.corrupted = cond.corrupted;
    row.ablation = c.ablation.label();
    row.metrics = evaluate_samples(params, samples, pcfg);
    row.semantics = condition_semantics(cond.train_mode, cond.test_mode, cond.corrupted);
    report.rows.push_back(std::move(row));
  }
  Json prov;
  prov["config"] = config_json(c);
  prov["model"] = Json::parse(model_metadata);
  prov["seeds"] = {{"model", c.seed}, {"corruption", c.corruption_seed}};
  prov["metrics"] =
      "best of K heads per pedestrian; ADE pooled over labelled future frames, FDE over pedestrians whose "
      "final frame is labelled; unlabelled frames are masked out";
  prov["interaction"] = {
      {"od", "obstacle cells whose centre lies strictly closer than od to a pass-1 head-0 position"},
      {"ad", "DBSCAN radius over last observed positions, neighbours at distance <= ad, min_pts 1"},
      {"fd", "greedy lexicographic thinning, a cell is dropped when strictly closer than fd to a kept one"}};
  report.provenance_json = prov.dump();
  return report;
}

std::size_t run_prediction(const ModelParams& params, const RunConfig& c, const std::string& out_path) {
  c.validate();
  if (!(params.config == c.model)) throw std::invalid_argument("model shape does not match the configuration");
  const Dataset d = load_dataset(c);
  const auto samples = make_samples(d, c.test_mode, c.model.t_obs, c.model.t_pred, c.stride);
  auto out = open_out(out_path);
  Json header;
  header["config"] = config_json(c);
  out << header.dump() << "\n";
  std::size_t records = 0;
  const PredictorConfig pcfg = c.predictor();
  for (const auto& s : samples) {
    const PredictionResult r = predict_two_pass(s.window, s.grid.get(), params, pcfg);
    for (std::size_t i = 0; i < s.window.size(); ++i) {
      for (int k = 0; k < r.candidates.dim(0); ++k) {
        for (int t = 0; t < r.candidates.dim(1); ++t) {
          Json rec;
          rec["scene_id"] = s.window.scene_id;
          rec["t0"] = s.window.t0;
          rec["pedestrian_id"] = s.window.pedestrian_ids[i];
          rec["candidate"] = k;
          rec["t"] = s.window.t0 + 1 + t;
          rec["x"] = r.candidates(k, t, static_cast<int>(i), 0);
          rec["y"] = r.candidates(k, t, static_cast<int>(i), 1);
          out << rec.dump() << "\n";
          ++records;
        }
      }
    }
  }
  if (!out) throw DataError("failed writing '" + out_path + "'");
  return records;
}

std::size_t run_plot(const RunConfig& c, const std::string& predictions_path, const std::string& out_dir) {
  std::ifstream in(predictions_path);
  if (!in) throw DataError("cannot open predictions '" + predictions_path + "'");
  struct Key {
    std::string scene;
    Frame t0;
    auto operator<=>(const Key&) const = default;
  };
  // window -> pedestrian -> candidate -> frame -> point
  std::map<Key, std::map<std::string, std::map<int, std::map<Frame, Point2>>>> windows;
  std::vector<Key> order;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
      if (j.contains("config") && !j.contains("scene_id")) continue;
      const Key key{j.at("scene_id").get<std::string>(), j.at("t0").get<Frame>()};
      if (!windows.count(key)) order.push_back(key);
      windows[key][j.at("pedestrian_id").get<std::string>()][j.at("candidate").get<int>()][j.at("t").get<Frame>()] =
          {j.at("x").get<double>(), j.at("y").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw DataError(predictions_path + ":" + std::to_string(line_no) + ": bad prediction record: " + e.what());
    }
  }
  if (order.empty()) return 0;
  const Dataset d = load_dataset(c);
  fs::create_directories(out_dir);
  const std::string meta = config_to_json(c);
  std::size_t images = 0;
  for (const Key& key : order) {
    std::size_t k = 0;
    while (k < d.observation.size() && d.observation[k].scene_id != key.scene) ++k;
    if (k == d.observation.size()) throw DataError("prediction references unknown scene '" + key.scene + "'");
    const Scene& obs = d.observation[k];
    const Scene& lbl = d.label[k];
    PlotWindow pw;
    pw.title = key.scene + " t0=" + std::to_string(key.t0);
    pw.metadata = meta;
    if (obs.grid_ref && d.grids.count(*obs.grid_ref)) pw.grid = d.grids.at(*obs.grid_ref).get();
    for (const auto& [ped, cands] : windows.at(key)) {
      const auto find = [&](const Scene& s) -> const Track* {
        for (const auto& t : s.tracks)
          if (t.pedestrian_id == ped) return &t;
        return nullptr;
      };
      const Track* ho = find(obs);
      const Track* lo = find(lbl);
      if (!ho || !lo) throw DataError("prediction references unknown pedestrian '" + ped + "' in '" + key.scene + "'");
      PlotTrack pt;
      pt.pedestrian_id = ped;
      for (Frame f = key.t0 - c.model.t_obs + 1; f <= key.t0; ++f) {
        const auto p = ho->at(f);
        if (p.is_observed()) pt.history.push_back(p.point());
      }
      for (Frame f = key.t0 + 1; f <= key.t0 + c.model.t_pred; ++f) {
        const auto p = lo->at(f);
        if (p.is_observed()) pt.label.push_back(p.point());
      }
      for (const auto& [cand, frames] : cands) {
        std::vector<Point2> poly;
        if (!pt.history.empty()) poly.push_back(pt.history.back());
        for (const auto& [f, p] : frames) poly.push_back(p);
        pt.candidates.push_back(std::move(poly));
      }
      pw.tracks.push_back(std::move(pt));
    }
    auto out = open_out((fs::path(out_dir) / (safe_name(key.scene) + "_" + std::to_string(key.t0) + ".svg")).string());
    out << render_svg(pw);
    ++images;
  }
  return images;
}

}  // namespace stgnit
