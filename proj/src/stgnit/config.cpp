#include "stgnit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace stgnit {

namespace {

using Json = nlohmann::ordered_json;

const char* walker_name(WalkerModel w) {
  switch (w) {
    case WalkerModel::Waypoint: return "waypoint";
    case WalkerModel::Crossing: return "crossing";
    case WalkerModel::Standing: return "standing";
  }
  return "waypoint";
}

WalkerModel walker_from(const std::string& s) {
  if (s == "waypoint") return WalkerModel::Waypoint;
  if (s == "crossing") return WalkerModel::Crossing;
  if (s == "standing") return WalkerModel::Standing;
  throw std::invalid_argument("unknown walker model '" + s + "'");
}

Json to_json(const RunConfig& c) {
  Json j;
  j["t_obs"] = c.model.t_obs;
  j["t_pred"] = c.model.t_pred;
  j["n_en"] = c.model.n_en;
  j["n_de"] = c.model.n_de;
  j["n_gru"] = c.model.n_gru;
  j["n_stg"] = c.model.n_stg;
  j["n_te"] = c.model.n_te;
  j["candidates"] = c.model.candidates;
  j["mlp_hidden"] = c.model.mlp_hidden;
  j["od"] = c.interaction.od;
  j["ad"] = c.interaction.ad;
  j["fd"] = c.interaction.fd;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["train_mode"] = to_string(c.train_mode);
  j["test_mode"] = to_string(c.test_mode);
  Json ablate = Json::array();
  if (c.ablation.no_obs) ablate.push_back("obs");
  if (c.ablation.no_code) ablate.push_back("code");
  if (c.ablation.no_clu) ablate.push_back("clu");
  j["ablate"] = ablate;
  j["all_candidates"] = c.all_candidates;
  j["seed"] = c.seed;
  j["stride"] = c.stride;
  j["drop_fraction"] = c.drop_fraction;
  j["corruption_seed"] = c.corruption_seed;
  Json conds = Json::array();
  for (const auto& cond : c.conditions) conds.push_back(cond.label());
  j["conditions"] = conds;
  j["grid_resolution"] = c.raster.resolution;
  j["grid_z_min"] = c.raster.z_min;
  j["grid_z_max"] = c.raster.z_max;
  j["grid_count_threshold"] = c.raster.count_threshold;
  Json s;
  s["name"] = c.synth.name;
  s["scenes"] = c.synth.scenes;
  s["pedestrians"] = c.synth.pedestrians;
  s["frames"] = c.synth.frames;
  s["obstacles"] = c.synth.obstacles;
  s["occluders"] = c.synth.occluders;
  s["walker"] = walker_name(c.synth.walker);
  s["frame_rate_hz"] = c.synth.frame_rate_hz;
  s["seed"] = c.synth.seed;
  j["synth"] = s;
  j["dataset"] = c.dataset;
  j["labels"] = c.labels;
  j["grid"] = c.grid;
  j["checkpoint"] = c.checkpoint;
  j["out"] = c.out;
  return j;
}

void reject_unknown(const Json& defaults, const Json& given, const std::string& prefix) {
  if (!given.is_object()) throw std::invalid_argument("config: '" + prefix + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!defaults.contains(key)) throw std::invalid_argument("config: unknown key '" + path + "'");
    if (defaults[key].is_object()) reject_unknown(defaults[key], value, path);
  }
}

template <typename T>
T field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
  }
}

RunConfig from_json(const Json& j) {
  RunConfig c;
  c.model.t_obs = field<int>(j, "t_obs");
  c.model.t_pred = field<int>(j, "t_pred");
  c.model.n_en = field<int>(j, "n_en");
  c.model.n_de = field<int>(j, "n_de");
  c.model.n_gru = field<int>(j, "n_gru");
  c.model.n_stg = field<int>(j, "n_stg");
  c.model.n_te = field<int>(j, "n_te");
  c.model.candidates = field<int>(j, "candidates");
  c.model.mlp_hidden = field<int>(j, "mlp_hidden");
  c.interaction.od = field<double>(j, "od");
  c.interaction.ad = field<double>(j, "ad");
  c.interaction.fd = field<double>(j, "fd");
  c.learning_rate = field<double>(j, "learning_rate");
  c.batch_size = field<int>(j, "batch_size");
  c.epochs = field<int>(j, "epochs");
  c.train_mode = mode_from_string(field<std::string>(j, "train_mode"));
  c.test_mode = mode_from_string(field<std::string>(j, "test_mode"));
  for (const auto& a : field<std::vector<std::string>>(j, "ablate")) {
    if (a == "obs") c.ablation.no_obs = true;
    else if (a == "code") c.ablation.no_code = true;
    else if (a == "clu") c.ablation.no_clu = true;
    else throw std::invalid_argument("config: unknown ablation '" + a + "' (expected obs, code or clu)");
  }
  c.all_candidates = field<bool>(j, "all_candidates");
  c.seed = field<std::uint64_t>(j, "seed");
  c.stride = field<int>(j, "stride");
  c.drop_fraction = field<double>(j, "drop_fraction");
  c.corruption_seed = field<std::uint64_t>(j, "corruption_seed");
  for (const auto& s : field<std::vector<std::string>>(j, "conditions")) c.conditions.push_back(parse_condition(s));
  c.raster.resolution = field<double>(j, "grid_resolution");
  c.raster.z_min = field<double>(j, "grid_z_min");
  c.raster.z_max = field<double>(j, "grid_z_max");
  c.raster.count_threshold = field<int>(j, "grid_count_threshold");
  const Json& s = j.at("synth");
  c.synth.name = field<std::string>(s, "name");
  c.synth.scenes = field<int>(s, "scenes");
  c.synth.pedestrians = field<int>(s, "pedestrians");
  c.synth.frames = field<int>(s, "frames");
  c.synth.obstacles = field<int>(s, "obstacles");
  c.synth.occluders = field<int>(s, "occluders");
  c.synth.walker = walker_from(field<std::string>(s, "walker"));
  c.synth.frame_rate_hz = field<double>(s, "frame_rate_hz");
  c.synth.seed = field<std::uint64_t>(s, "seed");
  c.dataset = field<std::string>(j, "dataset");
  c.labels = field<std::string>(j, "labels");
  c.grid = field<std::string>(j, "grid");
  c.checkpoint = field<std::string>(j, "checkpoint");
  c.out = field<std::string>(j, "out");
  c.validate();
  return c;
}

Json merged_with_defaults(const Json& given) {
  Json merged = to_json(RunConfig{});
  reject_unknown(merged, given, "");
  for (const auto& [key, value] : given.items()) {
    if (merged[key].is_object()) {
      for (const auto& [k2, v2] : value.items()) merged[key][k2] = v2;
    } else {
      merged[key] = value;
    }
  }
  return merged;
}

}  // namespace

std::string EvalCondition::label() const {
  std::string s;
  s += train_mode == Mode::Pad ? 'p' : 'f';
  s += test_mode == Mode::Pad ? 'p' : 'f';
  return s + (corrupted ? "-corrupted" : "-clean");
}

EvalCondition parse_condition(const std::string& s) {
  EvalCondition c;
  std::string pair = s;
  const auto dash = s.find('-');
  if (dash != std::string::npos) {
    pair = s.substr(0, dash);
    const std::string data = s.substr(dash + 1);
    if (data == "corrupted") c.corrupted = true;
    else if (data != "clean") throw std::invalid_argument("condition '" + s + "': expected -clean or -corrupted");
  }
  if (pair == "ff") {
    c.train_mode = c.test_mode = Mode::Filtration;
  } else if (pair == "pp") {
    c.train_mode = c.test_mode = Mode::Pad;
  } else if (pair == "pf") {
    c.train_mode = Mode::Pad;
    c.test_mode = Mode::Filtration;
  } else {
    throw std::invalid_argument("condition '" + s + "': mode pair must be ff, pp or pf");
  }
  return c;
}

void RunConfig::validate() const {
  model.validate();
  train_config().validate();
  if (stride <= 0) throw std::invalid_argument("config: stride must be positive");
  if (!(drop_fraction >= 0.0 && drop_fraction <= 1.0)) {
    throw std::invalid_argument("config: drop_fraction must lie in [0, 1]");
  }
  if (!(raster.resolution > 0.0)) throw std::invalid_argument("config: grid_resolution must be positive");
  if (synth.scenes <= 0 || synth.pedestrians <= 0 || synth.frames <= 0 || synth.obstacles < 0 ||
      synth.occluders < 0) {
    throw std::invalid_argument("config: synth counts must be positive");
  }
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.mode = train_mode;
  t.ablation = ablation;
  t.interaction = interaction;
  t.seed = seed;
  return t;
}

PredictorConfig RunConfig::predictor() const {
  PredictorConfig p = predictor_config(ablation, interaction);
  p.all_candidates = all_candidates;
  return p;
}

RunConfig config_from_json(const std::string& text) {
  Json given;
  try {
    given = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(merged_with_defaults(given));
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return config_from_json(ss.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string config_to_json(const RunConfig& config, int indent) { return to_json(config).dump(indent); }

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  Json v;
  try {
    v = Json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = value;
  }
  Json j = to_json(config);
  Json patch;
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    patch[key] = v;
  } else {
    patch[key.substr(0, dot)][key.substr(dot + 1)] = v;
  }
  reject_unknown(j, patch, "");
  for (const auto& [k, val] : patch.items()) {
    if (j[k].is_object()) {
      for (const auto& [k2, v2] : val.items()) j[k][k2] = v2;
    } else {
      j[k] = val;
    }
  }
  config = from_json(j);
}

}  // namespace stgnit
