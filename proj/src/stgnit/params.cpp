#include "stgnit/params.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <map>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "stgnit/random.hpp"

namespace stgnit {

using nlohmann::json;

void ModelConfig::validate() const {
  const auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("model config: ") + name + " must be >= 1");
  };
  positive(t_obs, "t_obs");
  positive(t_pred, "t_pred");
  positive(n_en, "n_en");
  positive(n_de, "n_de");
  positive(n_gru, "n_gru");
  positive(n_stg, "n_stg");
  positive(n_te, "n_te");
  positive(candidates, "candidates");
  positive(mlp_hidden, "mlp_hidden");
  if (n_stg % 2 == 0 || n_te % 2 == 0) {
    throw std::invalid_argument("model config: n_stg and n_te must be odd (centred kernels)");
  }
}

namespace {

AffineParams affine(std::vector<int> w_shape, std::vector<int> b_shape) {
  return {Tensor(std::move(w_shape)), Tensor(std::move(b_shape))};
}

GruParams gru(int in, int hidden) {
  return {Tensor({3 * hidden, in}), Tensor({3 * hidden, hidden}), Tensor({3 * hidden}),
          Tensor({3 * hidden}), Tensor({hidden})};
}

}  // namespace

ModelParams::ModelParams(const ModelConfig& c) : config(c) {
  c.validate();
  const int E = c.n_en, G = c.n_gru, D = c.n_de, T = c.t_obs, P = c.t_pred, H = c.mlp_hidden;
  node_embed = affine({E, 4}, {E});
  node_code_embed = affine({E, 4}, {E});
  edge_embed = affine({E, 4}, {E});
  edge_code_embed = affine({E, 4}, {E});
  node_comp_gru = gru(E, G);
  node_comp_out = affine({E, G}, {E});
  edge_comp_gru = gru(E, G);
  edge_comp_out = affine({E, G}, {E});
  stgcn_mix = affine({E, E}, {E});
  stgcn_tconv = affine({E, c.n_stg, E}, {E});
  tecn[0] = affine({P, D, c.n_te, T, E}, {P, D});
  tecn[1] = affine({P, D, c.n_te, P, D}, {P, D});
  tecn[2] = affine({P, D, c.n_te, P, D}, {P, D});
  decoder_fwd = gru(D, G);
  decoder_bwd = gru(D, G);
  head[0] = affine({H, 2 * G}, {H});
  head[1] = affine({H, H}, {H});
  head[2] = affine({2 * c.candidates, H}, {2 * c.candidates});
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const Tensor& t) {
    for (double v : t.values()) ok = ok && std::isfinite(v);
  });
  return ok;
}

void ModelParams::set_zero() {
  for_each([](const std::string&, Tensor& t) { t.set_zero(); });
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (!(a.config == b.config)) return false;
  std::vector<const Tensor*> ta, tb;
  a.for_each([&](const std::string&, const Tensor& t) { ta.push_back(&t); });
  b.for_each([&](const std::string&, const Tensor& t) { tb.push_back(&t); });
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i] == *tb[i])) return false;
  }
  return true;
}

namespace {

double gaussian(Rng& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void fan_in_uniform(Tensor& W, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : W.values()) v = rng.uniform(-bound, bound);
}

void orthogonal_blocks(Tensor& Wh, Rng& rng) {
  const int G = Wh.dim(1);
  const int blocks = Wh.dim(0) / G;
  for (int b = 0; b < blocks; ++b) {
    Eigen::MatrixXd M(G, G);
    for (int r = 0; r < G; ++r) {
      for (int c = 0; c < G; ++c) M(r, c) = gaussian(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(G, G);
    // Sign-fix so the factorization is unique.
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < G; ++c) {
      if (R(c, c) < 0) Q.col(c) *= -1.0;
    }
    for (int r = 0; r < G; ++r) {
      for (int c = 0; c < G; ++c) Wh(b * G + r, c) = Q(r, c);
    }
  }
}

}  // namespace

ModelParams initialize_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  Rng rng(seed);
  const auto init_affine = [&](AffineParams& a) {
    const int fan_in = static_cast<int>(a.W.size() / static_cast<std::size_t>(a.W.dim(0) * (a.W.rank() == 5 ? a.W.dim(1) : 1)));
    fan_in_uniform(a.W, fan_in, rng);
  };
  const auto init_gru = [&](GruParams& g) {
    fan_in_uniform(g.Wi, g.Wi.dim(1), rng);
    orthogonal_blocks(g.Wh, rng);
  };
  init_affine(p.node_embed);
  init_affine(p.node_code_embed);
  init_affine(p.edge_embed);
  init_affine(p.edge_code_embed);
  init_gru(p.node_comp_gru);
  init_affine(p.node_comp_out);
  init_gru(p.edge_comp_gru);
  init_affine(p.edge_comp_out);
  init_affine(p.stgcn_mix);
  init_affine(p.stgcn_tconv);
  for (auto& l : p.tecn) init_affine(l);
  init_gru(p.decoder_fwd);
  init_gru(p.decoder_bwd);
  for (auto& l : p.head) init_affine(l);
  return p;
}

namespace {

constexpr char kMagic[8] = {'S', 'T', 'G', 'N', 'I', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
  } else {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T read_le(std::istream& is) {
  std::array<char, sizeof(T)> bytes{};
  if (!is.read(bytes.data(), sizeof(T))) throw CheckpointError("checkpoint: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

json config_to_json(const ModelConfig& c) {
  return {{"t_obs", c.t_obs},     {"t_pred", c.t_pred}, {"n_en", c.n_en},
          {"n_de", c.n_de},       {"n_gru", c.n_gru},   {"n_stg", c.n_stg},
          {"n_te", c.n_te},       {"candidates", c.candidates},
          {"mlp_hidden", c.mlp_hidden}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.t_obs = j.at("t_obs").get<int>();
    c.t_pred = j.at("t_pred").get<int>();
    c.n_en = j.at("n_en").get<int>();
    c.n_de = j.at("n_de").get<int>();
    c.n_gru = j.at("n_gru").get<int>();
    c.n_stg = j.at("n_stg").get<int>();
    c.n_te = j.at("n_te").get<int>();
    c.candidates = j.at("candidates").get<int>();
    c.mlp_hidden = j.at("mlp_hidden").get<int>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad hyperparameter manifest: ") + e.what());
  }
  return c;
}

std::string array_diff(const ModelParams& expected, const json& arrays) {
  std::vector<std::pair<std::string, std::vector<int>>> want;
  expected.for_each([&](const std::string& name, const Tensor& t) { want.emplace_back(name, t.shape()); });
  std::string diff;
  std::map<std::string, std::vector<int>> have;
  for (const auto& a : arrays) have[a.at("name").get<std::string>()] = a.at("shape").get<std::vector<int>>();
  for (const auto& [name, shape] : want) {
    auto it = have.find(name);
    if (it == have.end()) {
      diff += "\n  missing array " + name + " " + shape_string(shape);
    } else if (it->second != shape) {
      diff += "\n  " + name + ": checkpoint " + shape_string(it->second) + ", expected " + shape_string(shape);
    }
  }
  for (const auto& [name, shape] : have) {
    if (std::none_of(want.begin(), want.end(), [&](const auto& w) { return w.first == name; })) {
      diff += "\n  unexpected array " + name + " " + shape_string(shape);
    }
  }
  return diff;
}

}  // namespace

void write_checkpoint(std::ostream& os, const ModelParams& params, const std::string& metadata_json) {
  json manifest;
  manifest["format"] = "stgnit-checkpoint";
  manifest["version"] = kVersion;
  manifest["config"] = config_to_json(params.config);
  manifest["arrays"] = json::array();
  params.for_each([&](const std::string& name, const Tensor& t) {
    manifest["arrays"].push_back({{"name", name}, {"shape", t.shape()}});
  });
  manifest["metadata"] = json::parse(metadata_json);
  const std::string text = manifest.dump();
  os.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  params.for_each([&](const std::string&, const Tensor& t) {
    for (double v : t.values()) write_le<double>(os, v);
  });
}

ModelParams read_checkpoint(std::istream& is, std::string* metadata_json) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const auto version = read_le<std::uint32_t>(is);
  if (version != kVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const auto len = read_le<std::uint64_t>(is);
  if (len > (1u << 26)) throw CheckpointError("checkpoint: manifest too large");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw CheckpointError("checkpoint: truncated manifest");
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad manifest: ") + e.what());
  }
  ModelConfig cfg = config_from_json(manifest.at("config"));
  ModelParams params;
  try {
    params = ModelParams(cfg);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  if (const auto diff = array_diff(params, manifest.at("arrays")); !diff.empty()) {
    throw CheckpointError("checkpoint: array layout mismatch:" + diff);
  }
  params.for_each([&](const std::string&, Tensor& t) {
    for (double& v : t.values()) v = read_le<double>(is);
  });
  if (metadata_json) *metadata_json = manifest.value("metadata", json::object()).dump();
  return params;
}

void save_checkpoint(const ModelParams& params, const std::string& path, const std::string& metadata_json) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  write_checkpoint(os, params, metadata_json);
  if (!os) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path, std::string* metadata_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(is, metadata_json);
}

ModelParams load_checkpoint(const std::string& path, const ModelConfig& expected) {
  ModelParams loaded = load_checkpoint(path);
  if (loaded.config == expected) return loaded;
  const ModelParams want(expected);
  json arrays = json::array();
  loaded.for_each([&](const std::string& name, const Tensor& t) {
    arrays.push_back({{"name", name}, {"shape", t.shape()}});
  });
  std::string diff = array_diff(want, arrays);
  const json a = config_to_json(loaded.config);
  const json b = config_to_json(expected);
  for (const auto& [key, v] : b.items()) {
    if (a.at(key) != v) diff = "\n  " + key + ": checkpoint " + a.at(key).dump() + ", expected " + v.dump() + diff;
  }
  throw CheckpointError("checkpoint '" + path + "' does not match the expected model:" + diff);
}

}  // namespace stgnit
