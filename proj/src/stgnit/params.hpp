#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stgnit/tensor.hpp"

namespace stgnit {

// Network shape hyperparameters.
struct ModelConfig {
  int t_obs = 8;
  int t_pred = 12;
  int n_en = 9;        // embedding width
  int n_de = 7;        // TECN output width
  int n_gru = 64;      // hidden width of every GRU
  int n_stg = 7;       // STGCN temporal kernel
  int n_te = 3;        // TECN node-axis kernel
  int candidates = 3;  // K trajectory heads
  int mlp_hidden = 64;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct AffineParams {
  Tensor W;
  Tensor b;
};

// Gates are stacked (reset, update, new) along the first axis of Wi/Wh/bi/bh.
struct GruParams {
  Tensor Wi;  // [3G, in]
  Tensor Wh;  // [3G, G]
  Tensor bi;  // [3G]
  Tensor bh;  // [3G]
  Tensor h0;  // [G] initial hidden state
};

struct ModelParams {
  ModelConfig config;

  AffineParams node_embed;       // [E,4]
  AffineParams node_code_embed;  // [E,4]
  AffineParams edge_embed;       // [E,4]
  AffineParams edge_code_embed;  // [E,4]

  GruParams node_comp_gru;   // in E
  AffineParams node_comp_out;  // [E,G]
  GruParams edge_comp_gru;   // in E
  AffineParams edge_comp_out;  // [E,G]

  AffineParams stgcn_mix;    // [E,E]
  AffineParams stgcn_tconv;  // W [E, n_stg, E], b [E]

  // Layer l: W [T_out, C_out, n_te, T_in, C_in], b [T_out, C_out].
  AffineParams tecn[3];

  GruParams decoder_fwd;  // in D
  GruParams decoder_bwd;  // in D
  AffineParams head[3];   // 2G -> H -> H -> 2K

  ModelParams() = default;
  // All arrays allocated with their contract shapes and zero-filled.
  explicit ModelParams(const ModelConfig& config);

  // Calls f(name, tensor) for every learnable array in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::size_t parameter_count() const;
  bool all_finite() const;
  void set_zero();

  friend bool operator==(const ModelParams& a, const ModelParams& b);

 private:
  template <typename Self, typename F>
  static void visit(Self& p, F& f) {
    const auto affine = [&](const std::string& name, auto& a) {
      f(name + ".W", a.W);
      f(name + ".b", a.b);
    };
    const auto gru = [&](const std::string& name, auto& g) {
      f(name + ".Wi", g.Wi);
      f(name + ".Wh", g.Wh);
      f(name + ".bi", g.bi);
      f(name + ".bh", g.bh);
      f(name + ".h0", g.h0);
    };
    affine("node_embed", p.node_embed);
    affine("node_code_embed", p.node_code_embed);
    affine("edge_embed", p.edge_embed);
    affine("edge_code_embed", p.edge_code_embed);
    gru("node_comp_gru", p.node_comp_gru);
    affine("node_comp_out", p.node_comp_out);
    gru("edge_comp_gru", p.edge_comp_gru);
    affine("edge_comp_out", p.edge_comp_out);
    affine("stgcn_mix", p.stgcn_mix);
    affine("stgcn_tconv", p.stgcn_tconv);
    for (int l = 0; l < 3; ++l) affine("tecn" + std::to_string(l), p.tecn[l]);
    gru("decoder_fwd", p.decoder_fwd);
    gru("decoder_bwd", p.decoder_bwd);
    for (int l = 0; l < 3; ++l) affine("head" + std::to_string(l), p.head[l]);
  }
};

// Fan-in uniform weights, orthogonal recurrent blocks, zero biases and
// initial hidden states.
ModelParams initialize_params(const ModelConfig& config, std::uint64_t seed);

// Binary checkpoint: "STGNITCK", u32 version, u64 manifest length, JSON
// manifest (hyperparameters, array names and shapes, free-form metadata),
// then every array as little-endian float64 in manifest order.
void write_checkpoint(std::ostream& os, const ModelParams& params, const std::string& metadata_json = "{}");
ModelParams read_checkpoint(std::istream& is, std::string* metadata_json = nullptr);
void save_checkpoint(const ModelParams& params, const std::string& path, const std::string& metadata_json = "{}");
ModelParams load_checkpoint(const std::string& path, std::string* metadata_json = nullptr);
// Rejects a checkpoint whose arrays differ from `expected`, naming each difference.
ModelParams load_checkpoint(const std::string& path, const ModelConfig& expected);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stgnit
