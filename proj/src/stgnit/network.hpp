#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "stgnit/graph_builder.hpp"
#include "stgnit/params.hpp"

namespace stgnit {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-step record of a GRU run over a batch of sequences (rows).
struct GruTrace {
  std::vector<RowMatrix> x, h_prev, r, z, n, hn;  // hn: W_hn h + b_hn
  std::vector<RowMatrix> h;
};

void gru_forward(const GruParams& p, const std::vector<RowMatrix>& inputs, GruTrace& trace);
// d_h[t] is the loss gradient w.r.t. trace.h[t]. Accumulates parameter
// gradients into `grad`; writes input gradients to d_x when non-null.
void gru_backward(const GruParams& p, const GruTrace& trace, const std::vector<RowMatrix>& d_h,
                  GruParams& grad, std::vector<RowMatrix>* d_x);

// Intermediate tensors of one forward pass, kept for the backward pass.
struct ForwardTrace {
  int T = 0, P = 0, n = 0;
  // embed
  RowMatrix node_in, node_code, edge_in, edge_code;  // rows (t,i) / (t,i,j), 4 cols
  RowMatrix ne, noe, ee, eoe;                        // E cols
  Tensor Vf, Af;                                     // [T,n,E], [T,n,n,E]
  // compensate
  GruTrace node_gru, edge_gru;
  Tensor Vfc, Afc;
  // stgcn
  Tensor adj;      // [T,n,n,E] |Afc| off-diagonal, 1 on the diagonal
  Tensor degree;   // [T,n,E]
  Tensor agg;      // [T,n,E]
  RowMatrix mix_out;   // tanh(mix(agg)), rows (t,i)
  RowMatrix tconv_in;  // unfolded temporal windows, rows (t,i)
  Tensor Vstg;     // [T,n,E]
  // tecn
  RowMatrix tecn_in[3];  // unfolded node windows, rows i
  Tensor tecn_act[2];    // tanh outputs of layers 0 and 1, [P,n,D]
  Tensor tecn_hidden;    // layer-1 residual sum, [P,n,D]
  Tensor Vp;             // [P,n,D]
  // decode
  GruTrace dec_fwd, dec_bwd;
  RowMatrix sp;            // rows (tau,i), 2G
  RowMatrix head_act[2];   // rows (tau,i), H
  Tensor Dx;               // [K,P,n,2]
};

// Candidate trajectories [K, P, n, 2] in slot order.
struct ForwardResult {
  Tensor positions;
};

struct FeaturePair {
  Tensor nodes;  // [T, n, E]
  Tensor edges;  // [T, n, n, E]
};

// Stage-by-stage entry points; forward() composes them.
FeaturePair embed(const ModelParams& params, const Tensor& V, const Tensor& No, const Tensor& A, const Tensor& Eo);
FeaturePair compensate(const ModelParams& params, const Tensor& Vf, const Tensor& Af);
Tensor stgcn_forward(const ModelParams& params, const Tensor& Vfc, const Tensor& Afc);  // [T, n, E]
Tensor tecn_forward(const ModelParams& params, const Tensor& Vstg);                  // [P, n, D]
// Candidate positions [K, P, n, 2] from Vp and the per-node anchors.
Tensor decode(const ModelParams& params, const Tensor& Vp, std::span<const Point2> anchors);
// positions[k, tau, i] = anchor_i + sum of Dx[k, 0..tau, i].
Tensor integrate_displacements(const Tensor& Dx, std::span<const Point2> anchors);

// Single-pass network over one graph. Anchors come from graph.anchors.
ForwardResult forward(const ModelParams& params, const STGraph& graph, ForwardTrace* trace = nullptr);

// d_positions: loss gradient w.r.t. ForwardResult::positions. Accumulates into grad.
void backward(const ModelParams& params, const ForwardTrace& trace, const Tensor& d_positions,
              ModelParams& grad);

}  // namespace stgnit
