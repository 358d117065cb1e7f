#include "stgnit/network.hpp"

#include <cmath>
#include <utility>

namespace stgnit {

namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using ConstRow = Eigen::Map<const Eigen::RowVectorXd>;
using MutRow = Eigen::Map<Eigen::RowVectorXd>;

// Views a weight tensor as [rows, size/rows].
ConstMap as_matrix(const Tensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.dim(0));
  return ConstMap(t.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}
MutMap as_matrix(Tensor& t) {
  const auto rows = static_cast<Eigen::Index>(t.dim(0));
  return MutMap(t.data(), rows, static_cast<Eigen::Index>(t.size()) / rows);
}
ConstRow as_row(const Tensor& t) { return ConstRow(t.data(), static_cast<Eigen::Index>(t.size())); }
MutRow as_row(Tensor& t) { return MutRow(t.data(), static_cast<Eigen::Index>(t.size())); }

// Rows of a tensor flattened over every axis but the last.
ConstMap rows_of(const Tensor& t) {
  const auto cols = static_cast<Eigen::Index>(t.shape().back());
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.size()) / cols, cols);
}
MutMap rows_of(Tensor& t) {
  const auto cols = static_cast<Eigen::Index>(t.shape().back());
  return MutMap(t.data(), static_cast<Eigen::Index>(t.size()) / cols, cols);
}

// An affine map's weight viewed as [outputs, inputs]; outputs = bias length.
ConstMap weight(const AffineParams& a) {
  const auto rows = static_cast<Eigen::Index>(a.b.size());
  return ConstMap(a.W.data(), rows, static_cast<Eigen::Index>(a.W.size()) / rows);
}
MutMap weight(AffineParams& a) {
  const auto rows = static_cast<Eigen::Index>(a.b.size());
  return MutMap(a.W.data(), rows, static_cast<Eigen::Index>(a.W.size()) / rows);
}

RowMatrix affine_forward(const Eigen::Ref<const RowMatrix>& x, const AffineParams& a) {
  RowMatrix y = x * weight(a).transpose();
  y.rowwise() += as_row(a.b);
  return y;
}

// Returns d_x; accumulates dW, db.
RowMatrix affine_backward(const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const RowMatrix>& dy,
                          const AffineParams& a, AffineParams& g) {
  weight(g).noalias() += dy.transpose() * x;
  as_row(g.b) += dy.colwise().sum();
  return dy * weight(a);
}

RowMatrix tanh_of(const RowMatrix& x) { return x.array().tanh().matrix(); }

RowMatrix tanh_grad(const RowMatrix& y, const RowMatrix& dy) {
  return (dy.array() * (1.0 - y.array().square())).matrix();
}

RowMatrix sigmoid(const RowMatrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

// Unfolds X[t_in, n, c] around every node into rows
// [(k, t, c)] = X[t, i + k - half, c], zero outside the node range.
RowMatrix unfold_nodes(const Tensor& X, int kernel) {
  const int Tin = X.dim(0), n = X.dim(1), C = X.dim(2);
  const int half = kernel / 2;
  RowMatrix U = RowMatrix::Zero(n, kernel * Tin * C);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kernel; ++k) {
      const int src = i + k - half;
      if (src < 0 || src >= n) continue;
      for (int t = 0; t < Tin; ++t) {
        for (int c = 0; c < C; ++c) U(i, (k * Tin + t) * C + c) = X(t, src, c);
      }
    }
  }
  return U;
}

void fold_nodes(const RowMatrix& dU, int kernel, Tensor& dX) {
  const int Tin = dX.dim(0), n = dX.dim(1), C = dX.dim(2);
  const int half = kernel / 2;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < kernel; ++k) {
      const int src = i + k - half;
      if (src < 0 || src >= n) continue;
      for (int t = 0; t < Tin; ++t) {
        for (int c = 0; c < C; ++c) dX(t, src, c) += dU(i, (k * Tin + t) * C + c);
      }
    }
  }
}

// Output rows i, cols (tau, d) -> tensor [Tout, n, Cout].
Tensor scatter_time_major(const RowMatrix& Y, int Tout, int Cout) {
  const int n = static_cast<int>(Y.rows());
  Tensor out({Tout, n, Cout});
  for (int i = 0; i < n; ++i) {
    for (int tau = 0; tau < Tout; ++tau) {
      for (int d = 0; d < Cout; ++d) out(tau, i, d) = Y(i, tau * Cout + d);
    }
  }
  return out;
}

RowMatrix gather_time_major(const Tensor& t) {
  const int Tout = t.dim(0), n = t.dim(1), Cout = t.dim(2);
  RowMatrix Y(n, Tout * Cout);
  for (int i = 0; i < n; ++i) {
    for (int tau = 0; tau < Tout; ++tau) {
      for (int d = 0; d < Cout; ++d) Y(i, tau * Cout + d) = t(tau, i, d);
    }
  }
  return Y;
}

Tensor tensor_tanh(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = std::tanh(v);
  return y;
}

void check_graph(const ModelParams& params, const STGraph& g) {
  const auto& c = params.config;
  const int T = g.frames();
  const int n = g.nodes();
  const auto expect = [](const Tensor& t, std::vector<int> shape, const char* name) {
    if (t.shape() != shape) {
      throw std::invalid_argument(std::string("network: ") + name + " has shape " + shape_string(t.shape()) +
                                  ", expected " + shape_string(shape));
    }
  };
  if (T != c.t_obs) {
    throw std::invalid_argument("network: graph has " + std::to_string(T) + " frames, model expects " +
                                std::to_string(c.t_obs));
  }
  expect(g.V, {T, n, 4}, "V");
  expect(g.No, {T, n, 4}, "No");
  expect(g.A, {T, n, n, 4}, "A");
  expect(g.Eo, {T, n, n, 4}, "Eo");
  if (static_cast<int>(g.anchors.size()) != n) throw std::invalid_argument("network: anchor count mismatch");
}

}  // namespace

void gru_forward(const GruParams& p, const std::vector<RowMatrix>& inputs, GruTrace& tr) {
  const auto G = static_cast<Eigen::Index>(p.h0.size());
  const auto steps = inputs.size();
  tr = GruTrace{};
  if (steps == 0) return;
  const auto N = inputs.front().rows();
  const ConstMap Wi = as_matrix(p.Wi);
  const ConstMap Wh = as_matrix(p.Wh);
  RowMatrix h = as_row(p.h0).replicate(N, 1);
  for (std::size_t t = 0; t < steps; ++t) {
    RowMatrix gi = inputs[t] * Wi.transpose();
    gi.rowwise() += as_row(p.bi);
    RowMatrix gh = h * Wh.transpose();
    gh.rowwise() += as_row(p.bh);
    RowMatrix r = sigmoid(gi.leftCols(G) + gh.leftCols(G));
    RowMatrix z = sigmoid(gi.middleCols(G, G) + gh.middleCols(G, G));
    RowMatrix hn = gh.rightCols(G);
    RowMatrix nn = (gi.rightCols(G).array() + r.array() * hn.array()).tanh().matrix();
    RowMatrix hnext = ((1.0 - z.array()) * nn.array() + z.array() * h.array()).matrix();
    tr.x.push_back(inputs[t]);
    tr.h_prev.push_back(std::move(h));
    tr.r.push_back(std::move(r));
    tr.z.push_back(std::move(z));
    tr.n.push_back(std::move(nn));
    tr.hn.push_back(std::move(hn));
    tr.h.push_back(hnext);
    h = std::move(hnext);
  }
}

void gru_backward(const GruParams& p, const GruTrace& tr, const std::vector<RowMatrix>& d_h, GruParams& grad,
                  std::vector<RowMatrix>* d_x) {
  const auto G = static_cast<Eigen::Index>(p.h0.size());
  const auto steps = tr.h.size();
  if (steps == 0) return;
  const auto N = tr.h.front().rows();
  const ConstMap Wi = as_matrix(p.Wi);
  const ConstMap Wh = as_matrix(p.Wh);
  MutMap gWi = as_matrix(grad.Wi);
  MutMap gWh = as_matrix(grad.Wh);
  if (d_x) d_x->assign(steps, RowMatrix());
  RowMatrix dh_next = RowMatrix::Zero(N, G);
  RowMatrix dgi(N, 3 * G);
  RowMatrix dgh(N, 3 * G);
  for (std::size_t s = steps; s-- > 0;) {
    const RowMatrix dh = d_h[s] + dh_next;
    const auto z = tr.z[s].array();
    const auto r = tr.r[s].array();
    const auto nn = tr.n[s].array();
    const RowMatrix dn_pre = (dh.array() * (1.0 - z) * (1.0 - nn.square())).matrix();
    const RowMatrix dz_pre = (dh.array() * (tr.h_prev[s].array() - nn) * z * (1.0 - z)).matrix();
    const RowMatrix dr_pre = (dn_pre.array() * tr.hn[s].array() * r * (1.0 - r)).matrix();
    dgi.leftCols(G) = dr_pre;
    dgi.middleCols(G, G) = dz_pre;
    dgi.rightCols(G) = dn_pre;
    dgh.leftCols(G) = dr_pre;
    dgh.middleCols(G, G) = dz_pre;
    dgh.rightCols(G) = (dn_pre.array() * r).matrix();
    gWi.noalias() += dgi.transpose() * tr.x[s];
    as_row(grad.bi) += dgi.colwise().sum();
    gWh.noalias() += dgh.transpose() * tr.h_prev[s];
    as_row(grad.bh) += dgh.colwise().sum();
    if (d_x) (*d_x)[s] = dgi * Wi;
    dh_next = (dh.array() * z).matrix() + dgh * Wh;
  }
  as_row(grad.h0) += dh_next.colwise().sum();
}

namespace {

void embed_stage(const ModelParams& params, const Tensor& V, const Tensor& No, const Tensor& A, const Tensor& Eo,
                 ForwardTrace& tr) {
  const int T = V.dim(0), n = V.dim(1), E = params.config.n_en;
  if (No.shape() != V.shape() || A.shape() != std::vector<int>{T, n, n, 4} || Eo.shape() != A.shape() ||
      V.shape() != std::vector<int>{T, n, 4}) {
    throw std::invalid_argument("embed: inconsistent shapes V" + shape_string(V.shape()) + " No" +
                                shape_string(No.shape()) + " A" + shape_string(A.shape()) + " Eo" +
                                shape_string(Eo.shape()));
  }
  tr.T = T;
  tr.n = n;
  tr.node_in = rows_of(V);
  tr.node_code = rows_of(No);
  tr.edge_in = rows_of(A);
  tr.edge_code = rows_of(Eo);
  tr.ne = affine_forward(tr.node_in, params.node_embed);
  tr.noe = affine_forward(tr.node_code, params.node_code_embed);
  tr.ee = affine_forward(tr.edge_in, params.edge_embed);
  tr.eoe = affine_forward(tr.edge_code, params.edge_code_embed);
  tr.Vf = Tensor({T, n, E});
  tr.Af = Tensor({T, n, n, E});
  rows_of(tr.Vf) = (tr.ne.array() * tr.noe.array()).matrix();
  rows_of(tr.Af) = (tr.ee.array() * tr.eoe.array()).matrix();
}

void run_compensation(const Tensor& in, int T, int per_step, const GruParams& gru, const AffineParams& out_map,
                      GruTrace& gtr, Tensor& out) {
  std::vector<RowMatrix> steps;
  const ConstMap rows = rows_of(in);
  for (int t = 0; t < T; ++t) steps.emplace_back(rows.middleRows(static_cast<Eigen::Index>(t) * per_step, per_step));
  gru_forward(gru, steps, gtr);
  out = Tensor(in.shape());
  MutMap orows = rows_of(out);
  for (int t = 0; t < T; ++t) {
    orows.middleRows(static_cast<Eigen::Index>(t) * per_step, per_step) =
        affine_forward(gtr.h[static_cast<std::size_t>(t)], out_map);
  }
}

void compensate_stage(const ModelParams& params, ForwardTrace& tr) {
  run_compensation(tr.Vf, tr.T, tr.n, params.node_comp_gru, params.node_comp_out, tr.node_gru, tr.Vfc);
  run_compensation(tr.Af, tr.T, tr.n * tr.n, params.edge_comp_gru, params.edge_comp_out, tr.edge_gru, tr.Afc);
}

void stgcn_stage(const ModelParams& params, ForwardTrace& tr) {
  const int T = tr.T, n = tr.n, E = params.config.n_en;
  // Per-channel aggregation with the symmetric-normalized |Afc| + I.
  tr.adj = Tensor({T, n, n, E});
  tr.degree = Tensor({T, n, E});
  tr.agg = Tensor({T, n, E});
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < E; ++c) {
          const double a = i == j ? 1.0 : std::abs(tr.Afc(t, i, j, c));
          tr.adj(t, i, j, c) = a;
          tr.degree(t, i, c) += a;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < E; ++c) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
          s += tr.adj(t, i, j, c) / std::sqrt(tr.degree(t, i, c) * tr.degree(t, j, c)) * tr.Vfc(t, j, c);
        }
        tr.agg(t, i, c) = s;
      }
    }
  }
  tr.mix_out = tanh_of(affine_forward(rows_of(tr.agg), params.stgcn_mix));
  const int S = params.config.n_stg;
  const int half_s = S / 2;
  tr.tconv_in = RowMatrix::Zero(static_cast<Eigen::Index>(T) * n, S * E);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < S; ++k) {
      const int src = t + k - half_s;
      if (src < 0 || src >= T) continue;
      for (int i = 0; i < n; ++i) {
        tr.tconv_in.block(static_cast<Eigen::Index>(t) * n + i, k * E, 1, E) =
            tr.mix_out.row(static_cast<Eigen::Index>(src) * n + i);
      }
    }
  }
  tr.Vstg = Tensor({T, n, E});
  rows_of(tr.Vstg) =
      (affine_forward(tr.tconv_in, params.stgcn_tconv) + rows_of(tr.Vfc)).array().tanh().matrix();
}

void tecn_stage(const ModelParams& params, ForwardTrace& tr) {
  const int P = params.config.t_pred, D = params.config.n_de, Kn = params.config.n_te;
  tr.P = P;
  tr.tecn_in[0] = unfold_nodes(tr.Vstg, Kn);
  tr.tecn_act[0] = tensor_tanh(scatter_time_major(affine_forward(tr.tecn_in[0], params.tecn[0]), P, D));
  tr.tecn_in[1] = unfold_nodes(tr.tecn_act[0], Kn);
  tr.tecn_act[1] = tensor_tanh(scatter_time_major(affine_forward(tr.tecn_in[1], params.tecn[1]), P, D));
  tr.tecn_hidden = tr.tecn_act[1];
  for (std::size_t q = 0; q < tr.tecn_hidden.size(); ++q) tr.tecn_hidden.data()[q] += tr.tecn_act[0].data()[q];
  tr.tecn_in[2] = unfold_nodes(tr.tecn_hidden, Kn);
  tr.Vp = scatter_time_major(affine_forward(tr.tecn_in[2], params.tecn[2]), P, D);
}

Tensor decode_stage(const ModelParams& params, std::span<const Point2> anchors, ForwardTrace& tr) {
  const int P = tr.P, n = tr.n, G = params.config.n_gru, K = params.config.candidates;
  if (static_cast<int>(anchors.size()) != n) throw std::invalid_argument("decode: anchor count mismatch");
  std::vector<RowMatrix> fwd_in, bwd_in;
  const ConstMap vp_rows = rows_of(std::as_const(tr.Vp));
  for (int tau = 0; tau < P; ++tau) fwd_in.emplace_back(vp_rows.middleRows(static_cast<Eigen::Index>(tau) * n, n));
  bwd_in.assign(fwd_in.rbegin(), fwd_in.rend());
  gru_forward(params.decoder_fwd, fwd_in, tr.dec_fwd);
  gru_forward(params.decoder_bwd, bwd_in, tr.dec_bwd);
  tr.sp = RowMatrix(static_cast<Eigen::Index>(P) * n, 2 * G);
  for (int tau = 0; tau < P; ++tau) {
    tr.sp.block(static_cast<Eigen::Index>(tau) * n, 0, n, G) = tr.dec_fwd.h[static_cast<std::size_t>(tau)];
    tr.sp.block(static_cast<Eigen::Index>(tau) * n, G, n, G) = tr.dec_bwd.h[static_cast<std::size_t>(P - 1 - tau)];
  }
  tr.head_act[0] = tanh_of(affine_forward(tr.sp, params.head[0]));
  tr.head_act[1] = tanh_of(affine_forward(tr.head_act[0], params.head[1]));
  const RowMatrix out = affine_forward(tr.head_act[1], params.head[2]);

  tr.Dx = Tensor({K, P, n, 2});
  for (int k = 0; k < K; ++k) {
    for (int tau = 0; tau < P; ++tau) {
      for (int i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(tau) * n + i;
        tr.Dx(k, tau, i, 0) = out(row, 2 * k);
        tr.Dx(k, tau, i, 1) = out(row, 2 * k + 1);
      }
    }
  }
  return integrate_displacements(tr.Dx, anchors);
}

}  // namespace

Tensor integrate_displacements(const Tensor& Dx, std::span<const Point2> anchors) {
  const int K = Dx.dim(0), P = Dx.dim(1), n = Dx.dim(2);
  Tensor positions({K, P, n, 2});
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) {
      double x = anchors[static_cast<std::size_t>(i)].x;
      double y = anchors[static_cast<std::size_t>(i)].y;
      for (int tau = 0; tau < P; ++tau) {
        x += Dx(k, tau, i, 0);
        y += Dx(k, tau, i, 1);
        positions(k, tau, i, 0) = x;
        positions(k, tau, i, 1) = y;
      }
    }
  }
  return positions;
}

FeaturePair embed(const ModelParams& params, const Tensor& V, const Tensor& No, const Tensor& A, const Tensor& Eo) {
  ForwardTrace tr;
  embed_stage(params, V, No, A, Eo, tr);
  return {std::move(tr.Vf), std::move(tr.Af)};
}

FeaturePair compensate(const ModelParams& params, const Tensor& Vf, const Tensor& Af) {
  ForwardTrace tr;
  tr.T = Vf.dim(0);
  tr.n = Vf.dim(1);
  tr.Vf = Vf;
  tr.Af = Af;
  compensate_stage(params, tr);
  return {std::move(tr.Vfc), std::move(tr.Afc)};
}

Tensor stgcn_forward(const ModelParams& params, const Tensor& Vfc, const Tensor& Afc) {
  ForwardTrace tr;
  tr.T = Vfc.dim(0);
  tr.n = Vfc.dim(1);
  tr.Vfc = Vfc;
  tr.Afc = Afc;
  stgcn_stage(params, tr);
  return std::move(tr.Vstg);
}

Tensor tecn_forward(const ModelParams& params, const Tensor& Vstg) {
  if (Vstg.dim(0) != params.config.t_obs || Vstg.dim(2) != params.config.n_en) {
    throw std::invalid_argument("tecn: input shape " + shape_string(Vstg.shape()) + " does not match the model");
  }
  ForwardTrace tr;
  tr.T = Vstg.dim(0);
  tr.n = Vstg.dim(1);
  tr.Vstg = Vstg;
  tecn_stage(params, tr);
  return std::move(tr.Vp);
}

Tensor decode(const ModelParams& params, const Tensor& Vp, std::span<const Point2> anchors) {
  ForwardTrace tr;
  tr.P = Vp.dim(0);
  tr.n = Vp.dim(1);
  tr.Vp = Vp;
  return decode_stage(params, anchors, tr);
}

ForwardResult forward(const ModelParams& params, const STGraph& graph, ForwardTrace* trace) {
  check_graph(params, graph);
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  embed_stage(params, graph.V, graph.No, graph.A, graph.Eo, tr);
  compensate_stage(params, tr);
  stgcn_stage(params, tr);
  tecn_stage(params, tr);
  return {decode_stage(params, graph.anchors, tr)};
}

void backward(const ModelParams& params, const ForwardTrace& tr, const Tensor& d_positions, ModelParams& grad) {
  const ModelConfig& cfg = params.config;
  const int T = tr.T, P = tr.P, n = tr.n, E = cfg.n_en, D = cfg.n_de, G = cfg.n_gru, K = cfg.candidates;
  if (d_positions.shape() != std::vector<int>{K, P, n, 2}) {
    throw std::invalid_argument("backward: gradient shape " + shape_string(d_positions.shape()) + " does not match");
  }

  // Position integration: each displacement feeds every later position.
  RowMatrix d_out = RowMatrix::Zero(static_cast<Eigen::Index>(P) * n, 2 * K);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) {
      double sx = 0.0, sy = 0.0;
      for (int tau = P - 1; tau >= 0; --tau) {
        sx += d_positions(k, tau, i, 0);
        sy += d_positions(k, tau, i, 1);
        const auto row = static_cast<Eigen::Index>(tau) * n + i;
        d_out(row, 2 * k) = sx;
        d_out(row, 2 * k + 1) = sy;
      }
    }
  }

  RowMatrix d_a1 = affine_backward(tr.head_act[1], d_out, params.head[2], grad.head[2]);
  RowMatrix d_a0 = affine_backward(tr.head_act[0], tanh_grad(tr.head_act[1], d_a1), params.head[1], grad.head[1]);
  RowMatrix d_sp = affine_backward(tr.sp, tanh_grad(tr.head_act[0], d_a0), params.head[0], grad.head[0]);

  std::vector<RowMatrix> d_hf(static_cast<std::size_t>(P)), d_hb(static_cast<std::size_t>(P));
  for (int tau = 0; tau < P; ++tau) {
    d_hf[static_cast<std::size_t>(tau)] = d_sp.block(static_cast<Eigen::Index>(tau) * n, 0, n, G);
    d_hb[static_cast<std::size_t>(P - 1 - tau)] = d_sp.block(static_cast<Eigen::Index>(tau) * n, G, n, G);
  }
  std::vector<RowMatrix> dx_f, dx_b;
  gru_backward(params.decoder_fwd, tr.dec_fwd, d_hf, grad.decoder_fwd, &dx_f);
  gru_backward(params.decoder_bwd, tr.dec_bwd, d_hb, grad.decoder_bwd, &dx_b);
  Tensor d_vp({P, n, D});
  MutMap d_vp_rows = rows_of(d_vp);
  for (int tau = 0; tau < P; ++tau) {
    d_vp_rows.middleRows(static_cast<Eigen::Index>(tau) * n, n) =
        dx_f[static_cast<std::size_t>(tau)] + dx_b[static_cast<std::size_t>(P - 1 - tau)];
  }

  // TECN.
  const int Kn = cfg.n_te;
  Tensor d_hidden({P, n, D});
  fold_nodes(affine_backward(tr.tecn_in[2], gather_time_major(d_vp), params.tecn[2], grad.tecn[2]), Kn, d_hidden);
  Tensor d_pre1({P, n, D});
  Tensor d_act0 = d_hidden;
  for (std::size_t q = 0; q < d_pre1.size(); ++q) {
    const double a = tr.tecn_act[1].data()[q];
    d_pre1.data()[q] = d_hidden.data()[q] * (1.0 - a * a);
  }
  fold_nodes(affine_backward(tr.tecn_in[1], gather_time_major(d_pre1), params.tecn[1], grad.tecn[1]), Kn, d_act0);
  Tensor d_pre0({P, n, D});
  for (std::size_t q = 0; q < d_pre0.size(); ++q) {
    const double a = tr.tecn_act[0].data()[q];
    d_pre0.data()[q] = d_act0.data()[q] * (1.0 - a * a);
  }
  Tensor d_vstg({T, n, E});
  fold_nodes(affine_backward(tr.tecn_in[0], gather_time_major(d_pre0), params.tecn[0], grad.tecn[0]), Kn, d_vstg);

  // STGCN.
  Tensor d_vfc({T, n, E});
  const RowMatrix d_pre_stg = tanh_grad(rows_of(tr.Vstg), rows_of(d_vstg));
  rows_of(d_vfc) += d_pre_stg;
  const RowMatrix d_tconv_in = affine_backward(tr.tconv_in, d_pre_stg, params.stgcn_tconv, grad.stgcn_tconv);
  const int S = cfg.n_stg;
  const int half_s = S / 2;
  RowMatrix d_mix_out = RowMatrix::Zero(static_cast<Eigen::Index>(T) * n, E);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < S; ++k) {
      const int src = t + k - half_s;
      if (src < 0 || src >= T) continue;
      for (int i = 0; i < n; ++i) {
        d_mix_out.row(static_cast<Eigen::Index>(src) * n + i) +=
            d_tconv_in.block(static_cast<Eigen::Index>(t) * n + i, k * E, 1, E);
      }
    }
  }
  Tensor d_agg({T, n, E});
  rows_of(d_agg) = affine_backward(rows_of(tr.agg), tanh_grad(tr.mix_out, d_mix_out), params.stgcn_mix, grad.stgcn_mix);

  Tensor d_afc({T, n, n, E});
  std::vector<double> d_deg(static_cast<std::size_t>(n));
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < E; ++c) {
      for (int i = 0; i < n; ++i) {
        const double di = tr.degree(t, i, c);
        const double gi = d_agg(t, i, c);
        double dd = -gi * tr.agg(t, i, c) / (2.0 * di);
        // Node i's degree also scales its contribution to every row k.
        for (int k = 0; k < n; ++k) {
          dd -= d_agg(t, k, c) * tr.adj(t, k, i, c) * tr.Vfc(t, i, c) /
                (2.0 * std::sqrt(tr.degree(t, k, c)) * di * std::sqrt(di));
        }
        d_deg[static_cast<std::size_t>(i)] = dd;
      }
      for (int i = 0; i < n; ++i) {
        const double di = tr.degree(t, i, c);
        const double gi = d_agg(t, i, c);
        for (int j = 0; j < n; ++j) {
          const double norm = 1.0 / std::sqrt(di * tr.degree(t, j, c));
          d_vfc(t, j, c) += gi * tr.adj(t, i, j, c) * norm;
          if (i == j) continue;
          const double d_adj = gi * tr.Vfc(t, j, c) * norm + d_deg[static_cast<std::size_t>(i)];
          const double a = tr.Afc(t, i, j, c);
          d_afc(t, i, j, c) = a > 0.0 ? d_adj : (a < 0.0 ? -d_adj : 0.0);
        }
      }
    }
  }

  // Compensation.
  const auto comp_backward = [&](const Tensor& d_out_t, int per_step, const GruParams& gru, const AffineParams& out_map,
                                 const GruTrace& gtr, GruParams& g_gru, AffineParams& g_out, Tensor& d_in) {
    const ConstMap drows = rows_of(d_out_t);
    std::vector<RowMatrix> d_h(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      d_h[static_cast<std::size_t>(t)] = affine_backward(gtr.h[static_cast<std::size_t>(t)],
                                                         drows.middleRows(static_cast<Eigen::Index>(t) * per_step, per_step),
                                                         out_map, g_out);
    }
    std::vector<RowMatrix> d_x;
    gru_backward(gru, gtr, d_h, g_gru, &d_x);
    MutMap irows = rows_of(d_in);
    for (int t = 0; t < T; ++t) irows.middleRows(static_cast<Eigen::Index>(t) * per_step, per_step) = d_x[static_cast<std::size_t>(t)];
  };
  Tensor d_vf({T, n, E});
  Tensor d_af({T, n, n, E});
  comp_backward(d_vfc, n, params.node_comp_gru, params.node_comp_out, tr.node_gru, grad.node_comp_gru,
                grad.node_comp_out, d_vf);
  comp_backward(d_afc, n * n, params.edge_comp_gru, params.edge_comp_out, tr.edge_gru, grad.edge_comp_gru,
                grad.edge_comp_out, d_af);

  // Embedding.
  const ConstMap dvf = rows_of(std::as_const(d_vf));
  const ConstMap daf = rows_of(std::as_const(d_af));
  affine_backward(tr.node_in, (dvf.array() * tr.noe.array()).matrix(), params.node_embed, grad.node_embed);
  affine_backward(tr.node_code, (dvf.array() * tr.ne.array()).matrix(), params.node_code_embed, grad.node_code_embed);
  affine_backward(tr.edge_in, (daf.array() * tr.eoe.array()).matrix(), params.edge_embed, grad.edge_embed);
  affine_backward(tr.edge_code, (daf.array() * tr.ee.array()).matrix(), params.edge_code_embed, grad.edge_code_embed);
}

}  // namespace stgnit
