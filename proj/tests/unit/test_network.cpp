#include <cmath>

#include "doctest.h"
#include "stgnit/network.hpp"
#include "support.hpp"

using namespace stgnit;

namespace {

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void randomize(ModelParams& p, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  p.for_each([&](const std::string&, Tensor& t) {
    for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  });
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

ModelConfig small_config() {
  ModelConfig c;
  c.t_obs = 4;
  c.t_pred = 3;
  c.n_en = 3;
  c.n_de = 2;
  c.n_gru = 2;
  c.n_stg = 3;
  c.n_te = 3;
  c.candidates = 2;
  c.mlp_hidden = 3;
  return c;
}

// Scalar GRU step for one sequence, gates (r, z, n).
std::vector<double> gru_step(const GruParams& p, const std::vector<double>& x, const std::vector<double>& h) {
  const int G = static_cast<int>(h.size()), in = static_cast<int>(x.size());
  std::vector<double> out(static_cast<std::size_t>(G));
  std::vector<double> gi(3 * static_cast<std::size_t>(G)), gh(3 * static_cast<std::size_t>(G));
  for (int r = 0; r < 3 * G; ++r) {
    double a = p.bi(r), b = p.bh(r);
    for (int c = 0; c < in; ++c) a += p.Wi(r, c) * x[static_cast<std::size_t>(c)];
    for (int c = 0; c < G; ++c) b += p.Wh(r, c) * h[static_cast<std::size_t>(c)];
    gi[static_cast<std::size_t>(r)] = a;
    gh[static_cast<std::size_t>(r)] = b;
  }
  for (int g = 0; g < G; ++g) {
    const auto u = static_cast<std::size_t>(g), uG = static_cast<std::size_t>(g + G), u2G = static_cast<std::size_t>(g + 2 * G);
    const double r = sigm(gi[u] + gh[u]);
    const double z = sigm(gi[uG] + gh[uG]);
    const double n = std::tanh(gi[u2G] + r * gh[u2G]);
    out[u] = (1 - z) * n + z * h[u];
  }
  return out;
}

}  // namespace

TEST_CASE("embedding is the product of the two affine images") {
  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 1);
  Rng rng(2);
  const Tensor V = random_tensor({4, 2, 4}, rng), No = random_tensor({4, 2, 4}, rng);
  const Tensor A = random_tensor({4, 2, 2, 4}, rng), Eo = random_tensor({4, 2, 2, 4}, rng);
  const auto f = embed(p, V, No, A, Eo);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < c.n_en; ++e) {
        double a = p.node_embed.b(e), b = p.node_code_embed.b(e);
        for (int k = 0; k < 4; ++k) {
          a += p.node_embed.W(e, k) * V(t, i, k);
          b += p.node_code_embed.W(e, k) * No(t, i, k);
        }
        CHECK(f.nodes(t, i, e) == doctest::Approx(a * b).epsilon(1e-12));
        for (int j = 0; j < 2; ++j) {
          double x = p.edge_embed.b(e), y = p.edge_code_embed.b(e);
          for (int k = 0; k < 4; ++k) {
            x += p.edge_embed.W(e, k) * A(t, i, j, k);
            y += p.edge_code_embed.W(e, k) * Eo(t, i, j, k);
          }
          CHECK(f.edges(t, i, j, e) == doctest::Approx(x * y).epsilon(1e-12));
        }
      }
}

TEST_CASE("a zero code with zero code bias gates the node off") {
  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 3);
  p.node_code_embed.b.set_zero();
  Rng rng(4);
  const Tensor V = random_tensor({4, 1, 4}, rng, 5.0);
  const Tensor No({4, 1, 4});
  const auto f = embed(p, V, No, Tensor({4, 1, 1, 4}), Tensor({4, 1, 1, 4}));
  for (double v : f.nodes.values()) CHECK(v == 0.0);
}

TEST_CASE("compensation matches a scalar GRU") {
  ModelConfig c = small_config();
  c.n_en = 2;
  c.n_gru = 2;
  c.t_obs = 3;
  ModelParams p(c);
  randomize(p, 5);
  Rng rng(6);
  const Tensor Vf = random_tensor({3, 2, 2}, rng), Af = random_tensor({3, 2, 2, 2}, rng);
  const auto out = compensate(p, Vf, Af);
  for (int i = 0; i < 2; ++i) {
    std::vector<double> h{p.node_comp_gru.h0(0), p.node_comp_gru.h0(1)};
    for (int t = 0; t < 3; ++t) {
      h = gru_step(p.node_comp_gru, {Vf(t, i, 0), Vf(t, i, 1)}, h);
      for (int e = 0; e < 2; ++e) {
        const double expect = p.node_comp_out.b(e) + p.node_comp_out.W(e, 0) * h[0] + p.node_comp_out.W(e, 1) * h[1];
        CHECK(std::abs(out.nodes(t, i, e) - expect) < 1e-10);
      }
    }
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      std::vector<double> h{p.edge_comp_gru.h0(0), p.edge_comp_gru.h0(1)};
      for (int t = 0; t < 3; ++t) {
        h = gru_step(p.edge_comp_gru, {Af(t, i, j, 0), Af(t, i, j, 1)}, h);
        for (int e = 0; e < 2; ++e) {
          const double expect =
              p.edge_comp_out.b(e) + p.edge_comp_out.W(e, 0) * h[0] + p.edge_comp_out.W(e, 1) * h[1];
          CHECK(std::abs(out.edges(t, i, j, e) - expect) < 1e-10);
        }
      }
    }
}

TEST_CASE("zero compensation weights give the bias image") {
  ModelConfig c = small_config();
  ModelParams p(c);
  Rng rng(7);
  for (auto& v : p.node_comp_out.b.values()) v = rng.uniform(-1, 1);
  const auto out = compensate(p, random_tensor({4, 2, 3}, rng), random_tensor({4, 2, 2, 3}, rng));
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 2; ++i)
      for (int e = 0; e < 3; ++e) CHECK(out.nodes(t, i, e) == p.node_comp_out.b(e));
}

TEST_CASE("graph convolution matches a brute-force evaluation") {
  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 8);
  Rng rng(9);
  const int T = 4, n = 3, E = c.n_en, S = c.n_stg;
  const Tensor Vfc = random_tensor({T, n, E}, rng), Afc = random_tensor({T, n, n, E}, rng);
  const Tensor out = stgcn_forward(p, Vfc, Afc);
  Tensor mix({T, n, E});
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) {
      std::vector<double> agg(static_cast<std::size_t>(E));
      for (int ch = 0; ch < E; ++ch) {
        const auto adj = [&](int a, int b) { return a == b ? 1.0 : std::abs(Afc(t, a, b, ch)); };
        const auto deg = [&](int a) {
          double d = 0;
          for (int b = 0; b < n; ++b) d += adj(a, b);
          return d;
        };
        for (int j = 0; j < n; ++j) agg[static_cast<std::size_t>(ch)] += adj(i, j) / std::sqrt(deg(i) * deg(j)) * Vfc(t, j, ch);
      }
      for (int e = 0; e < E; ++e) {
        double s = p.stgcn_mix.b(e);
        for (int ch = 0; ch < E; ++ch) s += p.stgcn_mix.W(e, ch) * agg[static_cast<std::size_t>(ch)];
        mix(t, i, e) = std::tanh(s);
      }
    }
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      for (int e = 0; e < E; ++e) {
        double s = p.stgcn_tconv.b(e) + Vfc(t, i, e);
        for (int k = 0; k < S; ++k) {
          const int src = t + k - S / 2;
          if (src < 0 || src >= T) continue;
          for (int ch = 0; ch < E; ++ch) s += p.stgcn_tconv.W(e, k, ch) * mix(src, i, ch);
        }
        CHECK(std::abs(out(t, i, e) - std::tanh(s)) < 1e-10);
      }
}

TEST_CASE("without edges the aggregation is the identity") {
  ModelConfig c = small_config();
  ModelParams p(c);
  // Mix and temporal conv reduced to pass-through of the residual.
  const int n = 3;
  Rng rng(10);
  const Tensor Vfc = random_tensor({4, n, 3}, rng, 0.5);
  const Tensor out = stgcn_forward(p, Vfc, Tensor({4, n, n, 3}));
  for (std::size_t k = 0; k < out.size(); ++k) CHECK(out.data()[k] == doctest::Approx(std::tanh(Vfc.data()[k])));
}

TEST_CASE("time extrapolator matches a direct convolution sum") {
  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 11);
  Rng rng(12);
  const int T = c.t_obs, P = c.t_pred, D = c.n_de, n = 4, Kn = c.n_te;
  const Tensor X = random_tensor({T, n, c.n_en}, rng);
  const auto layer = [&](const AffineParams& a, const Tensor& in) {
    const int Tin = in.dim(0), C = in.dim(2);
    Tensor out({P, n, D});
    for (int q = 0; q < P; ++q)
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < D; ++d) {
          double s = a.b(q, d);
          for (int k = 0; k < Kn; ++k) {
            const int src = i + k - Kn / 2;
            if (src < 0 || src >= n) continue;
            for (int t = 0; t < Tin; ++t)
              for (int ch = 0; ch < C; ++ch) s += a.W(q, d, k, t, ch) * in(t, src, ch);
          }
          out(q, i, d) = s;
        }
    return out;
  };
  auto tanh_all = [](Tensor t) {
    for (auto& v : t.values()) v = std::tanh(v);
    return t;
  };
  const Tensor a0 = tanh_all(layer(p.tecn[0], X));
  const Tensor a1 = tanh_all(layer(p.tecn[1], a0));
  Tensor hidden = a1;
  for (std::size_t k = 0; k < hidden.size(); ++k) hidden.data()[k] += a0.data()[k];
  const Tensor expect = layer(p.tecn[2], hidden);
  const Tensor got = tecn_forward(p, X);
  CHECK(got.shape() == std::vector<int>{P, n, D});
  for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got.data()[k] - expect.data()[k]) < 1e-10);
}

TEST_CASE("time extrapolator with zero weights emits the output bias on every node") {
  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 13);
  for (auto& layer : p.tecn) layer.W.set_zero();
  Rng rng(14);
  const Tensor out = tecn_forward(p, random_tensor({c.t_obs, 3, c.n_en}, rng));
  for (int q = 0; q < c.t_pred; ++q)
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < c.n_de; ++d) CHECK(out(q, i, d) == p.tecn[2].b(q, d));
}

TEST_CASE("node order reaches the time extrapolator through its node kernel") {
  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 14);
  Rng rng(15);
  const Tensor X = random_tensor({c.t_obs, 4, c.n_en}, rng);
  Tensor swapped = X;
  for (int t = 0; t < c.t_obs; ++t)
    for (int ch = 0; ch < c.n_en; ++ch) std::swap(swapped(t, 0, ch), swapped(t, 3, ch));
  const Tensor a = tecn_forward(p, X), b = tecn_forward(p, swapped);
  bool differs = false;
  for (int q = 0; q < c.t_pred; ++q)
    for (int d = 0; d < c.n_de; ++d) differs = differs || std::abs(a(q, 0, d) - b(q, 3, d)) > 1e-9;
  CHECK(differs);

  // A single-tap kernel acts per node and commutes with permutations.
  c.n_te = 1;
  ModelParams q(c);
  randomize(q, 14);
  const Tensor e = tecn_forward(q, X), f = tecn_forward(q, swapped);
  for (int t = 0; t < c.t_pred; ++t)
    for (int d = 0; d < c.n_de; ++d) {
      CHECK(e(t, 0, d) == f(t, 3, d));
      CHECK(e(t, 1, d) == f(t, 1, d));
    }
}

TEST_CASE("decoding integrates displacements from the anchor") {
  Tensor Dx({2, 3, 1, 2});
  for (int k = 0; k < 2; ++k)
    for (int t = 0; t < 3; ++t) Dx(k, t, 0, 0) = 1.0;
  const std::vector<Point2> anchor{{2.0, -1.0}};
  const Tensor pos = integrate_displacements(Dx, anchor);
  for (int t = 0; t < 3; ++t) {
    CHECK(pos(0, t, 0, 0) == 2.0 + (t + 1));
    CHECK(pos(1, t, 0, 1) == -1.0);
  }

  ModelConfig c = small_config();
  ModelParams p(c);
  randomize(p, 16);
  p.head[2].W.set_zero();
  p.head[2].b.set_zero();
  Rng rng(17);
  const Tensor Vp = random_tensor({c.t_pred, 2, c.n_de}, rng);
  const std::vector<Point2> anchors{{1, 2}, {3, 4}};
  const Tensor still = decode(p, Vp, anchors);
  for (int k = 0; k < c.candidates; ++k)
    for (int t = 0; t < c.t_pred; ++t)
      for (int i = 0; i < 2; ++i) {
        CHECK(still(k, t, i, 0) == anchors[static_cast<std::size_t>(i)].x);
        CHECK(still(k, t, i, 1) == anchors[static_cast<std::size_t>(i)].y);
      }

  randomize(p, 16);
  const std::vector<Point2> moved{{1.5, 0}, {3.5, 2}};
  const Tensor a = decode(p, Vp, anchors), b = decode(p, Vp, moved);
  for (int k = 0; k < c.candidates; ++k)
    for (int t = 0; t < c.t_pred; ++t) {
      CHECK(b(k, t, 0, 0) - a(k, t, 0, 0) == doctest::Approx(0.5));
      CHECK(b(k, t, 1, 1) - a(k, t, 1, 1) == doctest::Approx(-2.0));
    }
}

TEST_CASE("forward shapes and determinism") {
  const ModelConfig c;
  const ModelParams p = initialize_params(c, 3);
  Rng rng(18);
  const Window w = test::random_window(rng, 5, 8, 12);
  const STGraph g = build_graph(w);
  const auto a = forward(p, g);
  CHECK(a.positions.shape() == std::vector<int>{3, 12, 5, 2});
  CHECK(forward(p, g).positions == a.positions);
  ForwardTrace tr;
  forward(p, g, &tr);
  CHECK(tr.Vf.shape() == std::vector<int>{8, 5, 9});
  CHECK(tr.Af.shape() == std::vector<int>{8, 5, 5, 9});
  CHECK(tr.Vstg.shape() == std::vector<int>{8, 5, 9});
  CHECK(tr.Vp.shape() == std::vector<int>{12, 5, 7});
  CHECK(tr.sp.cols() == 128);

  ModelConfig wide = c;
  wide.n_gru = 128;
  const ModelParams q = initialize_params(wide, 3);
  ForwardTrace tw;
  CHECK(forward(q, g, &tw).positions.shape() == a.positions.shape());
  CHECK(tw.sp.cols() == 256);

  ModelConfig other = c;
  other.t_obs = 6;
  CHECK_THROWS_AS(forward(initialize_params(other, 1), g), std::invalid_argument);
}
