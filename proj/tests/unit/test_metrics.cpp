#include <cmath>

#include "doctest.h"
#include "stgnit/metrics.hpp"
#include "stgnit/random.hpp"

using namespace stgnit;

namespace {

LabelMask full_mask(int T, int m) { return LabelMask(static_cast<std::size_t>(T), std::vector<bool>(static_cast<std::size_t>(m), true)); }

Tensor random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-3, 3);
  return t;
}

LabelMask random_mask(int T, int m, Rng& rng) {
  LabelMask mask = full_mask(T, m);
  for (auto& row : mask)
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = rng.uniform() < 0.7;
  mask[0][0] = true;
  mask.back()[0] = true;
  return mask;
}

double err(const Tensor& a, const Tensor& b, int t, int i) {
  return std::hypot(a(t, i, 0) - b(t, i, 0), a(t, i, 1) - b(t, i, 1));
}

double brute_ade(const Tensor& pred, const Tensor& gt, const LabelMask& mask) {
  double s = 0;
  int n = 0;
  for (int t = 0; t < pred.dim(0); ++t)
    for (int i = 0; i < pred.dim(1); ++i)
      if (mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) s += err(pred, gt, t, i), ++n;
  return s / n;
}

double brute_fde(const Tensor& pred, const Tensor& gt, const LabelMask& mask) {
  const int T = pred.dim(0);
  double s = 0;
  int n = 0;
  for (int i = 0; i < pred.dim(1); ++i)
    if (mask.back()[static_cast<std::size_t>(i)]) s += err(pred, gt, T - 1, i), ++n;
  return s / n;
}

Tensor slice(const Tensor& cands, int k) {
  Tensor out({cands.dim(1), cands.dim(2), 2});
  for (int t = 0; t < cands.dim(1); ++t)
    for (int i = 0; i < cands.dim(2); ++i)
      for (int c = 0; c < 2; ++c) out(t, i, c) = cands(k, t, i, c);
  return out;
}

}  // namespace

TEST_CASE("hand cases") {
  Tensor gt({2, 1, 2}), pred({2, 1, 2});
  pred(1, 0, 0) = 1.0;
  CHECK(ade(pred, gt, full_mask(2, 1)) == 0.5);
  CHECK(ade(gt, gt, full_mask(2, 1)) == 0.0);

  Tensor g2({3, 2, 2}), p2({3, 2, 2});
  p2(2, 0, 0) = 1.0;
  p2(2, 1, 1) = 3.0;
  p2(0, 0, 0) = 50.0;
  CHECK(fde(p2, g2, full_mask(3, 2)) == 2.0);

  Tensor cands({3, 1, 1, 2}), g1({1, 1, 2});
  cands(0, 0, 0, 0) = 0.9;
  cands(1, 0, 0, 0) = 0.2;
  cands(2, 0, 0, 0) = 0.5;
  const auto r = min_k(cands, g1, full_mask(1, 1), Metric::Ade);
  CHECK(r.value == 0.2);
  CHECK(r.chosen == std::vector<int>{1});
}

TEST_CASE("metrics reject inputs without labels") {
  Tensor a({2, 1, 2});
  const LabelMask none(2, std::vector<bool>{false});
  CHECK_THROWS_AS(ade(a, a, none), MetricError);
  CHECK_THROWS_AS(fde(a, a, LabelMask{{true}, {false}}), MetricError);
}

TEST_CASE("metrics agree with brute-force loops on random instances") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 1 + static_cast<int>(rng.index(12)), m = 1 + static_cast<int>(rng.index(5));
    const int K = 1 + static_cast<int>(rng.index(3));
    const Tensor cands = random_tensor({K, T, m, 2}, rng), gt = random_tensor({T, m, 2}, rng);
    const LabelMask mask = random_mask(T, m, rng);
    const Tensor p0 = slice(cands, 0);
    CHECK(std::abs(ade(p0, gt, mask) - brute_ade(p0, gt, mask)) < 1e-12);
    CHECK(std::abs(fde(p0, gt, mask) - brute_fde(p0, gt, mask)) < 1e-12);
    CHECK(std::abs(ade(p0, gt, full_mask(T, m)) - brute_ade(p0, gt, full_mask(T, m))) < 1e-12);

    // Per-pedestrian best head, then the metric of that composite.
    Tensor best({T, m, 2});
    for (int i = 0; i < m; ++i) {
      int arg = 0;
      double low = INFINITY;
      for (int k = 0; k < K; ++k) {
        double s = 0;
        for (int t = 0; t < T; ++t)
          if (mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) s += err(slice(cands, k), gt, t, i);
        if (s < low) low = s, arg = k;
      }
      for (int t = 0; t < T; ++t)
        for (int c = 0; c < 2; ++c) best(t, i, c) = cands(arg, t, i, c);
    }
    CHECK(std::abs(min_k(cands, gt, mask, Metric::Ade).value - brute_ade(best, gt, mask)) < 1e-12);

    Tensor best_final({T, m, 2});
    for (int i = 0; i < m; ++i) {
      int arg = 0;
      double low = INFINITY;
      for (int k = 0; k < K; ++k) {
        const double e = err(slice(cands, k), gt, T - 1, i);
        if (e < low) low = e, arg = k;
      }
      for (int c = 0; c < 2; ++c) best_final(T - 1, i, c) = cands(arg, T - 1, i, c);
    }
    CHECK(std::abs(min_k(cands, gt, mask, Metric::Fde).value - brute_fde(best_final, gt, mask)) < 1e-12);

    if (K == 1) CHECK(std::abs(min_k(cands, gt, mask, Metric::Ade).value - ade(p0, gt, mask)) < 1e-12);
  }
}

TEST_CASE("adding a candidate never increases the best-of-K error") {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor big = random_tensor({3, 4, 3, 2}, rng), gt = random_tensor({4, 3, 2}, rng);
    Tensor two({2, 4, 3, 2});
    for (std::size_t k = 0; k < two.size(); ++k) two.data()[k] = big.data()[k];
    const auto mask = random_mask(4, 3, rng);
    CHECK(min_k(big, gt, mask, Metric::Ade).value <= min_k(two, gt, mask, Metric::Ade).value);
    CHECK(min_k(big, gt, mask, Metric::Fde).value <= min_k(two, gt, mask, Metric::Fde).value);
  }
}

TEST_CASE("duplicating a pedestrian leaves ADE unchanged") {
  Rng rng(33);
  const Tensor p = random_tensor({5, 1, 2}, rng), g = random_tensor({5, 1, 2}, rng);
  Tensor p2({5, 2, 2}), g2({5, 2, 2});
  for (int t = 0; t < 5; ++t)
    for (int i = 0; i < 2; ++i)
      for (int c = 0; c < 2; ++c) p2(t, i, c) = p(t, 0, c), g2(t, i, c) = g(t, 0, c);
  CHECK(ade(p2, g2, full_mask(5, 2)) == doctest::Approx(ade(p, g, full_mask(5, 1))).epsilon(1e-15));
}

TEST_CASE("winner-takes-all loss") {
  Rng rng(34);
  const Tensor gt = random_tensor({4, 2, 2}, rng);
  Tensor cands = random_tensor({3, 4, 2, 2}, rng);
  const auto mask = full_mask(4, 2);
  const auto l = window_loss(cands, gt, mask);
  CHECK(l.value >= 0.0);
  CHECK(l.value == min_k(cands, gt, mask, Metric::Ade).value);
  // Gradient reaches only the chosen head of each pedestrian.
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 2; ++i)
      if (k != l.chosen[static_cast<std::size_t>(i)])
        for (int t = 0; t < 4; ++t) CHECK(l.d_candidates(k, t, i, 0) == 0.0);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 2; ++i)
      for (int c = 0; c < 2; ++c) cands(1, t, i, c) = gt(t, i, c);
  CHECK(window_loss(cands, gt, mask).value == 0.0);

  const double h = 1e-6;
  Tensor bumped = cands;
  bumped(0, 2, 1, 0) += h;
  const auto base = window_loss(cands, gt, mask);
  const auto up = window_loss(bumped, gt, mask);
  CHECK((up.value - base.value) / h == doctest::Approx(base.d_candidates(0, 2, 1, 0)).epsilon(1e-4));

  Tensor one({1, 4, 2, 2});
  for (std::size_t k = 0; k < one.size(); ++k) one.data()[k] = cands.data()[k];
  CHECK(std::abs(window_loss(one, gt, mask).value - ade(slice(one, 0), gt, mask)) < 1e-12);
}

TEST_CASE("batch loss is the mean of window losses") {
  Rng rng(35);
  const Tensor g1 = random_tensor({3, 1, 2}, rng), g2 = random_tensor({3, 2, 2}, rng);
  const Tensor c1 = random_tensor({2, 3, 1, 2}, rng), c2 = random_tensor({2, 3, 2, 2}, rng);
  const auto m1 = full_mask(3, 1), m2 = full_mask(3, 2);
  double mean = 0;
  const auto out = batch_loss({{&c1, &g1, &m1}, {&c2, &g2, &m2}}, &mean);
  CHECK(mean == doctest::Approx((window_loss(c1, g1, m1).value + window_loss(c2, g2, m2).value) / 2));
  CHECK(out[0].d_candidates(0, 0, 0, 0) == doctest::Approx(window_loss(c1, g1, m1).d_candidates(0, 0, 0, 0) / 2));
  CHECK_THROWS_AS(batch_loss({}, &mean), std::invalid_argument);
}
