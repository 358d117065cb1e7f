#include "stgnit/metrics.hpp"

#include <cmath>
#include <limits>

namespace stgnit {

namespace {

void check_shapes(const Tensor& pred, const Tensor& gt, const LabelMask& mask) {
  if (pred.shape() != gt.shape() || pred.rank() != 3 || pred.dim(2) != 2) {
    throw std::invalid_argument("metric: prediction " + shape_string(pred.shape()) + " vs label " +
                                shape_string(gt.shape()));
  }
  if (static_cast<int>(mask.size()) != pred.dim(0)) throw std::invalid_argument("metric: mask length mismatch");
  for (const auto& row : mask) {
    if (static_cast<int>(row.size()) != pred.dim(1)) throw std::invalid_argument("metric: mask width mismatch");
  }
}

double err(const Tensor& a, int k, int t, int i, const Tensor& gt) {
  return std::hypot(a(k, t, i, 0) - gt(t, i, 0), a(k, t, i, 1) - gt(t, i, 1));
}

}  // namespace

double ade(const Tensor& pred, const Tensor& gt, const LabelMask& mask) {
  check_shapes(pred, gt, mask);
  double sum = 0.0;
  int count = 0;
  for (int t = 0; t < pred.dim(0); ++t) {
    for (int i = 0; i < pred.dim(1); ++i) {
      if (!mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) continue;
      sum += std::hypot(pred(t, i, 0) - gt(t, i, 0), pred(t, i, 1) - gt(t, i, 1));
      ++count;
    }
  }
  if (count == 0) throw MetricError("ade: no labelled frames");
  return sum / count;
}

double fde(const Tensor& pred, const Tensor& gt, const LabelMask& mask) {
  check_shapes(pred, gt, mask);
  const int last = pred.dim(0) - 1;
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < pred.dim(1); ++i) {
    if (last < 0 || !mask[static_cast<std::size_t>(last)][static_cast<std::size_t>(i)]) continue;
    sum += std::hypot(pred(last, i, 0) - gt(last, i, 0), pred(last, i, 1) - gt(last, i, 1));
    ++count;
  }
  if (count == 0) throw MetricError("fde: no pedestrian has a final-frame label");
  return sum / count;
}

MinKResult min_k(const Tensor& candidates, const Tensor& gt, const LabelMask& mask, Metric metric) {
  if (candidates.rank() != 4 || candidates.dim(0) < 1) throw std::invalid_argument("min_k: need [K, T, m, 2], K >= 1");
  const int K = candidates.dim(0), T = candidates.dim(1), m = candidates.dim(2);
  check_shapes(Tensor({T, m, 2}), gt, mask);
  MinKResult r;
  r.chosen.assign(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int frames = 0;
    for (int k = 0; k < K; ++k) {
      double s = 0.0;
      frames = 0;
      if (metric == Metric::Ade) {
        for (int t = 0; t < T; ++t) {
          if (!mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) continue;
          s += err(candidates, k, t, i, gt);
          ++frames;
        }
      } else if (T > 0 && mask[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(i)]) {
        s = err(candidates, k, T - 1, i, gt);
        frames = 1;
      }
      if (frames == 0) break;
      if (s < best) {
        best = s;
        r.chosen[static_cast<std::size_t>(i)] = k;
      }
    }
    if (frames == 0) continue;
    r.error_sum += best;
    r.count += frames;
  }
  if (r.count == 0) throw MetricError("min_k: no labelled frames");
  r.value = r.error_sum / r.count;
  return r;
}

LossResult window_loss(const Tensor& candidates, const Tensor& gt, const LabelMask& mask) {
  const MinKResult best = min_k(candidates, gt, mask, Metric::Ade);
  LossResult out;
  out.value = best.value;
  out.chosen = best.chosen;
  out.d_candidates = Tensor(candidates.shape());
  const int T = candidates.dim(1), m = candidates.dim(2);
  const double scale = 1.0 / best.count;
  for (int i = 0; i < m; ++i) {
    const int k = best.chosen[static_cast<std::size_t>(i)];
    if (k < 0) continue;
    for (int t = 0; t < T; ++t) {
      if (!mask[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) continue;
      const double dx = candidates(k, t, i, 0) - gt(t, i, 0);
      const double dy = candidates(k, t, i, 1) - gt(t, i, 1);
      const double e = std::hypot(dx, dy);
      if (e == 0.0) continue;  // subgradient 0 at the kink
      out.d_candidates(k, t, i, 0) = scale * dx / e;
      out.d_candidates(k, t, i, 1) = scale * dy / e;
    }
  }
  return out;
}

std::vector<LossResult> batch_loss(const std::vector<LossSample>& batch, double* mean) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  std::vector<LossResult> out;
  out.reserve(batch.size());
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    out.push_back(window_loss(*s.candidates, *s.gt, *s.mask));
    total += out.back().value;
    for (double& g : out.back().d_candidates.values()) g *= inv;
  }
  if (mean) *mean = total * inv;
  return out;
}

}  // namespace stgnit
