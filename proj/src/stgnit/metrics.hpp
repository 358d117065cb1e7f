#pragma once

#include <stdexcept>
#include <vector>

#include "stgnit/tensor.hpp"

namespace stgnit {

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// mask[t][i]: frame t of pedestrian i has a ground-truth label.
using LabelMask = std::vector<std::vector<bool>>;

// Mean Euclidean error over labelled (t, i); pred and gt are [T, m, 2].
// With a full mask this divides by m * T exactly.
double ade(const Tensor& pred, const Tensor& gt, const LabelMask& mask);
// Mean final-frame error over pedestrians whose final frame is labelled.
double fde(const Tensor& pred, const Tensor& gt, const LabelMask& mask);

enum class Metric { Ade, Fde };

// Best-of-K result. Each pedestrian keeps the candidate minimising its own
// error; value is the metric of that composite. error_sum / count is value,
// kept separately so results pool across windows.
struct MinKResult {
  double value = 0.0;
  double error_sum = 0.0;
  int count = 0;
  std::vector<int> chosen;  // per pedestrian; -1 when it has no label
};

// candidates: [K, T, m, 2]. Throws MetricError when nothing is labelled.
MinKResult min_k(const Tensor& candidates, const Tensor& gt, const LabelMask& mask, Metric metric);

// Winner-takes-all masked ADE for one window: min_k(ADE).value, with the
// gradient w.r.t. candidates flowing only through each pedestrian's chosen head.
struct LossResult {
  double value = 0.0;
  std::vector<int> chosen;
  Tensor d_candidates;  // [K, T, m, 2]
};
LossResult window_loss(const Tensor& candidates, const Tensor& gt, const LabelMask& mask);

struct LossSample {
  const Tensor* candidates;
  const Tensor* gt;
  const LabelMask* mask;
};
// Mean of window_loss over the batch; gradients are scaled by 1/batch.
// Throws std::invalid_argument on an empty batch.
std::vector<LossResult> batch_loss(const std::vector<LossSample>& batch, double* mean = nullptr);

}  // namespace stgnit
