#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stgnit {

// Dense row-major array of doubles with a runtime shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0) : shape_(std::move(shape)) {
    for (int d : shape_) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    }
    data_.assign(count(shape_), fill);
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset(idx...)];
  }
  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset(idx...)];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(0.0); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  static std::size_t count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  }

 private:
  template <typename... Idx>
  std::size_t offset(Idx... idx) const {
    assert(sizeof...(Idx) == shape_.size());
    std::size_t off = 0;
    std::size_t axis = 0;
    ((assert(static_cast<int>(idx) >= 0 && static_cast<int>(idx) < shape_[axis]),
      off = off * static_cast<std::size_t>(shape_[axis++]) + static_cast<std::size_t>(idx)),
     ...);
    return off;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<int>& shape);

}  // namespace stgnit
