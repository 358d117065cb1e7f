#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace stgnit {

// Engine plus distribution helpers with a fixed, library-independent mapping
// from engine output to values, so seeded runs reproduce across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n); n > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }
  std::uint64_t next() { return engine_(); }

  // Fisher-Yates from the back.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(index(i))]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stgnit
