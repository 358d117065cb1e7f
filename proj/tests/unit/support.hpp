#pragma once

#include <string>
#include <vector>

#include "stgnit/core_data.hpp"
#include "stgnit/random.hpp"

namespace stgnit::test {

// Window of m pedestrians with random positions; each history frame is
// observed with probability p_observed, the last frame always when force_last.
inline Window random_window(Rng& rng, int m, int t_obs, int t_pred, double p_observed = 1.0,
                            bool force_last = true, double extent = 3.0) {
  Window w;
  w.scene_id = "s";
  w.t0 = t_obs - 1;
  w.t_obs = t_obs;
  w.t_pred = t_pred;
  for (int i = 0; i < m; ++i) {
    w.pedestrian_ids.push_back("p" + std::to_string(i));
    double x = rng.uniform(-extent, extent), y = rng.uniform(-extent, extent);
    const double vx = rng.uniform(-0.4, 0.4), vy = rng.uniform(-0.4, 0.4);
    std::vector<ObservedPosition> h, f;
    for (int t = 0; t < t_obs; ++t) {
      const bool seen = (force_last && t == t_obs - 1) || rng.uniform() < p_observed;
      h.push_back(seen ? ObservedPosition::observed(x, y) : ObservedPosition::unobserved());
      x += vx;
      y += vy;
    }
    for (int t = 0; t < t_pred; ++t) {
      f.push_back(ObservedPosition::observed(x, y));
      x += vx;
      y += vy;
    }
    w.history.push_back(std::move(h));
    w.future.push_back(std::move(f));
  }
  return w;
}

inline std::vector<ObservedPosition> pattern_row(unsigned bits, int len) {
  std::vector<ObservedPosition> row;
  for (int t = 0; t < len; ++t) {
    row.push_back((bits >> t) & 1u ? ObservedPosition::observed(t * 0.5, 1.0) : ObservedPosition::unobserved());
  }
  return row;
}

}  // namespace stgnit::test
