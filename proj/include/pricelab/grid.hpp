#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "pricelab/linalg.hpp"

namespace pricelab {

// Caps a tensor grid so res^n stays below ~1M points regardless of dimension.
inline int clamped_resolution(int n, int res, long max_points = 1 << 20) {
  int r = res;
  while (r > 2 && std::pow(static_cast<double>(r), n) > static_cast<double>(max_points)) --r;
  return std::max(r, 2);
}

// Visits every point of the res^n tensor grid spanning [lower, upper].
// Endpoints included; res >= 2.
template <class F>
void for_each_grid_point(const Vec& lower, const Vec& upper, int res, F&& f) {
  const int n = static_cast<int>(lower.size());
  std::vector<int> ix(n, 0);
  Vec p(n);
  for (;;) {
    for (int i = 0; i < n; ++i)
      p[i] = lower[i] + (upper[i] - lower[i]) * ix[i] / (res - 1);
    f(p);
    int d = n - 1;
    while (d >= 0 && ++ix[d] == res) ix[d--] = 0;
    if (d < 0) break;
  }
}

}  // namespace pricelab
