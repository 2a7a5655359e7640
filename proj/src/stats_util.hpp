#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace modalms::detail {

//! Linear-interpolation quantile of a sorted sample, q in [0, 1].
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double pos = q * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double sample_sd(const std::vector<double>& v) {
  const std::size_t n = v.size();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace modalms::detail
