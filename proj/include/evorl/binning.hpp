#pragma once

// Discretization of continuous observations into a row-major bin grid.
// Dimension 0 is the most significant digit of the index. Observations
// outside the declared bounds are clipped onto the boundary bin, so the
// mapping is total over finite observations.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "evorl/behavior_tree.hpp"  // Observation

namespace evorl {

struct BinGrid {
  std::vector<int> bins_per_dim;
  std::vector<double> lower;
  std::vector<double> upper;

  int dims() const { return static_cast<int>(bins_per_dim.size()); }

  long total_bins() const {
    long t = 1;
    for (int b : bins_per_dim) t *= b;
    return t;
  }

  friend bool operator==(const BinGrid&, const BinGrid&) = default;
};

inline void validate_grid(const BinGrid& g) {
  if (g.bins_per_dim.empty() || g.lower.size() != g.bins_per_dim.size() ||
      g.upper.size() != g.bins_per_dim.size())
    throw std::invalid_argument("bin grid: inconsistent dimension counts");
  for (std::size_t i = 0; i < g.bins_per_dim.size(); ++i) {
    if (g.bins_per_dim[i] < 1)
      throw std::invalid_argument("bin grid: bins per dimension must be >= 1");
    if (!(g.lower[i] < g.upper[i]))
      throw std::invalid_argument("bin grid: lower bound must be < upper");
  }
}

inline int bin_index(const BinGrid& g, const Observation& obs) {
  if (static_cast<int>(obs.size()) != g.dims())
    throw std::invalid_argument("bin_index: observation dimension mismatch");
  long idx = 0;
  for (int d = 0; d < g.dims(); ++d) {
    const auto du = static_cast<std::size_t>(d);
    const int n = g.bins_per_dim[du];
    const double lo = g.lower[du];
    const double hi = g.upper[du];
    double x = obs[du];
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    int i = static_cast<int>((x - lo) / (hi - lo) * n);
    if (i >= n) i = n - 1;  // x == hi lands here
    if (i < 0) i = 0;
    idx = idx * n + i;
  }
  return static_cast<int>(idx);
}

}  // namespace evorl
