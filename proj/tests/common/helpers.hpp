#pragma once

// Shared test utilities: chi-square uniformity statistic, filesystem
// helpers, random tree/observation generators.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evorl/gp.hpp"
#include "evorl/rng.hpp"

namespace testutil {

// Pearson chi-square statistic against a uniform expectation.
inline double chi_square_uniform(const std::vector<long>& counts, long total) {
  const double expected =
      static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (long c : counts) {
    const double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

// 99th-percentile chi-square critical values by degrees of freedom; a
// statistic below the critical value means uniformity is not rejected at
// p > 0.01.
inline double chi_square_crit_99(int df) {
  static const std::map<int, double> table{
      {1, 6.635}, {2, 9.210}, {3, 11.345}, {4, 13.277}, {5, 15.086},
      {9, 21.666}};
  return table.at(df);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Recursive byte comparison of all regular files under two directories.
inline bool dirs_equal(const std::filesystem::path& a,
                       const std::filesystem::path& b) {
  namespace fs = std::filesystem;
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  for (const auto& r : rel_a)
    if (slurp(a / r) != slurp(b / r)) return false;
  return true;
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("evorl_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline evorl::PrimitiveSet cartpole_primitives() {
  return evorl::PrimitiveSet{4, 2, {-2.4, -3.0, -0.21, -3.5},
                             {2.4, 3.0, 0.21, 3.5}, false, false};
}

inline evorl::Observation random_obs(const evorl::PrimitiveSet& ps,
                                     evorl::Rng& rng, double margin = 0.2) {
  evorl::Observation obs(static_cast<std::size_t>(ps.state_dim));
  for (int d = 0; d < ps.state_dim; ++d) {
    const auto du = static_cast<std::size_t>(d);
    const double span = ps.feature_upper[du] - ps.feature_lower[du];
    obs[du] = rng.uniform(ps.feature_lower[du] - margin * span,
                          ps.feature_upper[du] + margin * span);
  }
  return obs;
}

}  // namespace testutil
