#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tlknn/core.hpp"
#include "tlknn/random.hpp"

namespace testing {

inline tlknn::PointSet random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  tlknn::Rng rng(seed);
  tlknn::PointSet ps(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = rng.uniform();
    ps.push_back(x);
  }
  return ps;
}

// Coordinates on a coarse lattice so that distance ties are common.
inline tlknn::PointSet lattice_points(std::size_t n, std::size_t dim, std::size_t steps,
                                      std::uint64_t seed) {
  tlknn::Rng rng(seed);
  tlknn::PointSet ps(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = static_cast<double>(rng.index(steps + 1)) / static_cast<double>(steps);
    ps.push_back(x);
  }
  return ps;
}

inline double sup_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

// Independent k-NN oracle: full sort of (distance, index) pairs.
inline std::vector<std::size_t> sorted_neighbours(const tlknn::PointSet& ps,
                                                  std::span<const double> x) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < ps.size(); ++i) all.emplace_back(sup_dist(ps[i], x), i);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (const auto& p : all) out.push_back(p.second);
  return out;
}

}  // namespace testing
