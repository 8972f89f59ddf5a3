#pragma once

// Simultaneous k-2k covers over a dyadic grid of k, and the label-request
// ledger they induce.

#include <cstddef>
#include <span>
#include <vector>

#include "tlknn/core.hpp"

namespace tlknn {

/// Number of members among the 2k nearest neighbours of x, taking the most
/// favourable choice when the 2k-th distance is tied.
std::size_t members_among_2k(const NnIndex& index, const std::vector<bool>& member,
                             std::span<const double> x, std::size_t k);

/// True iff every point is in R or some valid choice of its 2k-NN (itself
/// included) holds at least k members of R. Requires 1 <= k <= n/2.
bool is_k2k_cover(const PointSet& points, std::span<const std::size_t> retained,
                  std::size_t k);
bool is_k2k_cover(const NnIndex& index, std::span<const std::size_t> retained,
                  std::size_t k);

/// ceil(v_b * ln(2 n) + ln(6 / delta)).
std::size_t cover_base_level(std::size_t n_total, double delta, std::size_t v_b);

/// {2^i n0 : i = 0..floor(log2(max(n_P, n_Q) / (2 n0)))}; empty when
/// max(n_P, n_Q) < 2 n0.
std::vector<std::size_t> cover_level_grid(std::size_t n_source, std::size_t n_target,
                                          std::size_t n0);

struct CoverLevel {
  std::size_t k = 0;
  std::vector<std::size_t> added;  // target indices added at this level
};

class CoverIndex {
 public:
  /// Validates the structural invariants (source block retained, indices in
  /// range). Cover validity itself is checked by is_k2k_cover.
  CoverIndex(std::size_t n_source, std::size_t n_target, std::vector<std::size_t> retained,
             std::size_t k0, std::vector<CoverLevel> levels, double delta);

  std::size_t n_source() const { return n_source_; }
  std::size_t n_target() const { return n_target_; }
  const std::vector<std::size_t>& retained() const { return retained_; }
  std::size_t k0() const { return k0_; }
  const std::vector<CoverLevel>& levels() const { return levels_; }
  std::vector<std::size_t> level_ks() const;
  /// Target indices whose labels are requested, ascending.
  const std::vector<std::size_t>& queries() const { return queries_; }
  double delta() const { return delta_; }
  bool contains(std::size_t i) const;

 private:
  std::size_t n_source_;
  std::size_t n_target_;
  std::vector<std::size_t> retained_;
  std::size_t k0_;
  std::vector<CoverLevel> levels_;
  std::vector<std::size_t> queries_;
  double delta_;
};

/// Algorithm: start from R = source indices; at each level k add every
/// target index with fewer than k members of R (as of the start of the
/// level) among its 2k pooled nearest neighbours. Only features are used.
CoverIndex build_cover(const TransferSample& sample, double delta, std::size_t v_b);
CoverIndex build_cover(const NnIndex& pooled, std::size_t n_source, double delta,
                       std::size_t v_b);

struct RequestedLabels {
  std::size_t count = 0;
  std::vector<std::size_t> indices;
};

RequestedLabels requested_labels(const CoverIndex& cover);

}  // namespace tlknn
