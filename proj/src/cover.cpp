#include "tlknn/cover.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tlknn/log.hpp"

namespace tlknn {

std::size_t members_among_2k(const NnIndex& index, const std::vector<bool>& member,
                             std::span<const double> x, std::size_t k) {
  const std::size_t want = 2 * k;
  const auto nn = index.knn(x, want);
  const double threshold = nn.back().distance;
  std::size_t strict = 0;
  std::size_t strict_members = 0;
  for (const auto& nb : nn) {
    if (nb.distance < threshold) {
      ++strict;
      if (member[nb.index]) ++strict_members;
    }
  }
  // Points tied at the threshold: fill the remaining slots members-first.
  std::size_t tied_members = 0;
  for (const auto& nb : index.ball_query(x, threshold))
    if (nb.distance == threshold && member[nb.index]) ++tied_members;
  return strict_members + std::min(tied_members, want - strict);
}

bool is_k2k_cover(const NnIndex& index, std::span<const std::size_t> retained,
                  std::size_t k) {
  const std::size_t n = index.size();
  if (k == 0 || 2 * k > n)
    throw std::invalid_argument("is_k2k_cover: k=" + std::to_string(k) +
                                " must satisfy 1 <= k <= n/2 (n=" + std::to_string(n) + ")");
  std::vector<bool> member(n, false);
  for (std::size_t i : retained) {
    if (i >= n) throw std::out_of_range("is_k2k_cover: retained index out of range");
    member[i] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (member[i]) continue;
    if (members_among_2k(index, member, index.points()[i], k) < k) return false;
  }
  return true;
}

bool is_k2k_cover(const PointSet& points, std::span<const std::size_t> retained,
                  std::size_t k) {
  return is_k2k_cover(NnIndex(points), retained, k);
}

std::size_t cover_base_level(std::size_t n_total, double delta, std::size_t v_b) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  if (v_b == 0) throw std::invalid_argument("v_b must be >= 1");
  if (n_total == 0) throw std::invalid_argument("cover_base_level: empty sample");
  const double v = static_cast<double>(v_b) * std::log(2.0 * static_cast<double>(n_total)) +
                   std::log(6.0 / delta);
  return static_cast<std::size_t>(std::ceil(v));
}

std::vector<std::size_t> cover_level_grid(std::size_t n_source, std::size_t n_target,
                                          std::size_t n0) {
  std::vector<std::size_t> ks;
  const std::size_t top = std::max(n_source, n_target);
  if (n0 == 0) throw std::invalid_argument("cover_level_grid: n0 must be positive");
  // i runs while 2^i n0 <= top / 2, i.e. 2^{i+1} n0 <= top.
  for (std::size_t k = n0; 2 * k <= top; k *= 2) ks.push_back(k);
  return ks;
}

CoverIndex::CoverIndex(std::size_t n_source, std::size_t n_target,
                       std::vector<std::size_t> retained, std::size_t k0,
                       std::vector<CoverLevel> levels, double delta)
    : n_source_(n_source),
      n_target_(n_target),
      retained_(std::move(retained)),
      k0_(k0),
      levels_(std::move(levels)),
      delta_(delta) {
  std::sort(retained_.begin(), retained_.end());
  if (std::adjacent_find(retained_.begin(), retained_.end()) != retained_.end())
    throw std::invalid_argument("cover: duplicate retained index");
  if (!retained_.empty() && retained_.back() >= n_source_ + n_target_)
    throw std::invalid_argument("cover: retained index out of range");
  for (std::size_t i = 0; i < n_source_; ++i)
    if (i >= retained_.size() || retained_[i] != i)
      throw std::invalid_argument("cover: every source index must be retained");
  queries_.assign(retained_.begin() + static_cast<std::ptrdiff_t>(n_source_), retained_.end());
}

std::vector<std::size_t> CoverIndex::level_ks() const {
  std::vector<std::size_t> ks;
  for (const auto& l : levels_) ks.push_back(l.k);
  return ks;
}

bool CoverIndex::contains(std::size_t i) const {
  return std::binary_search(retained_.begin(), retained_.end(), i);
}

CoverIndex build_cover(const NnIndex& pooled, std::size_t n_source, double delta,
                       std::size_t v_b) {
  const std::size_t n = pooled.size();
  if (n_source > n) throw std::invalid_argument("build_cover: n_source exceeds sample size");
  const std::size_t n_target = n - n_source;
  const std::size_t n0 = cover_base_level(n, delta, v_b);
  const auto ks = cover_level_grid(n_source, n_target, n0);

  std::vector<bool> member(n, false);
  for (std::size_t i = 0; i < n_source; ++i) member[i] = true;

  if (ks.empty() && n_target > 0)
    log_warning("build_cover: sample too small for any cover level (max(n_P, n_Q)=" +
                std::to_string(std::max(n_source, n_target)) + " < 2*n0=" +
                std::to_string(2 * n0) + "); no target labels requested");

  std::vector<CoverLevel> levels;
  for (std::size_t k : ks) {
    CoverLevel level{k, {}};
    // Membership is frozen for the whole level.
    for (std::size_t i = n_source; i < n; ++i) {
      if (member[i]) continue;
      if (members_among_2k(pooled, member, pooled.points()[i], k) < k) level.added.push_back(i);
    }
    for (std::size_t i : level.added) member[i] = true;
    levels.push_back(std::move(level));
  }

  std::vector<std::size_t> retained;
  for (std::size_t i = 0; i < n; ++i)
    if (member[i]) retained.push_back(i);
  return CoverIndex(n_source, n_target, std::move(retained), n0, std::move(levels), delta);
}

CoverIndex build_cover(const TransferSample& sample, double delta, std::size_t v_b) {
  sample.validate();
  return build_cover(NnIndex(sample.pooled_points()), sample.n_source(), delta, v_b);
}

RequestedLabels requested_labels(const CoverIndex& cover) {
  return RequestedLabels{cover.queries().size(), cover.queries()};
}

}  // namespace tlknn
