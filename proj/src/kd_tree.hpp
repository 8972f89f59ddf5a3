#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tlknn/core.hpp"

namespace tlknn {

// Exact kd-tree for the sup-norm. Ties are resolved by the same strict
// (distance, index) order as the brute-force reference, so pruning only
// discards boxes strictly farther than the current k-th candidate.
class KdTree {
 public:
  explicit KdTree(const PointSet& points, std::size_t leaf_size = 16);

  void knn(const PointSet& points, std::span<const double> x, std::size_t k,
           std::vector<Neighbor>& out) const;
  std::size_t ball_count(const PointSet& points, std::span<const double> x,
                         double r) const;
  void ball_query(const PointSet& points, std::span<const double> x, double r,
                  std::vector<Neighbor>& out) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;   // 0 means leaf
    std::size_t right = 0;
    std::size_t box = 0;    // offset of 2*dim box bounds in boxes_
  };

  std::size_t build(const PointSet& points, std::size_t begin, std::size_t end);
  double box_distance(std::size_t node, std::span<const double> x) const;
  double box_far_distance(std::size_t node, std::span<const double> x) const;

  std::size_t dim_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;
};

}  // namespace tlknn
