#include "kd_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tlknn {

KdTree::KdTree(const PointSet& points, std::size_t leaf_size)
    : dim_(points.dim()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!order_.empty()) {
    nodes_.reserve(2 * (order_.size() / leaf_size_ + 1));
    build(points, 0, order_.size());
  }
}

std::size_t KdTree::build(const PointSet& points, std::size_t begin,
                          std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end, 0, 0, boxes_.size()});
  boxes_.resize(boxes_.size() + 2 * dim_);
  double* box = boxes_.data() + nodes_[id].box;
  for (std::size_t j = 0; j < dim_; ++j) {
    box[2 * j] = std::numeric_limits<double>::infinity();
    box[2 * j + 1] = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = begin; i < end; ++i) {
    auto p = points[order_[i]];
    for (std::size_t j = 0; j < dim_; ++j) {
      box[2 * j] = std::min(box[2 * j], p[j]);
      box[2 * j + 1] = std::max(box[2 * j + 1], p[j]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split = 0;
  double widest = -1.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double w = box[2 * j + 1] - box[2 * j];
    if (w > widest) {
      widest = w;
      split = j;
    }
  }
  if (widest <= 0.0) return id;  // all duplicates

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](std::size_t a, std::size_t b) {
                     return points[a][split] < points[b][split];
                   });
  const std::size_t left = build(points, begin, mid);
  const std::size_t right = build(points, mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_distance(std::size_t node, std::span<const double> x) const {
  const double* box = boxes_.data() + nodes_[node].box;
  double d = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double gap = std::max({box[2 * j] - x[j], x[j] - box[2 * j + 1], 0.0});
    d = std::max(d, gap);
  }
  return d;
}

double KdTree::box_far_distance(std::size_t node,
                                std::span<const double> x) const {
  const double* box = boxes_.data() + nodes_[node].box;
  double d = 0.0;
  for (std::size_t j = 0; j < dim_; ++j)
    d = std::max({d, std::abs(x[j] - box[2 * j]), std::abs(x[j] - box[2 * j + 1])});
  return d;
}

void KdTree::knn(const PointSet& points, std::span<const double> x,
                 std::size_t k, std::vector<Neighbor>& out) const {
  out.clear();
  if (k == 0 || nodes_.empty()) return;
  // Max-heap on (distance, index): top is the current k-th candidate.
  auto cmp = [](const Neighbor& a, const Neighbor& b) { return neighbor_less(a, b); };
  std::vector<Neighbor> heap;
  heap.reserve(k + 1);

  auto visit = [&](auto&& self, std::size_t node) -> void {
    const Node& n = nodes_[node];
    if (heap.size() == k && box_distance(node, x) > heap.front().distance) return;
    if (n.left == 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        const Neighbor cand{idx, linf_distance(points[idx], x)};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), cmp);
        } else if (neighbor_less(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), cmp);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), cmp);
        }
      }
      return;
    }
    const double dl = box_distance(n.left, x);
    const double dr = box_distance(n.right, x);
    if (dl <= dr) {
      self(self, n.left);
      self(self, n.right);
    } else {
      self(self, n.right);
      self(self, n.left);
    }
  };
  visit(visit, 0);
  std::sort_heap(heap.begin(), heap.end(), cmp);
  out = std::move(heap);
}

std::size_t KdTree::ball_count(const PointSet& points, std::span<const double> x,
                               double r) const {
  if (nodes_.empty()) return 0;
  std::size_t count = 0;
  auto visit = [&](auto&& self, std::size_t node) -> void {
    const Node& n = nodes_[node];
    if (box_distance(node, x) > r) return;
    if (box_far_distance(node, x) <= r) {
      count += n.end - n.begin;
      return;
    }
    if (n.left == 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if (linf_distance(points[order_[i]], x) <= r) ++count;
      return;
    }
    self(self, n.left);
    self(self, n.right);
  };
  visit(visit, 0);
  return count;
}

void KdTree::ball_query(const PointSet& points, std::span<const double> x,
                        double r, std::vector<Neighbor>& out) const {
  out.clear();
  if (nodes_.empty()) return;
  auto visit = [&](auto&& self, std::size_t node) -> void {
    const Node& n = nodes_[node];
    if (box_distance(node, x) > r) return;
    if (n.left == 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        const double d = linf_distance(points[idx], x);
        if (d <= r) out.push_back({idx, d});
      }
      return;
    }
    self(self, n.left);
    self(self, n.right);
  };
  visit(visit, 0);
  std::sort(out.begin(), out.end(), neighbor_less);
}

}  // namespace tlknn
