#pragma once

// Metric-space primitives over ([0,1]^d, sup-norm), transfer samples and an
// exact nearest-neighbour index.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace tlknn {

using Label = std::uint8_t;

struct MetricSpace {
  std::size_t dim = 1;
  double diameter = 1.0;

  static MetricSpace unit_cube(std::size_t dim);
};

/// A point of the unit hypercube. Coordinates are finite and lie in [0,1].
class Point {
 public:
  explicit Point(std::vector<double> coords);
  Point(std::initializer_list<double> coords);

  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t j) const { return coords_[j]; }
  std::span<const double> coords() const { return coords_; }
  operator std::span<const double>() const { return coords_; }

  bool operator==(const Point&) const = default;

 private:
  std::vector<double> coords_;
};

/// Flat, index-stable storage of points sharing one dimension.
class PointSet {
 public:
  explicit PointSet(std::size_t dim = 1) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> flat);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  Point point(std::size_t i) const;

  void push_back(std::span<const double> x);
  void reserve(std::size_t n) { data_.reserve(n * dim_); }
  void append(const PointSet& other);

  PointSet subset(std::span<const std::size_t> indices) const;
  const std::vector<double>& flat() const { return data_; }

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

/// Throws std::invalid_argument on dimension mismatch.
double linf_distance(std::span<const double> a, std::span<const double> b);

/// Source, labelled target and unlabelled target points. Pooled indices put
/// the source block first: source occupies [0, n_P), labelled target
/// [n_P, n_P + n_Ql) and unlabelled target the rest.
struct TransferSample {
  PointSet source;
  std::vector<Label> source_labels;
  PointSet target_labeled;
  std::vector<Label> target_labels;
  PointSet target_unlabeled;

  TransferSample() = default;
  TransferSample(PointSet source, std::vector<Label> source_labels,
                 PointSet target_labeled, std::vector<Label> target_labels,
                 PointSet target_unlabeled);

  std::size_t n_source() const { return source.size(); }
  std::size_t n_target() const {
    return target_labeled.size() + target_unlabeled.size();
  }
  std::size_t size() const { return n_source() + n_target(); }
  std::size_t dim() const { return source.dim(); }

  /// All features in pooled index order.
  PointSet pooled_points() const;

  /// Checks the invariants; throws std::invalid_argument.
  void validate() const;
};

struct Neighbor {
  std::size_t index;
  double distance;

  bool operator==(const Neighbor&) const = default;
};

/// Strict (distance, index) order used for every neighbour ranking.
inline bool neighbor_less(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

// Reference implementations. Every accelerated query must agree with these.
std::vector<Neighbor> brute_force_knn(const PointSet& points,
                                      std::span<const double> x, std::size_t k);
std::size_t brute_force_ball_count(const PointSet& points,
                                   std::span<const double> x, double r);

class KdTree;

enum class NnBackend { kd_tree, brute_force };

/// Exact k-NN / closed-ball index under the sup-norm. Immutable once built;
/// concurrent const queries are safe.
class NnIndex {
 public:
  explicit NnIndex(PointSet points, NnBackend backend = NnBackend::kd_tree);
  ~NnIndex();
  NnIndex(NnIndex&&) noexcept;
  NnIndex& operator=(NnIndex&&) noexcept;

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.dim(); }
  const PointSet& points() const { return points_; }
  NnBackend backend() const { return backend_; }

  /// k nearest points sorted by (distance, index). Requires 1 <= k <= size().
  std::vector<Neighbor> knn(std::span<const double> x, std::size_t k) const;
  std::vector<std::size_t> knn_indices(std::span<const double> x,
                                       std::size_t k) const;

  /// Number of points with distance <= r.
  std::size_t ball_count(std::span<const double> x, double r) const;

  /// Points with distance <= r, sorted by (distance, index).
  std::vector<Neighbor> ball_query(std::span<const double> x, double r) const;

 private:
  void check_query(std::span<const double> x) const;

  PointSet points_;
  NnBackend backend_;
  std::unique_ptr<KdTree> tree_;
};

}  // namespace tlknn
