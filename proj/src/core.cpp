#include "tlknn/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kd_tree.hpp"

namespace tlknn {

namespace {

void check_coords(std::span<const double> coords) {
  if (coords.empty()) throw std::invalid_argument("point must have dimension >= 1");
  for (double c : coords) {
    if (!std::isfinite(c) || c < 0.0 || c > 1.0)
      throw std::invalid_argument("point coordinate outside [0,1]: " + std::to_string(c));
  }
}

}  // namespace

MetricSpace MetricSpace::unit_cube(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be positive");
  return MetricSpace{dim, 1.0};
}

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) {
  check_coords(coords_);
}

Point::Point(std::initializer_list<double> coords) : coords_(coords) {
  check_coords(coords_);
}

PointSet::PointSet(std::size_t dim, std::vector<double> flat)
    : dim_(dim), data_(std::move(flat)) {
  if (dim_ == 0) throw std::invalid_argument("dimension must be positive");
  if (data_.size() % dim_ != 0)
    throw std::invalid_argument("flat coordinate array is not a multiple of dim");
  if (!data_.empty()) check_coords(data_);
}

Point PointSet::point(std::size_t i) const {
  auto p = (*this)[i];
  return Point(std::vector<double>(p.begin(), p.end()));
}

void PointSet::push_back(std::span<const double> x) {
  if (x.size() != dim_)
    throw std::invalid_argument("point dimension " + std::to_string(x.size()) +
                                " does not match set dimension " + std::to_string(dim_));
  check_coords(x);
  data_.insert(data_.end(), x.begin(), x.end());
}

void PointSet::append(const PointSet& other) {
  if (other.empty()) return;
  if (other.dim() != dim_) throw std::invalid_argument("cannot append sets of different dimension");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
  PointSet out(dim_);
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("subset index out of range");
    auto p = (*this)[i];
    out.data_.insert(out.data_.end(), p.begin(), p.end());
  }
  return out;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("linf_distance: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

TransferSample::TransferSample(PointSet source_, std::vector<Label> source_labels_,
                               PointSet target_labeled_,
                               std::vector<Label> target_labels_,
                               PointSet target_unlabeled_)
    : source(std::move(source_)),
      source_labels(std::move(source_labels_)),
      target_labeled(std::move(target_labeled_)),
      target_labels(std::move(target_labels_)),
      target_unlabeled(std::move(target_unlabeled_)) {
  validate();
}

void TransferSample::validate() const {
  if (size() == 0)
    throw std::invalid_argument("transfer sample needs n_P or n_Q >= 1");
  if (source.dim() != target_labeled.dim() || source.dim() != target_unlabeled.dim())
    throw std::invalid_argument("source and target points must share one dimension");
  if (source_labels.size() != source.size())
    throw std::invalid_argument("source label count does not match source points");
  if (target_labels.size() != target_labeled.size())
    throw std::invalid_argument("target label count does not match labelled target points");
  for (Label y : source_labels)
    if (y > 1) throw std::invalid_argument("labels must be 0 or 1");
  for (Label y : target_labels)
    if (y > 1) throw std::invalid_argument("labels must be 0 or 1");
}

PointSet TransferSample::pooled_points() const {
  PointSet out(source.dim());
  out.reserve(size());
  out.append(source);
  out.append(target_labeled);
  out.append(target_unlabeled);
  return out;
}

std::vector<Neighbor> brute_force_knn(const PointSet& points,
                                      std::span<const double> x, std::size_t k) {
  if (k == 0 || k > points.size())
    throw std::invalid_argument("knn: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(points.size()) + "]");
  std::vector<Neighbor> all(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) all[i] = {i, linf_distance(points[i], x)};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    neighbor_less);
  all.resize(k);
  return all;
}

std::size_t brute_force_ball_count(const PointSet& points, std::span<const double> x,
                                   double r) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (linf_distance(points[i], x) <= r) ++c;
  return c;
}

NnIndex::NnIndex(PointSet points, NnBackend backend)
    : points_(std::move(points)), backend_(backend) {
  if (backend_ == NnBackend::kd_tree) tree_ = std::make_unique<KdTree>(points_);
}

NnIndex::~NnIndex() = default;
NnIndex::NnIndex(NnIndex&&) noexcept = default;
NnIndex& NnIndex::operator=(NnIndex&&) noexcept = default;

void NnIndex::check_query(std::span<const double> x) const {
  if (x.size() != points_.dim())
    throw std::invalid_argument("query dimension " + std::to_string(x.size()) +
                                " does not match index dimension " +
                                std::to_string(points_.dim()));
}

std::vector<Neighbor> NnIndex::knn(std::span<const double> x, std::size_t k) const {
  check_query(x);
  if (k == 0 || k > size())
    throw std::invalid_argument("knn: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(size()) + "]");
  if (!tree_) return brute_force_knn(points_, x, k);
  std::vector<Neighbor> out;
  tree_->knn(points_, x, k, out);
  return out;
}

std::vector<std::size_t> NnIndex::knn_indices(std::span<const double> x,
                                              std::size_t k) const {
  auto nn = knn(x, k);
  std::vector<std::size_t> out(nn.size());
  std::transform(nn.begin(), nn.end(), out.begin(), [](const Neighbor& n) { return n.index; });
  return out;
}

std::size_t NnIndex::ball_count(std::span<const double> x, double r) const {
  check_query(x);
  if (!(r >= 0.0)) throw std::invalid_argument("ball_count: radius must be >= 0");
  if (!tree_) return brute_force_ball_count(points_, x, r);
  return tree_->ball_count(points_, x, r);
}

std::vector<Neighbor> NnIndex::ball_query(std::span<const double> x, double r) const {
  check_query(x);
  if (!(r >= 0.0)) throw std::invalid_argument("ball_query: radius must be >= 0");
  std::vector<Neighbor> out;
  if (tree_) {
    tree_->ball_query(points_, x, r, out);
    return out;
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double d = linf_distance(points_[i], x);
    if (d <= r) out.push_back({i, d});
  }
  std::sort(out.begin(), out.end(), neighbor_less);
  return out;
}

}  // namespace tlknn
