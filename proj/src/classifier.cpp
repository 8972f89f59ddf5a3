#include "tlknn/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tlknn/random.hpp"

namespace tlknn {

PooledModel::PooledModel(NnIndex index, std::vector<Label> labels, std::size_t n_source,
                         std::size_t n_target)
    : index_(std::move(index)),
      labels_(std::move(labels)),
      n_source_(n_source),
      n_target_(n_target) {
  if (labels_.size() != index_.size() || n_source_ + n_target_ != labels_.size())
    throw std::invalid_argument("pooled model: labels, index and block sizes disagree");
  if (labels_.empty()) throw std::invalid_argument("pooled model: empty sample");
}

double PooledModel::eta_hat(std::span<const double> x, std::size_t k) const {
  if (k == 0 || k > size())
    throw std::invalid_argument("eta_hat: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(size()) + "]");
  std::size_t ones = 0;
  for (const auto& nb : index_.knn(x, k)) ones += labels_[nb.index];
  return static_cast<double>(ones) / static_cast<double>(k);
}

Label PooledModel::predict(std::span<const double> x, std::size_t k) const {
  return eta_hat(x, k) >= 0.5 ? 1 : 0;
}

PooledModel fit_pooled(const TransferSample& sample, NnBackend backend) {
  if (sample.size() == 0)
    throw std::invalid_argument("fit_pooled: need n_P or n_Q >= 1");
  if (!sample.target_unlabeled.empty())
    throw std::invalid_argument(
        "fit_pooled: unlabelled target points present; use the cover-based classifier");
  sample.validate();
  std::vector<Label> labels;
  labels.reserve(sample.size());
  labels.insert(labels.end(), sample.source_labels.begin(), sample.source_labels.end());
  labels.insert(labels.end(), sample.target_labels.begin(), sample.target_labels.end());
  return PooledModel(NnIndex(sample.pooled_points(), backend), std::move(labels),
                     sample.n_source(), sample.target_labeled.size());
}

RateSpec::RateSpec(const FamilyParams& p) : params(p) { params.validate(); }

double RateSpec::d0() const {
  const double base = 2.0 + static_cast<double>(params.dim) / params.alpha;
  return params.regime == Regime::dm ? base : base + params.beta;
}

std::size_t optimal_k(std::size_t n_source, std::size_t n_target, const RateSpec& spec) {
  if (n_source == 0 && n_target == 0)
    throw std::invalid_argument("optimal_k: need n_P or n_Q >= 1");
  const double d0 = spec.d0();
  double source_term = 1.0;
  if (!spec.params.gamma_infinite()) {
    source_term = n_source == 0 ? 0.0
                                : std::pow(static_cast<double>(n_source),
                                           d0 / (d0 + spec.params.gamma / spec.params.alpha));
  }
  const double raw = std::pow(source_term + static_cast<double>(n_target), 2.0 / d0);
  // Shave float noise so exact powers such as 1000^(2/3) land on 100.
  const double k = std::ceil(raw * (1.0 - 1e-12));
  const double cap = static_cast<double>(n_source + n_target);
  return static_cast<std::size_t>(std::clamp(k, 1.0, cap));
}

double rate_exponent(const RateSpec& spec, RateRegime which) {
  const double d0 = spec.d0();
  const double numer = spec.params.beta + 1.0;
  if (which == RateRegime::target_dominated) return numer / d0;
  if (spec.params.gamma_infinite()) return 0.0;
  return numer / (d0 + spec.params.gamma / spec.params.alpha);
}

BatchPartition make_batch_partition(std::size_t n_source, std::size_t n_target,
                                    std::size_t k, std::uint64_t seed) {
  if (k == 0 || k > std::max(n_source, n_target))
    throw std::invalid_argument("make_batch_partition: k=" + std::to_string(k) +
                                " must be in [1, max(n_P, n_Q)]");
  Rng rng(seed);
  auto shuffled = [&rng](std::size_t n, std::size_t offset) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), offset);
    for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
    return v;
  };
  const auto src = shuffled(n_source, 0);
  const auto tgt = shuffled(n_target, n_source);
  const std::size_t per_src = n_source / k;
  const std::size_t per_tgt = n_target / k;

  BatchPartition out{k, n_source, n_target, std::vector<std::vector<std::size_t>>(k)};
  for (std::size_t b = 0; b < k; ++b) {
    auto& batch = out.batches[b];
    batch.reserve(per_src + per_tgt);
    batch.insert(batch.end(), src.begin() + b * per_src, src.begin() + (b + 1) * per_src);
    batch.insert(batch.end(), tgt.begin() + b * per_tgt, tgt.begin() + (b + 1) * per_tgt);
    std::sort(batch.begin(), batch.end());
  }
  return out;
}

bool check_bias_lemma(const PooledModel& model, const BatchPartition& partition,
                      std::span<const double> x, double alpha) {
  const std::size_t k = partition.k;
  if (k == 0 || k > model.size())
    throw std::invalid_argument("check_bias_lemma: partition.k exceeds pooled size");
  const PointSet& pts = model.index().points();

  std::vector<double> knn_terms;
  knn_terms.reserve(k);
  for (const auto& nb : model.index().knn(x, k)) knn_terms.push_back(std::pow(nb.distance, alpha));

  std::vector<double> batch_terms;
  batch_terms.reserve(k);
  for (const auto& batch : partition.batches) {
    if (batch.empty()) throw std::invalid_argument("check_bias_lemma: empty batch");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : batch) {
      if (i >= pts.size()) throw std::out_of_range("check_bias_lemma: batch index out of range");
      best = std::min(best, linf_distance(pts[i], x));
    }
    batch_terms.push_back(std::pow(best, alpha));
  }
  // Summing both ascending keeps the comparison exact: the sorted k-NN terms
  // are elementwise <= the sorted batch terms, and rounding is monotone.
  std::sort(knn_terms.begin(), knn_terms.end());
  std::sort(batch_terms.begin(), batch_terms.end());
  const double lhs = std::accumulate(knn_terms.begin(), knn_terms.end(), 0.0);
  const double rhs = std::accumulate(batch_terms.begin(), batch_terms.end(), 0.0);
  return lhs <= rhs;
}

}  // namespace tlknn
