#include "tlknn/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tlknn {

void AdaptiveConfig::validate() const {
  if (v_b == 0) throw std::invalid_argument("v_b must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  if (k0_override && *k0_override == 0) throw std::invalid_argument("k0 override must be >= 1");
}

AdaptiveConfig AdaptiveConfig::for_dimension(std::size_t dim, double delta) {
  AdaptiveConfig cfg;
  cfg.v_b = 2 * dim + 1;
  cfg.delta = delta;
  return cfg;
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::interval_split: return "interval_split";
    case StopReason::crossed_half_low: return "crossed_half_low";
    case StopReason::crossed_half_high: return "crossed_half_high";
    case StopReason::k_exhausted: return "k_exhausted";
  }
  return "unknown";
}

std::size_t lepski_base_level(std::size_t n, const AdaptiveConfig& cfg) {
  cfg.validate();
  if (cfg.k0_override) return *cfg.k0_override;
  if (n == 0) throw std::invalid_argument("lepski: empty labelled sample");
  const double v = static_cast<double>(cfg.v_b) * std::log(2.0 * static_cast<double>(n)) +
                   std::log(6.0 / cfg.delta);
  return static_cast<std::size_t>(std::ceil(v));
}

LepskiClassifier::LepskiClassifier(PointSet points, std::vector<Label> labels,
                                   AdaptiveConfig cfg)
    : index_(std::move(points)), labels_(std::move(labels)), cfg_(cfg) {
  if (labels_.size() != index_.size())
    throw std::invalid_argument("lepski: label count does not match points");
  n0_ = lepski_base_level(labels_.size(), cfg_);
  if (labels_.size() < n0_)
    throw std::invalid_argument("lepski: need at least n0=" + std::to_string(n0_) +
                                " labelled points, got " + std::to_string(labels_.size()));
}

LepskiTrace LepskiClassifier::classify(std::span<const double> x) const {
  const std::size_t n = labels_.size();
  const double log_n = std::log(static_cast<double>(n));
  const double v_b = static_cast<double>(cfg_.v_b);

  // Label prefix sums over the neighbour ranking, extended on demand.
  std::vector<std::size_t> prefix{0};
  auto eta_k = [&](std::size_t k) {
    if (prefix.size() <= k) {
      const std::size_t fetch = std::min(n, std::max(k, 2 * (prefix.size() - 1)));
      const auto nn = index_.knn(x, fetch);
      for (std::size_t i = prefix.size() - 1; i < fetch; ++i)
        prefix.push_back(prefix.back() + labels_[nn[i].index]);
    }
    return static_cast<double>(prefix[k]) / static_cast<double>(k);
  };
  auto width = [&](std::size_t k) { return std::sqrt(v_b / static_cast<double>(k)) * log_n; };

  LepskiTrace trace;
  std::size_t k = n0_;
  double est = eta_k(k);
  double lower = est - width(k);
  double upper = est + width(k);
  double mid = est;
  trace.steps.push_back({k, est, lower, upper});
  bool split = false;

  while (lower <= 0.5 && upper >= 0.5 && 2 * k <= n) {
    k *= 2;
    est = eta_k(k);
    lower = std::max(est - width(k), lower);
    upper = std::min(est + width(k), upper);
    trace.steps.push_back({k, est, lower, upper});
    if (upper < lower) {
      split = true;
      break;
    }
    mid = 0.5 * (upper + lower);
  }

  if (split) trace.stop_reason = StopReason::interval_split;
  else if (upper < 0.5) trace.stop_reason = StopReason::crossed_half_low;
  else if (lower > 0.5) trace.stop_reason = StopReason::crossed_half_high;
  else trace.stop_reason = StopReason::k_exhausted;

  trace.final_eta = mid;
  trace.final_label = mid >= 0.5 ? 1 : 0;
  trace.final_k = k;
  return trace;
}

LepskiTrace lepski_classify(const PointSet& points, std::span<const Label> labels,
                            std::span<const double> x, const AdaptiveConfig& cfg) {
  return LepskiClassifier(points, std::vector<Label>(labels.begin(), labels.end()), cfg)
      .classify(x);
}

CoverBasedClassifier cover_based_classifier(const TransferSample& sample,
                                            const TargetLabeler& labeler,
                                            const AdaptiveConfig& cfg) {
  cfg.validate();
  sample.validate();
  const PointSet pooled = sample.pooled_points();
  CoverIndex cover = build_cover(NnIndex(pooled), sample.n_source(), cfg.delta, cfg.v_b);

  const auto& retained = cover.retained();
  std::vector<Label> labels;
  labels.reserve(retained.size());
  for (std::size_t i : retained) {
    if (i < sample.n_source()) {
      labels.push_back(sample.source_labels[i]);
      continue;
    }
    Label y = 0;
    try {
      y = labeler(i);
    } catch (const std::exception& e) {
      throw std::runtime_error("label request for target index " + std::to_string(i) +
                               " failed: " + e.what());
    }
    if (y > 1)
      throw std::runtime_error("label request for target index " + std::to_string(i) +
                               " returned a non-binary label");
    labels.push_back(y);
  }

  AdaptiveConfig inner = cfg;
  if (!inner.k0_override) inner.k0_override = cover.k0();
  LepskiClassifier classifier(pooled.subset(retained), std::move(labels), inner);
  return CoverBasedClassifier{std::move(cover), std::move(classifier)};
}

bool check_envelope(const PointSet& points, std::span<const Label> labels,
                    std::span<const double> x, std::size_t k, double true_eta_x,
                    double c_alpha, double alpha, const AdaptiveConfig& cfg) {
  cfg.validate();
  if (labels.size() != points.size())
    throw std::invalid_argument("check_envelope: label count does not match points");
  if (k == 0 || k > points.size())
    throw std::invalid_argument("check_envelope: k must be in [1, n]");
  const auto nn = brute_force_knn(points, x, k);
  std::size_t ones = 0;
  double bias = 0.0;
  for (const auto& nb : nn) {
    ones += labels[nb.index];
    bias += std::pow(nb.distance, alpha);
  }
  const double n = static_cast<double>(points.size());
  const double kk = static_cast<double>(k);
  const double deviation = std::abs(static_cast<double>(ones) / kk - true_eta_x);
  const double variance =
      std::sqrt((static_cast<double>(cfg.v_b) * std::log(2.0 * n / cfg.delta) + 8.0) / kk);
  return deviation <= variance + c_alpha / kk * bias;
}

}  // namespace tlknn
