#pragma once

// Parameter-free local choice of k by intersecting confidence intervals
// over a dyadic grid, and the cover-based classifier built on it.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tlknn/core.hpp"
#include "tlknn/cover.hpp"

namespace tlknn {

struct AdaptiveConfig {
  std::size_t v_b = 3;  // VC dimension of sup-norm balls; 2d+1 is a safe default
  double delta = 0.05;
  std::optional<std::size_t> k0_override;

  void validate() const;
  static AdaptiveConfig for_dimension(std::size_t dim, double delta = 0.05);
};

enum class StopReason { interval_split, crossed_half_low, crossed_half_high, k_exhausted };

const char* to_string(StopReason reason);

struct LepskiStep {
  std::size_t k = 0;
  double eta_k = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct LepskiTrace {
  std::vector<LepskiStep> steps;
  StopReason stop_reason = StopReason::k_exhausted;
  double final_eta = 0.0;
  Label final_label = 0;
  std::size_t final_k = 0;
};

/// ceil(v_b ln(2n) + ln(6/delta)) unless overridden.
std::size_t lepski_base_level(std::size_t n, const AdaptiveConfig& cfg);

/// Shares one immutable labelled index across many queries.
class LepskiClassifier {
 public:
  LepskiClassifier(PointSet points, std::vector<Label> labels, AdaptiveConfig cfg);

  std::size_t size() const { return labels_.size(); }
  std::size_t base_level() const { return n0_; }
  const NnIndex& index() const { return index_; }
  std::span<const Label> labels() const { return labels_; }

  LepskiTrace classify(std::span<const double> x) const;
  Label operator()(std::span<const double> x) const { return classify(x).final_label; }

 private:
  NnIndex index_;
  std::vector<Label> labels_;
  AdaptiveConfig cfg_;
  std::size_t n0_;
};

/// Throws std::invalid_argument when |labels| < n0.
LepskiTrace lepski_classify(const PointSet& points, std::span<const Label> labels,
                            std::span<const double> x, const AdaptiveConfig& cfg);

/// Answers a label request for a pooled target index. May throw.
using TargetLabeler = std::function<Label(std::size_t pooled_index)>;

struct CoverBasedClassifier {
  CoverIndex cover;
  LepskiClassifier classifier;

  Label operator()(std::span<const double> x) const { return classifier(x); }
};

/// Builds the cover over all features, requests each retained target label
/// once, and returns the Lepski classifier over the retained labelled set.
/// Known target labels in the sample are ignored; the labeler is the only
/// source of target labels.
CoverBasedClassifier cover_based_classifier(const TransferSample& sample,
                                            const TargetLabeler& labeler,
                                            const AdaptiveConfig& cfg);

/// Test-side oracle: |eta_k(x) - eta(x)| <= sqrt((v_b ln(2n/delta) + 8) / k)
///   + (c_alpha / k) sum_{i<=k} rho(X_(i), x)^alpha.
bool check_envelope(const PointSet& points, std::span<const Label> labels,
                    std::span<const double> x, std::size_t k, double true_eta_x,
                    double c_alpha, double alpha, const AdaptiveConfig& cfg);

}  // namespace tlknn
