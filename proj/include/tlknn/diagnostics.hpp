#pragma once

// Measurement instruments: an empirical transfer-exponent estimate from
// ball-mass ratios, and log-log rate fits over sweep records.

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tlknn/core.hpp"
#include "tlknn/records.hpp"

namespace tlknn {

struct GammaEstimate {
  double gamma_hat = 0.0;
  double intercept = 0.0;                 // log C_gamma proxy
  std::vector<double> radii;              // radii that entered the fit
  std::vector<double> log_ratio;          // aggregated log(Q^/P^) per radius
  std::vector<std::size_t> probes_used;   // valid probes per radius
  std::size_t n_points_used = 0;          // valid (probe, radius) pairs
  double fit_residual = 0.0;              // RMS of the log-log fit
  double fit_stderr = 0.0;                // standard error of the slope
};

struct GammaResult {
  std::optional<GammaEstimate> estimate;
  bool likely_infinite = false;  // source mass absent around most probes
};

/// 12 log-spaced radii in [0.02, 0.5] * diameter.
std::vector<double> default_gamma_radii(double diameter = 1.0);

/// For each radius, the empirical log(Q^(B(x,r)) / P^(B(x,r))) over probes
/// with at least min_count points of each sample in the ball is aggregated
/// by its maximum over probes (the worst case the transfer exponent
/// bounds); gamma_hat is minus the least-squares slope against log r.
GammaResult estimate_gamma(const PointSet& source, const PointSet& target,
                           const PointSet& probes, std::span<const double> radii,
                           std::size_t min_count = 10);

struct RateFit {
  double slope = 0.0;   // positive means decay
  double stderr_ = 0.0;
  std::vector<std::pair<double, double>> points;  // (log n, log excess)
};

using SweepFilter = std::function<bool(std::size_t n_source, std::size_t n_target)>;

/// OLS of log excess error on log(n_P + n_Q) over filtered records. Zero
/// estimates are censored to their CI half-width. Needs >= 4 records.
RateFit fit_rate(std::span<const RateRecord> records, const SweepFilter& filter = {});

}  // namespace tlknn
