#include "tlknn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tlknn/log.hpp"

namespace tlknn {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  double slope_stderr = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n < 2) throw std::invalid_argument("least squares needs >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least squares needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    sse += e * e;
  }
  f.rms = std::sqrt(sse / static_cast<double>(n));
  f.slope_stderr = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx) : 0.0;
  return f;
}

}  // namespace

std::vector<double> default_gamma_radii(double diameter) {
  std::vector<double> radii(12);
  const double lo = std::log(0.02), hi = std::log(0.5);
  for (std::size_t i = 0; i < radii.size(); ++i)
    radii[i] = diameter * std::exp(lo + (hi - lo) * static_cast<double>(i) / 11.0);
  return radii;
}

GammaResult estimate_gamma(const PointSet& source, const PointSet& target,
                           const PointSet& probes, std::span<const double> radii,
                           std::size_t min_count) {
  if (radii.empty()) throw std::invalid_argument("estimate_gamma: no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0 && radii[i] <= 1.0))
      throw std::invalid_argument("estimate_gamma: radii must lie in (0, diameter]");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw std::invalid_argument("estimate_gamma: radii must be strictly increasing");
  }
  if (source.empty() || target.empty() || probes.empty())
    throw std::invalid_argument("estimate_gamma: empty source, target or probe set");
  if (min_count == 0) throw std::invalid_argument("estimate_gamma: min_count must be >= 1");

  const NnIndex src(source);
  const NnIndex tgt(target);
  const double n_p = static_cast<double>(source.size());
  const double n_q = static_cast<double>(target.size());

  std::size_t empty_at_largest = 0;
  for (std::size_t p = 0; p < probes.size(); ++p)
    if (src.ball_count(probes[p], radii.back()) == 0) ++empty_at_largest;
  GammaResult result;
  if (2 * empty_at_largest >= probes.size()) {
    result.likely_infinite = true;
    return result;
  }

  GammaEstimate est;
  std::vector<double> log_r;
  for (double r : radii) {
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const std::size_t cq = tgt.ball_count(probes[p], r);
      if (cq < min_count) continue;
      const std::size_t cp = src.ball_count(probes[p], r);
      if (cp < min_count) continue;
      worst = std::max(worst, std::log((static_cast<double>(cq) / n_q) /
                                       (static_cast<double>(cp) / n_p)));
      ++used;
    }
    if (used == 0) continue;
    est.radii.push_back(r);
    est.log_ratio.push_back(worst);
    est.probes_used.push_back(used);
    est.n_points_used += used;
    log_r.push_back(std::log(r));
  }
  if (est.radii.size() < 2)
    throw std::runtime_error("estimate_gamma: fewer than two radii have enough mass in both "
                             "samples; increase sample sizes or lower min_count");
  const LineFit fit = least_squares(log_r, est.log_ratio);
  est.gamma_hat = -fit.slope;
  est.intercept = fit.intercept;
  est.fit_residual = fit.rms;
  est.fit_stderr = fit.slope_stderr;
  result.estimate = std::move(est);
  return result;
}

RateFit fit_rate(std::span<const RateRecord> records, const SweepFilter& filter) {
  std::vector<double> xs, ys;
  RateFit out;
  std::size_t censored = 0;
  for (const auto& r : records) {
    if (filter && !filter(r.n_source, r.n_target)) continue;
    double e = r.excess_error;
    if (e <= 0.0) {
      e = r.ci_half_width;
      ++censored;
    }
    if (!(e > 0.0))
      throw std::invalid_argument("fit_rate: record with zero excess error and zero CI width");
    const double n = static_cast<double>(r.n_source + r.n_target);
    xs.push_back(std::log(n));
    ys.push_back(std::log(e));
    out.points.emplace_back(xs.back(), ys.back());
  }
  if (xs.size() < 4)
    throw std::invalid_argument("fit_rate: need at least 4 records, got " +
                                std::to_string(xs.size()));
  if (censored > 0)
    log_info("fit_rate: " + std::to_string(censored) +
             " zero-error records censored to their CI half-width");
  const LineFit fit = least_squares(xs, ys);
  out.slope = -fit.slope;
  out.stderr_ = fit.slope_stderr;
  return out;
}

}  // namespace tlknn
