#pragma once

// Synthetic covariate-shift families (P, Q) with a shared regression
// function, closed-form ball masses and certified transfer parameters.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlknn/core.hpp"
#include "tlknn/random.hpp"

namespace tlknn {

enum class Regime { dm, bcn };

inline constexpr double kInfiniteGamma = std::numeric_limits<double>::infinity();

struct FamilyParams {
  double gamma = 0.0;    // transfer exponent, may be +inf
  double c_gamma = 1.0;  // in (0, 1]
  double alpha = 1.0;    // Hoelder exponent in (0, 1]
  double c_alpha = 1.0;
  double beta = 0.0;     // Tsybakov noise exponent
  double c_beta = 1.0;
  std::size_t dim = 1;
  Regime regime = Regime::dm;

  bool gamma_infinite() const { return gamma == kInfiniteGamma; }
  void validate() const;
};

struct LabeledPoints {
  PointSet points;
  std::vector<Label> labels;
};

/// Constants a family satisfies when they exist: C_d of the doubling
/// condition and C_d' of the upper-mass condition.
struct FamilyConstants {
  std::optional<double> doubling;
  std::optional<double> upper_mass;
};

/// Immutable (P, Q) pair. Labels of both marginals come from the same eta.
class TransferFamily {
 public:
  TransferFamily(FamilyParams params, FamilyConstants constants)
      : params_(params), constants_(constants) {}
  virtual ~TransferFamily() = default;

  const FamilyParams& params() const { return params_; }
  const FamilyConstants& constants() const { return constants_; }
  MetricSpace space() const { return MetricSpace::unit_cube(params_.dim); }

  virtual std::string name() const = 0;

  virtual PointSet sample_source_points(std::size_t n, Rng& rng) const = 0;
  virtual PointSet sample_target_points(std::size_t n, Rng& rng) const = 0;

  virtual double eta(std::span<const double> x) const = 0;
  Label bayes(std::span<const double> x) const { return eta(x) >= 0.5 ? 1 : 0; }

  /// Exact P_X(B(x, r)) and Q_X(B(x, r)) for the closed sup-norm ball.
  virtual double source_mass(std::span<const double> x, double r) const = 0;
  virtual double target_mass(std::span<const double> x, double r) const = 0;

  LabeledPoints sample_source(std::size_t n, std::uint64_t seed) const;
  LabeledPoints sample_target(std::size_t n, std::uint64_t seed) const;

  /// Draws Y ~ Bernoulli(eta(X)) for every point.
  std::vector<Label> draw_labels(const PointSet& points, Rng& rng) const;

 protected:
  void set_c_gamma(double c) { params_.c_gamma = c; }

 private:
  FamilyParams params_;
  FamilyConstants constants_;
};

using FamilyPtr = std::shared_ptr<const TransferFamily>;

/// eta(x) = (1 + a * sign(t) |t|^alpha) / 2 with t = (x_1 - center) / half_width
/// clamped to [-1, 1]. Shared by the one-dimensional-profile families.
struct SignedPowerProfile {
  double center = 0.5;
  double half_width = 0.5;
  double amplitude = 0.5;
  double alpha = 1.0;

  /// Largest amplitude keeping eta (c_alpha, alpha)-Hoelder, capped at 1/2.
  static double max_amplitude(double c_alpha, double alpha, double half_width);
  double operator()(double x1) const;
};

/// 1-d family: Q_X uniform, P_X density proportional to |t|^gamma around
/// the Bayes boundary t = 0 (x = 1/2 in unit coordinates).
FamilyPtr make_margin_singularity_family(double gamma, double alpha,
                                         double c_alpha = 1.0);

/// P_X uniform on [0,1]^{d_P}; Q_X uniform on the slice where coordinates
/// d_Q+1..d_P equal 1/2. Certified gamma = d_P - d_Q.
FamilyPtr make_dimension_gap_family(std::size_t d_p, std::size_t d_q,
                                    double alpha = 1.0, double c_alpha = 1.0);

/// P_X uniform on [0,1/2]^d, Q_X uniform on [3/4,1] x [0,1]^{d-1}. gamma = inf.
FamilyPtr make_disjoint_support_family(std::size_t d, double alpha = 1.0,
                                       double c_alpha = 1.0);

/// Hypercube construction used for the minimax lower bound.
struct LowerBoundSpec {
  double r = 0.1;          // cell side
  std::size_t m = 1;       // active cells
  double w = 0.01;         // target mass per active cell
  std::vector<int> sigma;  // +-1 per active cell
  FamilyParams params;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

/// Derives (r, m, w) from sample sizes with the proof's constants
/// c_r = 1/9, c_m = 8 * 9^(alpha beta - d) and w = c_w r^d. sigma is drawn
/// uniformly from sigma_seed.
LowerBoundSpec minimax_lowerbound_spec(const FamilyParams& params,
                                       std::size_t n_source, std::size_t n_target,
                                       double c_w, std::uint64_t sigma_seed);

FamilyPtr make_lowerbound_family(const LowerBoundSpec& spec);

/// Bump used by the lower-bound regression function.
double lowerbound_bump(double t);

/// Lower-bound family internals exposed for oracles.
struct LowerBoundGeometry {
  std::size_t grid = 0;                 // cells per axis
  std::vector<std::uint64_t> active;    // sorted linear cell ids
  double amplitude = 0.0;               // C'_alpha
  double q0 = 0.0, q1 = 0.0, p1 = 0.0, p_annulus = 0.0;

  std::vector<double> center(std::uint64_t cell, std::size_t dim, double r) const;
};
const LowerBoundGeometry* lowerbound_geometry(const TransferFamily& family);

struct ExcessError {
  double estimate = 0.0;
  double ci_half_width = 0.0;
};

using Classifier = std::function<Label(std::span<const double>)>;

/// Monte Carlo estimate of E_Q[2 |eta - 1/2| 1{h != h*}] with a 95% normal
/// CI half-width floored at 1/m_eval. h is only evaluated where eta != 1/2.
ExcessError excess_error_mc(const Classifier& h, const TransferFamily& family,
                            std::size_t m_eval, std::uint64_t seed);

/// Smallest P(B(x,r)) / (r^gamma Q(B(x,r))) over a probe grid and radii,
/// using the closed-form masses. Probes must lie in the target support.
double certified_c_gamma(const TransferFamily& family,
                         std::span<const std::vector<double>> probes,
                         std::span<const double> radii);

}  // namespace tlknn
