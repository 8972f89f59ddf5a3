#include "tlknn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tlknn {

void FamilyParams::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0 (or +inf)");
  if (!(c_gamma > 0.0 && c_gamma <= 1.0)) throw std::invalid_argument("c_gamma must be in (0,1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  if (!(c_alpha > 0.0)) throw std::invalid_argument("c_alpha must be positive");
  if (!(beta >= 0.0) || std::isinf(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  if (!(c_beta > 0.0)) throw std::invalid_argument("c_beta must be positive");
  if (dim == 0) throw std::invalid_argument("dim must be positive");
}

std::vector<Label> TransferFamily::draw_labels(const PointSet& points, Rng& rng) const {
  std::vector<Label> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    labels[i] = rng.bernoulli(eta(points[i])) ? 1 : 0;
  return labels;
}

LabeledPoints TransferFamily::sample_source(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  LabeledPoints out{sample_source_points(n, rng), {}};
  out.labels = draw_labels(out.points, rng);
  return out;
}

LabeledPoints TransferFamily::sample_target(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  LabeledPoints out{sample_target_points(n, rng), {}};
  out.labels = draw_labels(out.points, rng);
  return out;
}

double SignedPowerProfile::max_amplitude(double c_alpha, double alpha, double half_width) {
  // |t - t'| = rho / half_width and sign(t)|t|^a is 2^(1-a)-Hoelder in t.
  return std::min(0.5, c_alpha * std::pow(2.0 * half_width, alpha));
}

double SignedPowerProfile::operator()(double x1) const {
  const double t = std::clamp((x1 - center) / half_width, -1.0, 1.0);
  const double s = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
  return 0.5 * (1.0 + amplitude * s * std::pow(std::abs(t), alpha));
}

namespace {

double interval_overlap(double lo, double hi, double a, double b) {
  return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

// Volume of the intersection of two axis-aligned cubes given as centre and
// half-side.
double cube_overlap(std::span<const double> c1, double h1, std::span<const double> c2,
                    double h2) {
  double v = 1.0;
  for (std::size_t j = 0; j < c1.size(); ++j) {
    v *= interval_overlap(c1[j] - h1, c1[j] + h1, c2[j] - h2, c2[j] + h2);
    if (v == 0.0) return 0.0;
  }
  return v;
}

double ball_box_overlap(std::span<const double> x, double r, double lo, double hi) {
  double v = 1.0;
  for (double xj : x) v *= interval_overlap(xj - r, xj + r, lo, hi);
  return v;
}

std::vector<double> default_certificate_radii() {
  std::vector<double> radii;
  for (int i = 0; i <= 20; ++i) radii.push_back(std::pow(10.0, -3.0 + 3.0 * i / 20.0));
  return radii;
}

// ---------------------------------------------------------------------------

class MarginSingularityFamily final : public TransferFamily {
 public:
  MarginSingularityFamily(FamilyParams p, FamilyConstants c, SignedPowerProfile profile)
      : TransferFamily(p, c), profile_(profile) {
    std::vector<std::vector<double>> probes;
    for (int i = 0; i <= 200; ++i) probes.push_back({i / 200.0});
    const auto radii = default_certificate_radii();
    set_c_gamma(std::min(1.0, certified_c_gamma(*this, probes, radii)));
  }

  std::string name() const override { return "margin_singularity"; }

  PointSet sample_source_points(std::size_t n, Rng& rng) const override {
    std::vector<double> xs(n);
    const double expo = 1.0 / (params().gamma + 1.0);
    for (auto& x : xs) {
      const double u = rng.uniform();
      const double s = rng.bernoulli(0.5) ? 1.0 : -1.0;
      x = std::clamp(0.5 * (1.0 + s * std::pow(u, expo)), 0.0, 1.0);
    }
    return PointSet(1, std::move(xs));
  }

  PointSet sample_target_points(std::size_t n, Rng& rng) const override {
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform();
    return PointSet(1, std::move(xs));
  }

  double eta(std::span<const double> x) const override { return profile_(x[0]); }

  double source_mass(std::span<const double> x, double r) const override {
    return cdf(x[0] + r) - cdf(x[0] - r);
  }

  double target_mass(std::span<const double> x, double r) const override {
    return interval_overlap(x[0] - r, x[0] + r, 0.0, 1.0);
  }

 private:
  // CDF of the source marginal in unit coordinates.
  double cdf(double x) const {
    const double t = std::clamp(2.0 * x - 1.0, -1.0, 1.0);
    const double s = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    return 0.5 * (1.0 + s * std::pow(std::abs(t), params().gamma + 1.0));
  }

  SignedPowerProfile profile_;
};

// ---------------------------------------------------------------------------

class DimensionGapFamily final : public TransferFamily {
 public:
  DimensionGapFamily(FamilyParams p, FamilyConstants c, std::size_t d_q,
                     SignedPowerProfile profile)
      : TransferFamily(p, c), d_q_(d_q), profile_(profile) {
    std::vector<std::vector<double>> probes;
    for (int i = 0; i <= 20; ++i) {
      std::vector<double> x(p.dim, 0.5);
      for (std::size_t j = 0; j < d_q; ++j) x[j] = ((i * (2 * j + 1)) % 21) / 20.0;
      probes.push_back(std::move(x));
    }
    const auto radii = default_certificate_radii();
    set_c_gamma(std::min(1.0, certified_c_gamma(*this, probes, radii)));
  }

  std::string name() const override { return "dimension_gap"; }

  PointSet sample_source_points(std::size_t n, Rng& rng) const override {
    std::vector<double> xs(n * params().dim);
    for (auto& x : xs) x = rng.uniform();
    return PointSet(params().dim, std::move(xs));
  }

  PointSet sample_target_points(std::size_t n, Rng& rng) const override {
    const std::size_t d = params().dim;
    std::vector<double> xs(n * d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) xs[i * d + j] = j < d_q_ ? rng.uniform() : 0.5;
    return PointSet(d, std::move(xs));
  }

  double eta(std::span<const double> x) const override { return profile_(x[0]); }

  double source_mass(std::span<const double> x, double r) const override {
    return ball_box_overlap(x, r, 0.0, 1.0);
  }

  double target_mass(std::span<const double> x, double r) const override {
    double v = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j < d_q_) {
        v *= interval_overlap(x[j] - r, x[j] + r, 0.0, 1.0);
      } else if (std::abs(x[j] - 0.5) > r) {
        return 0.0;
      }
    }
    return v;
  }

 private:
  std::size_t d_q_;
  SignedPowerProfile profile_;
};

// ---------------------------------------------------------------------------

class DisjointSupportFamily final : public TransferFamily {
 public:
  DisjointSupportFamily(FamilyParams p, FamilyConstants c, SignedPowerProfile profile)
      : TransferFamily(p, c), profile_(profile) {}

  std::string name() const override { return "disjoint_support"; }

  PointSet sample_source_points(std::size_t n, Rng& rng) const override {
    std::vector<double> xs(n * params().dim);
    for (auto& x : xs) x = 0.5 * rng.uniform();
    return PointSet(params().dim, std::move(xs));
  }

  PointSet sample_target_points(std::size_t n, Rng& rng) const override {
    const std::size_t d = params().dim;
    std::vector<double> xs(n * d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        xs[i * d + j] = j == 0 ? 0.75 + 0.25 * rng.uniform() : rng.uniform();
    return PointSet(d, std::move(xs));
  }

  double eta(std::span<const double> x) const override { return profile_(x[0]); }

  double source_mass(std::span<const double> x, double r) const override {
    return ball_box_overlap(x, r, 0.0, 0.5) * std::pow(2.0, static_cast<double>(x.size()));
  }

  double target_mass(std::span<const double> x, double r) const override {
    double v = 4.0 * interval_overlap(x[0] - r, x[0] + r, 0.75, 1.0);
    for (std::size_t j = 1; j < x.size(); ++j) v *= interval_overlap(x[j] - r, x[j] + r, 0.0, 1.0);
    return v;
  }

 private:
  SignedPowerProfile profile_;
};

// ---------------------------------------------------------------------------

std::size_t grid_cells_per_axis(double r) {
  return static_cast<std::size_t>(std::floor(1.0 / r + 1e-9));
}

long double int_pow(std::size_t base, std::size_t e) {
  long double v = 1.0L;
  for (std::size_t i = 0; i < e; ++i) v *= static_cast<long double>(base);
  return v;
}

class LowerBoundFamily final : public TransferFamily {
 public:
  LowerBoundFamily(const LowerBoundSpec& spec, FamilyParams p, FamilyConstants c,
                   LowerBoundGeometry geo)
      : TransferFamily(p, c), spec_(spec), geo_(std::move(geo)) {
    total_cells_ = 1;
    for (std::size_t j = 0; j < p.dim; ++j) total_cells_ *= geo_.grid;
    centers_.reserve(geo_.active.size() * p.dim);
    for (auto cell : geo_.active) {
      auto z = geo_.center(cell, p.dim, spec_.r);
      centers_.insert(centers_.end(), z.begin(), z.end());
    }
    set_c_gamma(std::min(1.0, certify()));
  }

  std::string name() const override { return "lowerbound"; }
  const LowerBoundGeometry& geometry() const { return geo_; }

  PointSet sample_source_points(std::size_t n, Rng& rng) const override {
    const std::size_t d = params().dim;
    const double r = spec_.r;
    const double core_prob = std::pow(r, params().gamma);
    std::vector<double> xs(n * d);
    std::vector<double> y(d);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(static_cast<double>(spec_.m) * spec_.w)) {
        const std::size_t a = rng.index(spec_.m);
        const double* z = centers_.data() + a * d;
        if (rng.bernoulli(core_prob)) {
          for (std::size_t j = 0; j < d; ++j) y[j] = z[j] + r / 3.0 * (rng.uniform() - 0.5);
        } else {
          // Uniform on B(z, r/2) \ B(z, r/3).
          for (;;) {
            double far = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              y[j] = z[j] + r * (rng.uniform() - 0.5);
              far = std::max(far, std::abs(y[j] - z[j]));
            }
            if (far > r / 3.0) break;
          }
        }
      } else {
        sample_null_cell(rng, y);
      }
      for (std::size_t j = 0; j < d; ++j) xs[i * d + j] = std::clamp(y[j], 0.0, 1.0);
    }
    return PointSet(d, std::move(xs));
  }

  PointSet sample_target_points(std::size_t n, Rng& rng) const override {
    const std::size_t d = params().dim;
    const double r = spec_.r;
    std::vector<double> xs(n * d);
    std::vector<double> y(d);
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(static_cast<double>(spec_.m) * spec_.w)) {
        const std::size_t a = rng.index(spec_.m);
        const double* z = centers_.data() + a * d;
        for (std::size_t j = 0; j < d; ++j) y[j] = z[j] + r / 3.0 * (rng.uniform() - 0.5);
      } else {
        sample_null_cell(rng, y);
      }
      for (std::size_t j = 0; j < d; ++j) xs[i * d + j] = std::clamp(y[j], 0.0, 1.0);
    }
    return PointSet(d, std::move(xs));
  }

  double eta(std::span<const double> x) const override {
    const auto pos = active_position(x);
    if (!pos) return 0.5;
    const std::size_t d = params().dim;
    const double* z = centers_.data() + *pos * d;
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) dist = std::max(dist, std::abs(x[j] - z[j]));
    const double u = lowerbound_bump(dist / spec_.r);
    const double a = params().alpha;
    return 0.5 * (1.0 + spec_.sigma[*pos] * geo_.amplitude * std::pow(spec_.r, a) * std::pow(u, a));
  }

  double source_mass(std::span<const double> x, double radius) const override {
    const std::size_t d = params().dim;
    const double r = spec_.r;
    double mass = 0.0;
    for (std::size_t a = 0; a < spec_.m; ++a) {
      std::span<const double> z(centers_.data() + a * d, d);
      mass += geo_.p1 * cube_overlap(x, radius, z, r / 6.0);
      mass += geo_.p_annulus *
              (cube_overlap(x, radius, z, r / 2.0) - cube_overlap(x, radius, z, r / 3.0));
    }
    return mass + geo_.q0 * null_volume(x, radius);
  }

  double target_mass(std::span<const double> x, double radius) const override {
    const std::size_t d = params().dim;
    const double r = spec_.r;
    double mass = 0.0;
    for (std::size_t a = 0; a < spec_.m; ++a) {
      std::span<const double> z(centers_.data() + a * d, d);
      mass += geo_.q1 * cube_overlap(x, radius, z, r / 6.0);
    }
    return mass + geo_.q0 * null_volume(x, radius);
  }

 private:
  std::optional<std::size_t> active_position(std::span<const double> x) const {
    std::uint64_t cell = 0;
    std::uint64_t stride = 1;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto i = static_cast<std::uint64_t>(std::floor(x[j] / spec_.r));
      if (i >= geo_.grid) return std::nullopt;
      cell += i * stride;
      stride *= geo_.grid;
    }
    auto it = std::lower_bound(geo_.active.begin(), geo_.active.end(), cell);
    if (it == geo_.active.end() || *it != cell) return std::nullopt;
    return static_cast<std::size_t>(it - geo_.active.begin());
  }

  // Volume of B(x, radius) inside the non-active cells.
  double null_volume(std::span<const double> x, double radius) const {
    const std::size_t d = params().dim;
    const double r = spec_.r;
    double v = ball_box_overlap(x, radius, 0.0, r * static_cast<double>(geo_.grid));
    for (std::size_t a = 0; a < spec_.m; ++a)
      v -= cube_overlap(x, radius, std::span<const double>(centers_.data() + a * d, d), r / 2.0);
    return std::max(0.0, v);
  }

  void sample_null_cell(Rng& rng, std::vector<double>& y) const {
    // v-th non-active cell in increasing id order.
    std::uint64_t cell = rng.index(total_cells_ - spec_.m);
    for (auto a : geo_.active) {
      if (a <= cell) ++cell;
      else break;
    }
    for (std::size_t j = 0; j < y.size(); ++j) {
      const auto i = cell % geo_.grid;
      cell /= geo_.grid;
      y[j] = spec_.r * (static_cast<double>(i) + rng.uniform());
    }
  }

  double certify() const {
    const std::size_t d = params().dim;
    const double r = spec_.r;
    std::vector<std::vector<double>> probes;
    const std::size_t cells = std::min<std::size_t>(spec_.m, 8);
    for (std::size_t a = 0; a < cells; ++a) {
      const double* z = centers_.data() + a * d;
      for (double off : {-r / 6.0, 0.0, r / 12.0}) {
        std::vector<double> p(z, z + d);
        p[0] = std::clamp(p[0] + off, 0.0, 1.0);
        probes.push_back(std::move(p));
      }
    }
    Rng rng(0x5eed);
    std::vector<double> y(d);
    for (int i = 0; i < 8; ++i) {
      sample_null_cell(rng, y);
      probes.push_back(y);
    }
    std::vector<double> radii;
    for (int i = 0; i <= 16; ++i) radii.push_back(r / 100.0 * std::pow(100.0 / r, i / 16.0));
    return certified_c_gamma(*this, probes, radii);
  }

  LowerBoundSpec spec_;
  LowerBoundGeometry geo_;
  std::uint64_t total_cells_ = 1;
  std::vector<double> centers_;
};

}  // namespace

// ---------------------------------------------------------------------------

FamilyPtr make_margin_singularity_family(double gamma, double alpha, double c_alpha) {
  if (std::isinf(gamma))
    throw std::invalid_argument(
        "margin-singularity family needs finite gamma; use the disjoint-support family");
  FamilyParams p;
  p.gamma = gamma;
  p.alpha = alpha;
  p.c_alpha = c_alpha;
  p.dim = 1;
  p.regime = Regime::dm;
  p.validate();
  SignedPowerProfile profile{0.5, 0.5, SignedPowerProfile::max_amplitude(c_alpha, alpha, 0.5),
                             alpha};
  // Q(0 < |eta - 1/2| <= s) = (2 s / a)^(1/alpha) under uniform Q_X.
  p.beta = 1.0 / alpha;
  p.c_beta = std::pow(2.0 / profile.amplitude, 1.0 / alpha);
  return std::make_shared<MarginSingularityFamily>(p, FamilyConstants{1.0, 2.0}, profile);
}

FamilyPtr make_dimension_gap_family(std::size_t d_p, std::size_t d_q, double alpha,
                                    double c_alpha) {
  if (d_q == 0 || d_q > d_p)
    throw std::invalid_argument("dimension-gap family needs 1 <= d_Q <= d_P");
  FamilyParams p;
  p.gamma = static_cast<double>(d_p - d_q);
  p.alpha = alpha;
  p.c_alpha = c_alpha;
  p.dim = d_p;
  p.regime = Regime::dm;
  p.validate();
  SignedPowerProfile profile{0.5, 0.5, SignedPowerProfile::max_amplitude(c_alpha, alpha, 0.5),
                             alpha};
  p.beta = 1.0 / alpha;
  p.c_beta = std::pow(2.0 / profile.amplitude, 1.0 / alpha);
  return std::make_shared<DimensionGapFamily>(p, FamilyConstants{1.0, std::pow(2.0, d_q)},
                                              d_q, profile);
}

FamilyPtr make_disjoint_support_family(std::size_t d, double alpha, double c_alpha) {
  if (d == 0) throw std::invalid_argument("disjoint-support family needs d >= 1");
  FamilyParams p;
  p.gamma = kInfiniteGamma;
  p.alpha = alpha;
  p.c_alpha = c_alpha;
  p.dim = d;
  p.regime = Regime::dm;
  p.validate();
  SignedPowerProfile profile{0.875, 0.125,
                             SignedPowerProfile::max_amplitude(c_alpha, alpha, 0.125), alpha};
  p.beta = 1.0 / alpha;
  p.c_beta = std::pow(2.0 / profile.amplitude, 1.0 / alpha);
  return std::make_shared<DisjointSupportFamily>(p, FamilyConstants{1.0, 8.0}, profile);
}

double lowerbound_bump(double t) {
  if (t <= 1.0 / 6.0) return 1.0;
  if (t <= 1.0 / 3.0) return 1.0 - 6.0 * (t - 1.0 / 6.0);
  return 0.0;
}

std::vector<double> LowerBoundGeometry::center(std::uint64_t cell, std::size_t dim,
                                               double r) const {
  std::vector<double> z(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    z[j] = r * (static_cast<double>(cell % grid) + 0.5);
    cell /= grid;
  }
  return z;
}

void LowerBoundSpec::validate() const {
  params.validate();
  if (params.gamma_infinite())
    throw std::invalid_argument("lower-bound spec: gamma must be finite");
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("lower-bound spec: r must be in (0,1]");
  if (m == 0) throw std::invalid_argument("lower-bound spec: m must be positive");
  if (!(w > 0.0)) throw std::invalid_argument("lower-bound spec: w must be positive");
  if (!(static_cast<double>(m) * w < 1.0))
    throw std::invalid_argument("lower-bound spec: m*w < 1 violated");
  const long double cells = int_pow(grid_cells_per_axis(r), params.dim);
  if (static_cast<long double>(m) >= cells)
    throw std::invalid_argument("lower-bound spec: m < floor(1/r)^d violated");
  if (sigma.size() != m)
    throw std::invalid_argument("lower-bound spec: sigma must have m entries");
  for (int s : sigma)
    if (s != 1 && s != -1) throw std::invalid_argument("lower-bound spec: sigma entries must be +-1");
  if (params.regime == Regime::dm && params.alpha * params.beta > static_cast<double>(params.dim))
    throw std::invalid_argument("lower-bound spec: alpha*beta <= d violated (DM regime)");
}

LowerBoundSpec minimax_lowerbound_spec(const FamilyParams& params, std::size_t n_source,
                                       std::size_t n_target, double c_w,
                                       std::uint64_t sigma_seed) {
  params.validate();
  if (params.gamma_infinite())
    throw std::invalid_argument("minimax schedule needs finite gamma");
  if (!(c_w > 0.0 && c_w <= 1.0)) throw std::invalid_argument("c_w must be in (0,1]");
  const double d = static_cast<double>(params.dim);
  const double a = params.alpha;
  const double b = params.beta;
  const double d0 = params.regime == Regime::dm ? 2.0 + d / a : 2.0 + b + d / a;
  const double effective =
      (n_source > 0 ? std::pow(static_cast<double>(n_source), d0 / (d0 + params.gamma / a))
                    : 0.0) +
      static_cast<double>(n_target);
  if (effective < 1.0) throw std::invalid_argument("minimax schedule needs n_P or n_Q >= 1");

  LowerBoundSpec spec;
  spec.params = params;
  spec.r = std::pow(effective, -1.0 / (a * d0)) / 9.0;
  if (params.regime == Regime::dm) {
    const double c_m = 8.0 * std::pow(9.0, a * b - d);
    spec.m = static_cast<std::size_t>(std::floor(c_m * std::pow(spec.r, a * b - d)));
    spec.w = c_w * std::pow(spec.r, d);
  } else {
    spec.m = static_cast<std::size_t>(std::floor(std::pow(8.0 / 9.0, d) * std::pow(spec.r, -d)));
    spec.w = c_w * std::pow(spec.r, d + a * b);
  }
  Rng rng(sigma_seed);
  spec.sigma.resize(spec.m);
  for (auto& s : spec.sigma) s = rng.bernoulli(0.5) ? 1 : -1;
  return spec;
}

FamilyPtr make_lowerbound_family(const LowerBoundSpec& spec) {
  spec.validate();
  const std::size_t d = spec.params.dim;
  const double r = spec.r;
  const double a = spec.params.alpha;

  LowerBoundGeometry geo;
  geo.grid = grid_cells_per_axis(r);
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= geo.grid;
  geo.active.resize(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i)
    geo.active[i] = static_cast<std::uint64_t>(
        static_cast<unsigned __int128>(i) * total / spec.m);
  geo.amplitude = std::min(spec.params.c_alpha * std::pow(6.0, -a), 0.5);
  const double cell_volume = std::pow(r, static_cast<double>(d));
  geo.q1 = spec.w / std::pow(r / 3.0, static_cast<double>(d));
  geo.p1 = geo.q1 * std::pow(r, spec.params.gamma);
  geo.p_annulus = spec.w * (1.0 - std::pow(r, spec.params.gamma)) /
                  (cell_volume - std::pow(2.0 * r / 3.0, static_cast<double>(d)));
  geo.q0 = (1.0 - static_cast<double>(spec.m) * spec.w) /
           (static_cast<double>(total - spec.m) * cell_volume);

  FamilyParams p = spec.params;
  // Q(0 < |eta - 1/2| <= t) is 0 below the margin and m*w above it.
  const double margin = geo.amplitude * std::pow(r, a) / 2.0;
  p.c_beta = static_cast<double>(spec.m) * spec.w / std::pow(margin, p.beta);
  FamilyConstants constants;
  constants.upper_mass = std::max(geo.q0, geo.q1) * std::pow(2.0, static_cast<double>(d));
  return std::make_shared<LowerBoundFamily>(spec, p, constants, std::move(geo));
}

const LowerBoundGeometry* lowerbound_geometry(const TransferFamily& family) {
  if (auto* lb = dynamic_cast<const LowerBoundFamily*>(&family)) return &lb->geometry();
  return nullptr;
}

ExcessError excess_error_mc(const Classifier& h, const TransferFamily& family,
                            std::size_t m_eval, std::uint64_t seed) {
  if (m_eval < 100) throw std::invalid_argument("excess_error_mc: m_eval must be >= 100");
  Rng rng(seed);
  const PointSet xs = family.sample_target_points(m_eval, rng);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double eta = family.eta(xs[i]);
    const double weight = 2.0 * std::abs(eta - 0.5);
    if (weight == 0.0) continue;
    const Label bayes = eta >= 0.5 ? 1 : 0;
    if (h(xs[i]) != bayes) {
      sum += weight;
      sum_sq += weight * weight;
    }
  }
  const double m = static_cast<double>(m_eval);
  ExcessError out;
  out.estimate = std::clamp(sum / m, 0.0, 1.0);
  const double var = std::max(0.0, (sum_sq / m - out.estimate * out.estimate) * m / (m - 1.0));
  out.ci_half_width = std::max(1.96 * std::sqrt(var / m), 1.0 / m);
  return out;
}

double certified_c_gamma(const TransferFamily& family,
                         std::span<const std::vector<double>> probes,
                         std::span<const double> radii) {
  const double gamma = family.params().gamma;
  if (std::isinf(gamma)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : probes) {
    for (double r : radii) {
      const double q = family.target_mass(x, r);
      if (q <= 0.0) continue;
      const double ratio = family.source_mass(x, r) / (std::pow(r, gamma) * q);
      best = std::min(best, ratio);
    }
  }
  return std::isinf(best) ? 1.0 : best;
}

}  // namespace tlknn
