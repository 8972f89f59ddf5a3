#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "helpers.hpp"
#include "tlknn/diagnostics.hpp"
#include "tlknn/synth.hpp"

using namespace tlknn;

TEST_CASE("default radii grid") {
  const auto r = default_gamma_radii();
  REQUIRE(r.size() == 12);
  CHECK(r.front() == doctest::Approx(0.02));
  CHECK(r.back() == doctest::Approx(0.5));
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i] / r[i - 1] == doctest::Approx(r[1] / r[0]));
}

TEST_CASE("gamma estimate on identical samples is zero") {
  const PointSet pts = testing::random_points(20000, 1, 1);
  const PointSet probes = testing::random_points(200, 1, 2);
  const GammaResult g = estimate_gamma(pts, pts, probes, default_gamma_radii());
  REQUIRE(g.estimate);
  CHECK(std::abs(g.estimate->gamma_hat) <= 0.15);
  CHECK_FALSE(g.likely_infinite);
}

TEST_CASE("gamma estimate on the margin family") {
  const auto f = make_margin_singularity_family(1.0, 1.0);
  Rng rng(7);
  const PointSet src = f->sample_source_points(50000, rng);
  const PointSet tgt = f->sample_target_points(50000, rng);
  const PointSet probes = f->sample_target_points(500, rng);
  const GammaResult g = estimate_gamma(src, tgt, probes, default_gamma_radii());
  REQUIRE(g.estimate);
  CHECK(g.estimate->gamma_hat >= 0.7);
  CHECK(g.estimate->gamma_hat <= 1.3);
  for (std::size_t i = 1; i < g.estimate->radii.size(); ++i)
    CHECK(g.estimate->radii[i] > g.estimate->radii[i - 1]);
}

TEST_CASE("gamma estimate flags disjoint supports") {
  // Source on [0, 1/2], target on [3/4, 1]: balls up to radius 0.2 around
  // target probes never reach a source point.
  const auto f = make_disjoint_support_family(1);
  Rng rng(3);
  const GammaResult g =
      estimate_gamma(f->sample_source_points(5000, rng), f->sample_target_points(5000, rng),
                     f->sample_target_points(100, rng), default_gamma_radii(0.4));
  CHECK(g.likely_infinite);
  CHECK_FALSE(g.estimate);
}

TEST_CASE("gamma estimate input checks") {
  const PointSet pts = testing::random_points(100, 1, 1);
  const std::vector<double> bad = {0.2, 0.1};
  CHECK_THROWS_AS(estimate_gamma(pts, pts, pts, bad), std::invalid_argument);
  const std::vector<double> too_big = {0.5, 2.0};
  CHECK_THROWS_AS(estimate_gamma(pts, pts, pts, too_big), std::invalid_argument);
  CHECK_THROWS_AS(estimate_gamma(pts, pts, pts, default_gamma_radii(), 0), std::invalid_argument);
}

TEST_CASE("gamma estimate is stable when sample sizes double") {
  const auto f = make_margin_singularity_family(1.0, 1.0);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const PointSet probes = f->sample_target_points(300, rng);
    const auto a = estimate_gamma(f->sample_source_points(20000, rng),
                                  f->sample_target_points(20000, rng), probes, default_gamma_radii());
    const auto b = estimate_gamma(f->sample_source_points(40000, rng),
                                  f->sample_target_points(40000, rng), probes, default_gamma_radii());
    REQUIRE(a.estimate);
    REQUIRE(b.estimate);
    worst = std::max(worst, std::abs(a.estimate->gamma_hat - b.estimate->gamma_hat));
  }
  CHECK(worst <= 0.3);
}

TEST_CASE("fit_rate recovers an exact power law") {
  std::vector<RateRecord> recs;
  for (std::size_t n : {100, 400, 1600, 6400, 25600}) {
    RateRecord r;
    r.n_source = n;
    r.excess_error = std::pow(static_cast<double>(n), -1.0 / 3.0);
    r.ci_half_width = 1e-3;
    recs.push_back(r);
  }
  const RateFit fit = fit_rate(recs);
  CHECK(fit.slope == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(std::abs(fit.slope - 1.0 / 3.0) < 1e-6);
  CHECK(fit.stderr_ < 1e-9);
  CHECK(fit.points.size() == 5);

  const RateFit filtered = fit_rate(recs, [](std::size_t p, std::size_t) { return p >= 400; });
  CHECK(filtered.points.size() == 4);
  CHECK_THROWS_AS(fit_rate(recs, [](std::size_t p, std::size_t) { return p >= 1600; }),
                  std::invalid_argument);
}

TEST_CASE("fit_rate censors zero estimates to their CI half-width") {
  std::vector<RateRecord> recs;
  for (std::size_t n : {100, 200, 400, 800}) {
    RateRecord r;
    r.n_target = n;
    r.excess_error = n == 800 ? 0.0 : 1.0 / static_cast<double>(n);
    r.ci_half_width = 1.0 / 800.0;
    recs.push_back(r);
  }
  const RateFit fit = fit_rate(recs);
  CHECK(fit.slope == doctest::Approx(1.0));
  CHECK(fit.points.back().second == doctest::Approx(std::log(1.0 / 800.0)));
}
