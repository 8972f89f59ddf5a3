// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "tlknn/adaptive.hpp"
#include "tlknn/classifier.hpp"
#include "tlknn/cover.hpp"
#include "tlknn/diagnostics.hpp"
#include "tlknn/harness.hpp"
#include "tlknn/log.hpp"
#include "tlknn/synth.hpp"

using namespace tlknn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

TransferSample features_only(PointSet src, PointSet tgt) {
  const std::size_t d = src.dim();
  std::vector<Label> labels(src.size(), 0);
  return TransferSample(std::move(src), std::move(labels), PointSet(d), {}, std::move(tgt));
}

// Random transfer geometry for the structural checks: overlapping boxes,
// clustered targets or coarse lattices (many distance ties).
TransferSample random_geometry(Rng& rng) {
  const std::size_t d = 1 + rng.index(3);
  std::size_t n_p = rng.index(501), n_q = rng.index(501);
  if (n_p + n_q == 0) n_q = 1;
  const std::size_t shape = rng.index(4);
  PointSet src(d), tgt(d);
  std::vector<double> x(d), c(d);
  auto draw = [&](PointSet& out, std::size_t n, bool target) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        switch (shape) {
          case 0: x[j] = rng.uniform(); break;
          case 1: x[j] = target ? 0.4 + 0.6 * rng.uniform() : 0.6 * rng.uniform(); break;
          case 2:
            if (j == 0 && i % 25 == 0)
              for (auto& v : c) v = rng.uniform();
            x[j] = target ? std::clamp(c[j] + 0.02 * (rng.uniform() - 0.5), 0.0, 1.0)
                          : rng.uniform();
            break;
          default: x[j] = static_cast<double>(rng.index(6)) / 5.0; break;
        }
      }
      out.push_back(x);
    }
  };
  draw(src, n_p, false);
  draw(tgt, n_q, true);
  return features_only(std::move(src), std::move(tgt));
}

ExperimentConfig lowerbound_sweep(double gamma, bool source_side) {
  nlohmann::json j;
  j["family"] = {{"id", "lowerbound"},
                 {"params", {{"gamma", gamma}, {"alpha", 1}, {"beta", 1}, {"dim", 1}, {"c_w", 1}}}};
  std::vector<std::size_t> ns;
  for (int e = 8; e <= 13; ++e) ns.push_back(std::size_t{1} << e);
  if (source_side) j["sweep"] = {{"n_P", ns}, {"n_Q", {0}}};
  else j["sweep"] = {{"n_P", {0}}, {"n_Q", ns}};
  j["trials"] = 30;
  j["k_policy"] = "oracle_optimal";
  j["m_eval"] = 20000;
  j["seed"] = 20240611;
  return parse_config(j);
}

bool within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * target;
}

// ---------------------------------------------------------------------------

Outcome cover_validity() {
  std::size_t checks = 0, failures = 0, with_levels = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(derive_seed(1, {s}));
    const TransferSample sample = random_geometry(rng);
    const std::size_t d = sample.dim();
    const std::size_t v_b = (s % 2) ? 1 : 2 * d + 1;
    const CoverIndex cover = build_cover(sample, 0.05, v_b);
    const NnIndex pooled(sample.pooled_points());
    with_levels += !cover.levels().empty();
    for (std::size_t k : cover.level_ks()) {
      ++checks;
      failures += !is_k2k_cover(pooled, cover.retained(), k);
    }
  }
  return {failures == 0 && checks > 0,
          "200 samples (" + std::to_string(with_levels) + " with levels), " +
              std::to_string(checks) + " level checks, " + std::to_string(failures) + " failures"};
}

Outcome distance_preservation() {
  std::size_t checks = 0, failures = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(derive_seed(2, {s}));
    const TransferSample sample = random_geometry(rng);
    const CoverIndex cover = build_cover(sample, 0.05, 1);
    const PointSet pooled_pts = sample.pooled_points();
    const NnIndex pooled(pooled_pts);
    const NnIndex kept(pooled_pts.subset(cover.retained()));
    std::vector<double> x(sample.dim());
    for (int p = 0; p < 20; ++p) {
      for (auto& v : x) v = rng.uniform();
      for (std::size_t k : cover.level_ks()) {
        const auto all = pooled.knn(x, 2 * k);
        const auto sub = kept.knn(x, k);
        for (std::size_t i = 0; i < k; ++i) {
          ++checks;
          failures += !(sub[i].distance <= 3.0 * all[i + k].distance);
        }
      }
    }
  }
  return {failures == 0 && checks > 0,
          "100 covers x 20 probes, " + std::to_string(checks) + " comparisons, " +
              std::to_string(failures) + " failures"};
}

Outcome bias_inequality() {
  std::size_t failures = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    Rng rng(derive_seed(3, {s}));
    const std::size_t d = 1 + rng.index(3);
    const std::size_t n_p = rng.index(300), n_q = 1 + rng.index(300);
    PointSet pts(d);
    std::vector<double> x(d), c(d);
    const bool clustered = s % 2;
    for (std::size_t i = 0; i < n_p + n_q; ++i) {
      if (i % 20 == 0)
        for (auto& v : c) v = rng.uniform();
      for (std::size_t j = 0; j < d; ++j)
        x[j] = clustered ? std::clamp(c[j] + 0.01 * rng.uniform(), 0.0, 1.0) : rng.uniform();
      pts.push_back(x);
    }
    std::vector<std::size_t> si(n_p), ti(n_q);
    std::iota(si.begin(), si.end(), 0);
    std::iota(ti.begin(), ti.end(), n_p);
    std::vector<Label> ys(n_p + n_q);
    for (auto& y : ys) y = rng.bernoulli(0.5);
    TransferSample sample(pts.subset(si), std::vector<Label>(ys.begin(), ys.begin() + n_p),
                          pts.subset(ti), std::vector<Label>(ys.begin() + n_p, ys.end()),
                          PointSet(d));
    const PooledModel model = fit_pooled(sample);
    const std::size_t k = 1 + rng.index(std::max(n_p, n_q));
    const BatchPartition part = make_batch_partition(n_p, n_q, k, rng.next());
    for (auto& v : x) v = rng.uniform();
    const double alpha = 1.0 - rng.uniform();  // (0, 1]
    failures += !check_bias_lemma(model, part, x, alpha);
  }
  return {failures == 0, "500 configurations, " + std::to_string(failures) + " failures"};
}

Outcome labeling_threshold() {
  const auto same = make_margin_singularity_family(0.0, 1.0);
  const auto disjoint = make_disjoint_support_family(1);
  std::size_t zero = 0, many = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng a(derive_seed(4, {s, 0}));
    zero += build_cover(features_only(same->sample_source_points(4000, a),
                                      same->sample_target_points(50, a)),
                        0.05, 3)
                .queries()
                .empty();
    Rng b(derive_seed(4, {s, 1}));
    many += build_cover(features_only(disjoint->sample_source_points(4000, b),
                                      disjoint->sample_target_points(50, b)),
                        0.05, 3)
                .queries()
                .size() >= 25;
  }
  return {zero >= 95 && many >= 95, "gamma=0: zero queries in " + std::to_string(zero) +
                                        "/100; disjoint: >= n_Q/2 queries in " +
                                        std::to_string(many) + "/100"};
}

Outcome source_rate() {
  const RateFit f0 = fit_rate(run_sweep(lowerbound_sweep(0.0, true)));
  const RateFit f3 = fit_rate(run_sweep(lowerbound_sweep(3.0, true)));
  const bool ordered = f3.slope < f0.slope;
  const bool band = within(f0.slope, 2.0 / 3.0, 0.3) && within(f3.slope, 1.0 / 3.0, 0.3);
  return {ordered && band, "slope gamma=0 " + fmt("%.3f", f0.slope) + " (predicted 0.667), gamma=3 " +
                               fmt("%.3f", f3.slope) + " (predicted 0.333); ordering " +
                               (ordered ? "ok" : "violated") + ", band " +
                               (band ? "ok" : "missed")};
}

Outcome target_rate() {
  const RateFit f = fit_rate(run_sweep(lowerbound_sweep(0.0, false)));
  return {within(f.slope, 2.0 / 3.0, 0.3),
          "slope " + fmt("%.3f", f.slope) + " +- " + fmt("%.3f", f.stderr_) + " (predicted 0.667)"};
}

Outcome gamma_estimation() {
  const double truth[] = {0.0, 1.0, 2.0};
  std::vector<double> est[3];
  std::size_t ordered = 0;
  const auto radii = default_gamma_radii();
  for (std::uint64_t s = 0; s < 20; ++s) {
    double g[3];
    for (int i = 0; i < 3; ++i) {
      const auto f = make_margin_singularity_family(truth[i], 1.0);
      Rng rng(derive_seed(7, {s, static_cast<std::uint64_t>(i)}));
      const PointSet src = f->sample_source_points(50000, rng);
      const PointSet tgt = f->sample_target_points(50000, rng);
      const PointSet probes = f->sample_target_points(500, rng);
      const GammaResult r = estimate_gamma(src, tgt, probes, radii);
      g[i] = r.estimate ? r.estimate->gamma_hat : NAN;
      est[i].push_back(g[i]);
    }
    ordered += g[0] < g[1] && g[1] < g[2];
  }
  bool close = true;
  std::string medians;
  for (int i = 0; i < 3; ++i) {
    const double m = median(est[i]);
    close = close && std::abs(m - truth[i]) <= 0.3;
    medians += (i ? ", " : "") + fmt("%.2f", m);
  }
  return {ordered >= 18 && close, "ordered in " + std::to_string(ordered) +
                                      "/20 seeds; median estimates " + medians +
                                      " for true 0, 1, 2"};
}

Outcome adaptive_surrogate() {
  std::string detail;
  bool pass = true;
  for (double gamma : {0.0, 1.0}) {
    nlohmann::json j;
    j["family"] = {{"id", "lowerbound"},
                   {"params", {{"gamma", gamma}, {"alpha", 1}, {"beta", 1}, {"dim", 1}, {"c_w", 1}}}};
    j["sweep"] = {{"points", {{4096, 512}}}};
    j["trials"] = 50;
    j["m_eval"] = 20000;
    j["seed"] = 8;
    j["k_policy"] = "cover_adaptive";
    const ExperimentConfig base = parse_config(j);
    std::vector<double> adaptive;
    for (const auto& r : run_sweep(base)) adaptive.push_back(r.excess_error);

    const std::size_t v_b = base.adaptive(1).v_b;
    const std::size_t n0 = cover_base_level(4096 + 512, base.delta, v_b);
    double best = INFINITY;
    std::size_t best_k = 0;
    for (std::size_t k : cover_level_grid(4096, 512, n0)) {
      ExperimentConfig fixed = base;
      fixed.k_policy.kind = KPolicyKind::fixed;
      fixed.k_policy.k = k;
      std::vector<double> errs;
      for (const auto& r : run_sweep(fixed)) errs.push_back(r.excess_error);
      const double m = median(errs);
      if (m < best) {
        best = m;
        best_k = k;
      }
    }
    const double ours = median(adaptive);
    pass = pass && ours <= 2.0 * best;
    detail += std::string(detail.empty() ? "" : "; ") + "gamma=" + fmt("%g", gamma) +
              ": adaptive median " + fmt("%.3g", ours) + " vs best fixed k=" +
              std::to_string(best_k) + " median " + fmt("%.3g", best) + " (ratio " +
              fmt("%.2f", ours / best) + ")";
  }
  return {pass, detail};
}

Outcome envelope() {
  const auto f = make_margin_singularity_family(0.0, 1.0);
  AdaptiveConfig cfg;
  cfg.v_b = 3;
  cfg.delta = 0.05;
  const double bound = cfg.delta + 3.0 * std::sqrt(cfg.delta / 200.0);
  const double x[] = {0.7};
  const double eta = f->eta(x);
  struct Setting {
    std::size_t k, n;
  };
  bool pass = true;
  std::string detail;
  for (Setting st : {Setting{64, 2000}, Setting{1000, 1000}}) {
    std::size_t fails = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto sample = f->sample_target(st.n, derive_seed(9, {st.k, st.n, s}));
      fails += !check_envelope(sample.points, sample.labels, x, st.k, eta, f->params().c_alpha,
                               f->params().alpha, cfg);
    }
    const double rate = fails / 200.0;
    pass = pass && rate <= bound;
    detail += std::string(detail.empty() ? "" : "; ") + "(k=" + std::to_string(st.k) +
              ", n=" + std::to_string(st.n) + ") failure rate " + fmt("%.3f", rate);
  }
  return {pass, detail + " (bound " + fmt("%.3f", bound) + ")"};
}

Outcome oracle_sanity() {
  std::vector<FamilySpec> presets = {
      {"margin_singularity", {{"gamma", 1}}},
      {"dimension_gap", {{"d_P", 2}, {"d_Q", 1}}},
      {"disjoint_support", {{"dim", 2}}},
      {"lowerbound", {{"gamma", 1}, {"beta", 1}}},
  };
  bool zero = true;
  for (const auto& p : presets) {
    const FamilyPtr f = make_preset_family(p, 2048, 256, 10);
    const auto e =
        excess_error_mc([&](std::span<const double> x) { return f->bayes(x); }, *f, 20000, 10);
    zero = zero && e.estimate == 0.0;
  }
  const auto f = make_margin_singularity_family(0.5, 1.0, 1.0);
  const auto e = excess_error_mc(
      [&](std::span<const double> x) -> Label { return 1 - f->bayes(x); }, *f, 100000, 11);
  const double expected = 0.25;  // C'/2 with C' = min(C_alpha, 1/2)
  const bool anti = std::abs(e.estimate - expected) <= 1.5 * e.ci_half_width;  // about 3 standard errors
  return {zero && anti, std::string("Bayes excess exactly 0 on all presets: ") +
                            (zero ? "yes" : "no") + "; anti-Bayes " + fmt("%.4f", e.estimate) +
                            " +- " + fmt("%.4f", e.ci_half_width) + " vs 0.25"};
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level(LogLevel::quiet);
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "cover validity at every level", cover_validity},
      {2, "cover nearest-neighbour distance preservation", distance_preservation},
      {3, "implicit 1-NN bias inequality", bias_inequality},
      {4, "labeling threshold", labeling_threshold},
      {5, "source-only rate exponent", source_rate},
      {6, "target-only rate exponent", target_rate},
      {7, "transfer exponent estimation", gamma_estimation},
      {8, "adaptive classifier vs best fixed k", adaptive_surrogate},
      {9, "k-NN deviation envelope failure rate", envelope},
      {10, "excess error oracle sanity", oracle_sanity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
