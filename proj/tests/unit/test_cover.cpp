#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "helpers.hpp"
#include "tlknn/cover.hpp"
#include "tlknn/synth.hpp"

using namespace tlknn;

namespace {

TransferSample features_only(const PointSet& src, const PointSet& tgt) {
  return TransferSample(src, std::vector<Label>(src.size(), 0), PointSet(src.dim()), {}, tgt);
}

// Independent validity oracle over the full neighbour order: a point passes
// if it is retained or its 2k closest points, ordering ties at the 2k-th
// distance with retained points first, hold at least k retained points.
bool oracle_cover(const PointSet& ps, const std::vector<std::size_t>& retained, std::size_t k) {
  std::vector<bool> in(ps.size(), false);
  for (auto i : retained) in[i] = true;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (in[i]) continue;
    std::vector<std::pair<double, int>> d;
    for (std::size_t j = 0; j < ps.size(); ++j)
      d.emplace_back(testing::sup_dist(ps[i], ps[j]), in[j] ? 0 : 1);
    std::sort(d.begin(), d.end());
    std::size_t members = 0;
    for (std::size_t t = 0; t < 2 * k; ++t) members += d[t].second == 0;
    if (members < k) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("is_k2k_cover on small examples") {
  const PointSet line(1, {0.0, 0.1, 0.2, 0.3});
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  CHECK(is_k2k_cover(line, all, 1));
  CHECK(is_k2k_cover(line, all, 2));
  CHECK_FALSE(is_k2k_cover(line, std::vector<std::size_t>{}, 1));
  CHECK(is_k2k_cover(line, std::vector<std::size_t>{0, 2}, 1));
  CHECK_FALSE(is_k2k_cover(line, std::vector<std::size_t>{0}, 1));
  CHECK_THROWS_AS(is_k2k_cover(line, all, 3), std::invalid_argument);
  CHECK_THROWS_AS(is_k2k_cover(line, all, 0), std::invalid_argument);

  // Ties at the 2k-th distance count in the cover's favour: 0.5 has 0.25 and
  // 0.75 at equal distance and only 0.75 is a member. Breaking the tie by
  // index alone would reject this set.
  const PointSet tie(1, {0.0, 0.25, 0.5, 0.75});
  CHECK(is_k2k_cover(tie, std::vector<std::size_t>{0, 3}, 1));
  CHECK_FALSE(is_k2k_cover(tie, std::vector<std::size_t>{0}, 1));
}

TEST_CASE("is_k2k_cover agrees with a direct oracle") {
  Rng rng(5);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 4 + rng.index(60);
    const PointSet ps = testing::lattice_points(n, 1 + rng.index(2), 5, rng.next());
    std::vector<std::size_t> r;
    const double keep = rng.uniform();
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(keep)) r.push_back(i);
    for (std::size_t k = 1; 2 * k <= n; k = 2 * k + 1)
      CHECK(is_k2k_cover(ps, r, k) == oracle_cover(ps, r, k));
  }
}

TEST_CASE("level grid and base level") {
  CHECK(cover_base_level(100, 0.5, 1) == static_cast<std::size_t>(std::ceil(std::log(200.0) + std::log(12.0))));
  CHECK(cover_level_grid(4000, 50, 32) == std::vector<std::size_t>{32, 64, 128, 256, 512, 1024});
  CHECK(cover_level_grid(63, 10, 32).empty());
  CHECK(cover_level_grid(64, 0, 32) == std::vector<std::size_t>{32});
}

TEST_CASE("build_cover edge cases") {
  const auto f = make_margin_singularity_family(0.0, 1.0);
  Rng rng(1);
  const PointSet src = f->sample_source_points(500, rng);

  const CoverIndex no_target = build_cover(features_only(src, PointSet(1)), 0.05, 3);
  CHECK(no_target.queries().empty());
  CHECK(no_target.retained().size() == 500);

  const PointSet tgt = f->sample_target_points(300, rng);
  const CoverIndex no_source = build_cover(features_only(PointSet(1), tgt), 0.05, 3);
  CHECK(no_source.queries().size() > 0);
  for (std::size_t k : no_source.level_ks())
    CHECK(is_k2k_cover(PointSet(tgt), no_source.retained(), k));

  const CoverIndex tiny = build_cover(features_only(PointSet(1, {0.1, 0.2}), PointSet(1, {0.3})), 0.05, 3);
  CHECK(tiny.levels().empty());
  CHECK(tiny.retained() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("cover validity and distance preservation on random samples") {
  Rng rng(2024);
  for (int t = 0; t < 25; ++t) {
    const std::size_t d = 1 + rng.index(3);
    const std::size_t n_p = rng.index(300), n_q = 1 + rng.index(300);
    const PointSet src = testing::random_points(n_p, d, rng.next());
    PointSet tgt(d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n_q; ++i) {
      for (auto& v : x) v = 0.5 + 0.5 * rng.uniform();  // partial overlap with the source
      tgt.push_back(x);
    }
    const TransferSample s = features_only(src, tgt);
    const CoverIndex cover = build_cover(s, 0.1, 1);
    const PointSet pooled = s.pooled_points();
    for (std::size_t i = 0; i < n_p; ++i) REQUIRE(cover.contains(i));
    for (std::size_t k : cover.level_ks()) REQUIRE(is_k2k_cover(pooled, cover.retained(), k));

    const PointSet kept = pooled.subset(cover.retained());
    const PointSet probes = testing::random_points(5, d, rng.next());
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const auto all = brute_force_knn(pooled, probes[p], pooled.size());
      const auto sub = brute_force_knn(kept, probes[p], kept.size());
      for (std::size_t k : cover.level_ks())
        for (std::size_t i = 0; i < k && i + k < all.size() && i < sub.size(); ++i)
          REQUIRE(sub[i].distance <= 3.0 * all[i + k].distance);
    }
  }
}

TEST_CASE("cover index invariants and requested labels") {
  const RequestedLabels none = requested_labels(CoverIndex(5, 3, {0, 1, 2, 3, 4}, 1, {}, 0.1));
  CHECK(none.count == 0);

  const CoverIndex two(5, 6, {0, 1, 2, 3, 4, 5, 8}, 1, {}, 0.1);
  const RequestedLabels req = requested_labels(two);
  CHECK(req.count == 2);
  CHECK(req.indices == std::vector<std::size_t>{5, 8});

  CHECK_THROWS_AS(CoverIndex(3, 2, {0, 1}, 1, {}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(CoverIndex(3, 2, {0, 1, 2, 7}, 1, {}, 0.1), std::invalid_argument);
}

TEST_CASE("labeling threshold contrast") {
  const auto same = make_margin_singularity_family(0.0, 1.0);
  const auto disjoint = make_disjoint_support_family(1);
  std::size_t zero_same = 0, many_disjoint = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const CoverIndex a = build_cover(
        features_only(same->sample_source_points(4000, rng), same->sample_target_points(50, rng)),
        0.05, 3);
    zero_same += a.queries().empty();
    const CoverIndex b =
        build_cover(features_only(disjoint->sample_source_points(4000, rng),
                                  disjoint->sample_target_points(50, rng)),
                    0.05, 3);
    many_disjoint += b.queries().size() >= 25;
  }
  CHECK(zero_same >= 9);
  CHECK(many_disjoint >= 9);
}

TEST_CASE("cover construction is deterministic") {
  const PointSet src = testing::random_points(400, 2, 1);
  const PointSet tgt = testing::random_points(200, 2, 2);
  const CoverIndex a = build_cover(features_only(src, tgt), 0.05, 5);
  const CoverIndex b = build_cover(features_only(src, tgt), 0.05, 5);
  CHECK(a.retained() == b.retained());
  CHECK(a.level_ks() == b.level_ks());
}
