#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "epicflow/error.hpp"
#include "epicflow/match_prep.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

namespace epic {
namespace {

using namespace epic::testing;

Image checkerboard(int w, int h, int cell) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = ((x / cell + y / cell) % 2) ? 0.9 : 0.1;
  return img;
}

bool is_ordered_subset(const MatchSet& sub, const MatchSet& super) {
  auto it = super.begin();
  for (const auto& m : sub) {
    it = std::find(it, super.end(), m);
    if (it == super.end()) return false;
    ++it;
  }
  return true;
}

TEST(Saliency, ConstantRegionRemoved) {
  Image img = checkerboard(40, 40, 20);
  const MatchSet m{{{5, 5}, {6, 6}}};
  EXPECT_TRUE(saliency_filter(m, img, 2, 1e-12).empty());
}

TEST(Saliency, CheckerboardCornerAgainstBruteForceTensor) {
  const Image img = checkerboard(32, 32, 8);
  const Pixel corner{8, 8};
  const double lam = brute_min_eigenvalue(img, corner, 2);
  ASSERT_GT(lam, 0.0);
  const MatchSet m{{{8, 8}, {9, 9}}};
  EXPECT_EQ(saliency_filter(m, img, 2, 0.99 * lam).size(), 1u);
  EXPECT_TRUE(saliency_filter(m, img, 2, 1.01 * lam).empty());
  const Grid<double> lum = img.luminance();
  EXPECT_NEAR(min_structure_eigenvalue(derivative_x(lum), derivative_y(lum), corner, 2), lam, 1e-12);
}

TEST(Saliency, MatchesBruteForceEverywhere) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(15, 11, 3);
  for (auto& v : img.values()) v = u(rng);
  const Grid<double> lum = img.luminance();
  const Grid<double> gx = derivative_x(lum), gy = derivative_y(lum);
  for (int r : {1, 2, 3})
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 15; ++x)
        EXPECT_NEAR(min_structure_eigenvalue(gx, gy, {x, y}, r), brute_min_eigenvalue(img, {x, y}, r), 1e-12);
}

TEST(Saliency, ZeroThresholdIsIdentityAndMonotone) {
  std::mt19937_64 rng(5);
  const auto s = translation_scene(30, 30, {1, 0}, 1, 3);
  Image img = s.image1;
  for (int y = 10; y < 20; ++y)
    for (int x = 10; x < 20; ++x) img(x, y) = 0.5;
  const MatchSet m = random_matches(rng, 30, 30, 200);
  EXPECT_EQ(saliency_filter(m, img, 2, 0.0), m);
  MatchSet prev = m;
  for (double thr : {1e-6, 1e-4, 1e-3, 1e-2, 1e-1}) {
    const MatchSet cur = saliency_filter(m, img, 2, thr);
    EXPECT_TRUE(is_ordered_subset(cur, prev));
    prev = cur;
  }
  EXPECT_LT(prev.size(), m.size());
  EXPECT_THROW(saliency_filter(m, img, 0, 1e-4), std::invalid_argument);
}

TEST(Consistency, CoherentMatchesKept) {
  std::mt19937_64 rng(6);
  MatchSet m;
  for (const auto& r : random_matches(rng, 20, 20, 30)) m.push_back({r.source, r.source + Vec2{2, -1}});
  const auto res = consistency_filter(m, random_cost(rng, 20, 20));
  EXPECT_FALSE(res.skipped);
  EXPECT_EQ(res.kept, m);
}

TEST(Consistency, IsolatedOutlierRemoved) {
  // On a zero-cost map every kernel weight is within a few percent of 1, so
  // each estimate is close to the mean displacement 50/21 ~ 2.4 px: the
  // outlier's residual is ~47.6 px and the others' stay below 5.
  MatchSet m;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 5; ++i) m.push_back({{double(2 + 3 * i), double(2 + 3 * j)}, {double(2 + 3 * i), double(2 + 3 * j)}});
  m.push_back({{30, 5}, {80, 5}});
  const auto res = consistency_filter(m, CostMap(40, 16, 0.0));
  ASSERT_EQ(res.kept.size(), 20u);
  EXPECT_TRUE(is_ordered_subset(res.kept, m));
  for (const auto& k : res.kept) EXPECT_EQ(k.displacement(), (Vec2{0, 0}));
}

TEST(Consistency, InfiniteResidualIsIdentity) {
  std::mt19937_64 rng(7);
  const MatchSet m = random_matches(rng, 20, 20, 25);
  EXPECT_EQ(consistency_filter(m, random_cost(rng, 20, 20), 1.0, 25, std::numeric_limits<double>::infinity()).kept, m);
}

TEST(Consistency, SubsetOrderPreserved) {
  std::mt19937_64 rng(8);
  const MatchSet m = random_matches(rng, 25, 25, 60);
  const auto res = consistency_filter(m, random_cost(rng, 25, 25), 1.0, 25, 2.0);
  EXPECT_TRUE(is_ordered_subset(res.kept, m));
}

TEST(Consistency, TooFewMatchesSkipped) {
  const MatchSet m{{{1, 1}, {50, 50}}};
  const auto res = consistency_filter(m, CostMap(4, 4));
  EXPECT_TRUE(res.skipped);
  EXPECT_EQ(res.kept, m);
}

struct SynthFixture : ::testing::Test {
  FlowField gt{12, 10};
  OcclusionMask occ{12, 10};
  void SetUp() override {
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 12; ++x) {
        gt(x, y) = {0.5 * x, -0.25 * y};
        occ(x, y) = x > 8 && y < 4;
      }
  }
};

TEST_F(SynthFixture, FullDensityReproducesTruth) {
  const MatchSet m = synthesize_matches(gt, occ, {1.0, 0.0, 3});
  ASSERT_EQ(m.size(), 120u - occ.count());
  for (const auto& mt : m) {
    const Pixel p = nearest_pixel(mt.source);
    EXPECT_FALSE(occ(p.x, p.y));
    EXPECT_EQ(mt.displacement(), gt(p.x, p.y));
  }
}

TEST_F(SynthFixture, CorruptionCountIsExact) {
  FlowField big(20, 10);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = {1.25, 0.75};
  const MatchSet m = synthesize_matches(big, OcclusionMask(20, 10), {0.5, 0.5, 11});
  ASSERT_EQ(m.size(), 100u);
  MatchSet corrupted;
  std::copy_if(m.begin(), m.end(), std::back_inserter(corrupted),
               [](const Match& x) { return x.displacement() != Vec2{1.25, 0.75}; });
  EXPECT_EQ(corrupted.size(), 50u);
  for (const auto& x : corrupted) {
    EXPECT_GE(x.target.x, 0.0);
    EXPECT_LE(x.target.x, 19.0);
    EXPECT_GE(x.target.y, 0.0);
    EXPECT_LE(x.target.y, 9.0);
  }
}

TEST_F(SynthFixture, DeterministicAndNeverOccluded) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const MatchSet a = synthesize_matches(gt, occ, {0.3, 0.2, seed});
    EXPECT_EQ(a, synthesize_matches(gt, occ, {0.3, 0.2, seed}));
    for (const auto& mt : a) EXPECT_FALSE(occ(int(mt.source.x), int(mt.source.y)));
    for (std::size_t i = 1; i < a.size(); ++i)
      EXPECT_LT(gt.index(int(a[i - 1].source.x), int(a[i - 1].source.y)), gt.index(int(a[i].source.x), int(a[i].source.y)));
  }
  EXPECT_NE(synthesize_matches(gt, occ, {0.3, 0.0, 1}), synthesize_matches(gt, occ, {0.3, 0.0, 2}));
}

TEST_F(SynthFixture, ZeroCountAndBadSpecRejected) {
  EXPECT_THROW(synthesize_matches(gt, occ, {0.001, 0.0, 1}), EmptyMatchError);
  EXPECT_THROW(synthesize_matches(gt, occ, {1.5, 0.0, 1}), std::invalid_argument);
  EXPECT_THROW(synthesize_matches(gt, occ, {0.5, -0.1, 1}), std::invalid_argument);
}

}  // namespace
}  // namespace epic
