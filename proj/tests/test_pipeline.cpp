#include <gtest/gtest.h>

#include <chrono>
#include <numeric>
#include <random>

#include "epicflow/error.hpp"
#include "epicflow/match_prep.hpp"
#include "epicflow/pipeline.hpp"
#include "support/scenes.hpp"

namespace epic {
namespace {

using namespace epic::testing;

TEST(Pipeline, TranslationPairWithExactMatches) {
  const auto s = translation_scene(64, 48, {3, -2}, 3, 21);
  const PipelineResult r = epicflow(s.image1, s.image2, lattice_matches(s.truth, 4, 2), PipelineConfig{});
  EXPECT_LT(average_endpoint_error(r.flow, s.truth), 0.05);
  EXPECT_GT(r.diagnostics.after_consistency, 0u);
}

TEST(Pipeline, NoVariationalEqualsInterpolation) {
  std::mt19937_64 rng(2);
  const auto s = warped_scene(40, 32, random_smooth_motion(rng, 40, 32, 3.0), 1, 22);
  const MatchSet m = lattice_matches(s.truth, 5, 1);
  PipelineConfig cfg;
  cfg.skip_variational = true;
  const PipelineResult r = epicflow(s.image1, s.image2, m, cfg);
  const CostMap cost = gradient_cost_map(s.image1);
  // pruning can only drop matches; rerun the same stages by hand
  MatchSet kept = saliency_filter(m, s.image1, 2, 1e-4);
  kept = consistency_filter(kept, cost, 1.0, 25, 5.0).kept;
  EXPECT_EQ(r.flow, interpolate(40, 32, cost, kept, cfg.interp).flow);
  EXPECT_TRUE(r.diagnostics.energies.empty());
}

TEST(Pipeline, DeterministicOutput) {
  std::mt19937_64 rng(3);
  const auto s = warped_scene(32, 24, random_smooth_motion(rng, 32, 24, 2.0), 3, 23);
  const MatchSet m = lattice_matches(s.truth, 4);
  EXPECT_EQ(epicflow(s.image1, s.image2, m, {}).flow, epicflow(s.image1, s.image2, m, {}).flow);
}

TEST(Pipeline, DiagnosticsCountsAndInterpolatedField) {
  const auto s = translation_scene(32, 32, {1, 1}, 1, 24);
  MatchSet m = lattice_matches(s.truth, 4);
  m.push_back({{17, 17}, {61, 17}});
  PipelineConfig cfg;
  cfg.keep_interpolation = true;
  const PipelineResult r = epicflow(s.image1, s.image2, m, cfg);
  const Diagnostics& d = r.diagnostics;
  EXPECT_EQ(d.matches_in, m.size());
  EXPECT_LE(d.after_saliency, d.matches_in);
  EXPECT_LT(d.after_consistency, d.after_saliency);
  EXPECT_TRUE(d.interpolated.has_value());
  EXPECT_TRUE(d.labeling.has_value());
  EXPECT_EQ(d.energies.size(), static_cast<std::size_t>(cfg.variational.fp_iters + 1));
}

TEST(Pipeline, StageTimingsSumToWallTime) {
  std::mt19937_64 rng(4);
  const auto s = warped_scene(96, 80, random_smooth_motion(rng, 96, 80, 3.0), 3, 25);
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult r = epicflow(s.image1, s.image2, lattice_matches(s.truth, 4), {});
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double sum = 0.0;
  for (const auto& t : r.diagnostics.timings) sum += t.seconds;
  EXPECT_EQ(r.diagnostics.timings.size(), 5u);
  EXPECT_NEAR(sum, r.diagnostics.total_seconds, 1e-9);
  EXPECT_NEAR(sum, wall, 0.05 * wall);
}

TEST(Pipeline, ApproxAndExactDistanceAgree) {
  std::mt19937_64 rng(5);
  const auto s = warped_scene(48, 40, random_smooth_motion(rng, 48, 40, 3.0), 1, 26);
  const MatchSet m = lattice_matches(s.truth, 6, 2);
  PipelineConfig approx, exact;
  exact.interp.distance = DistanceMode::ExactGeodesic;
  const double a = average_endpoint_error(epicflow(s.image1, s.image2, m, approx).flow, s.truth);
  const double e = average_endpoint_error(epicflow(s.image1, s.image2, m, exact).flow, s.truth);
  EXPECT_LT(std::abs(a - e), 0.5);
}

TEST(Pipeline, ExternalEdgesAndErrors) {
  const auto s = translation_scene(24, 20, {1, 0}, 1, 27);
  const MatchSet m = lattice_matches(s.truth, 4);
  const CostMap edges(24, 20, 0.0);
  EXPECT_NO_THROW(epicflow(s.image1, s.image2, m, {}, &edges));
  const CostMap wrong(23, 20);
  EXPECT_THROW(epicflow(s.image1, s.image2, m, {}, &wrong), FormatError);
  EXPECT_THROW(epicflow(s.image1, Image(24, 19, 1), m, {}), FormatError);
  // a flat image fails every saliency test
  EXPECT_THROW(epicflow(Image(24, 20, 1, 0.5), Image(24, 20, 1, 0.5), m, {}), EmptyMatchError);
  PipelineConfig off;
  off.prune.saliency_threshold.reset();
  EXPECT_NO_THROW(epicflow(Image(24, 20, 1, 0.5), Image(24, 20, 1, 0.5), m, off));
}

TEST(Pipeline, ConfigValidation) {
  PipelineConfig cfg;
  cfg.prune.consistency_residual = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.variational.sor_omega = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace epic
