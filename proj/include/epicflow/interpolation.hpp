#pragma once

// Sparse-to-dense interpolation of matches: Nadaraya-Watson and locally
// weighted affine estimators over geodesic, Euclidean or mixed distances.

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "epicflow/geodesic.hpp"
#include "epicflow/image.hpp"

namespace epic {

enum class Estimator { NadarayaWatson, LocallyAffine };

enum class DistanceMode {
  ApproxGeodesic,  // Voronoi labeling + match graph, one estimate per match
  ExactGeodesic,   // per-pixel k nearest by exact geodesic distance
  Euclidean,       // per-pixel k nearest by Euclidean distance
  Mixed,           // Euclidean neighbour list, approximate geodesic weights
};

struct InterpConfig {
  Estimator estimator = Estimator::LocallyAffine;
  DistanceMode distance = DistanceMode::ApproxGeodesic;
  double kernel_a = 1.0;
  std::size_t k = 100;
  double la_lambda = 1e-3;

  /// Defaults for an estimator: k = 25 for NW, 100 for LA.
  static InterpConfig for_estimator(Estimator e);
  /// Throws std::invalid_argument when kernel_a <= 0, k == 0 or la_lambda < 0.
  void validate() const;
};

Estimator parse_estimator(std::string_view name);
DistanceMode parse_distance_mode(std::string_view name);
std::string_view to_string(DistanceMode mode);

/// Affine map target(p) = anchor + A (p - anchor) + t.
struct AffineParams {
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  Eigen::Vector2d t = Eigen::Vector2d::Zero();
  Vec2 anchor;

  Vec2 target(const Vec2& p) const;
  Vec2 flow(const Vec2& p) const { return target(p) - p; }
};

/// A match together with its distance to the point being estimated.
struct WeightedMatch {
  Vec2 source;
  Vec2 target;
  double distance = 0.0;
};

/// Kernel-weighted mean displacement, weights exp(-a * distance).
/// Weights are taken relative to the smallest distance, which leaves the
/// estimate unchanged. If every weight vanishes the nearest neighbour's
/// displacement is returned. Throws std::invalid_argument on an empty list.
Vec2 nw_estimate(std::span<const WeightedMatch> neighbors, double kernel_a);

struct AffineFit {
  AffineParams params;
  bool degenerate = false;  // params then hold the translation-only fallback
};

/// Weighted least-squares affine fit in coordinates centred at `anchor`,
/// damped by lambda * sum(w) * (|A - I|^2 + |t - t_mean|^2) where t_mean is
/// the weighted mean displacement. With lambda == 0, fewer than 3 neighbours
/// or a rank-deficient design flags the fit as degenerate and returns A = I,
/// t = t_mean.
AffineFit la_estimate(std::span<const WeightedMatch> neighbors, double kernel_a, double lambda, const Vec2& anchor);

struct InterpolationResult {
  FlowField flow;
  std::size_t matches_used = 0;  // after pixel deduplication
  std::size_t la_fallbacks = 0;
  std::optional<Labeling> labeling;  // approx-geodesic and mixed modes
};

/// Dense flow over a width x height grid from `matches`. Throws
/// EmptyMatchError when no match is given.
InterpolationResult interpolate(int width, int height, const CostMap& cost, const MatchSet& matches,
                                const InterpConfig& config);

}  // namespace epic
