#pragma once

// Match pruning and synthetic match generation. Filters return an order
// preserving subset of their input.

#include <cstddef>
#include <cstdint>
#include <limits>

#include "epicflow/image.hpp"

namespace epic {

inline constexpr int kDefaultSaliencyRadius = 2;
inline constexpr double kDefaultSaliencyThreshold = 1e-4;
inline constexpr double kDefaultConsistencyResidual = 5.0;

/// Smaller eigenvalue of the luminance structure tensor summed over the
/// (2r+1)^2 patch centred on pixel p (replicated borders).
double min_structure_eigenvalue(const Grid<double>& grad_x, const Grid<double>& grad_y, Pixel p, int radius);

/// Keeps matches whose source patch has min structure eigenvalue >= threshold.
MatchSet saliency_filter(const MatchSet& matches, const Image& image, int patch_radius = kDefaultSaliencyRadius,
                         double threshold = kDefaultSaliencyThreshold);

struct ConsistencyResult {
  MatchSet kept;
  bool skipped = false;  // fewer than 2 matches: input returned unchanged
};

/// One Nadaraya-Watson approximate-geodesic interpolation pass over the
/// matches; drops those whose displacement differs from the interpolated
/// flow at their pixel by more than residual_px.
ConsistencyResult consistency_filter(const MatchSet& matches, const CostMap& cost, double kernel_a = 1.0,
                                     std::size_t k = 25, double residual_px = kDefaultConsistencyResidual);

struct SynthSpec {
  double density = 0.0;     // matches / non-occluded pixels
  double corruption = 0.0;  // fraction of matches given a random target
  std::uint64_t seed = 0;
  void validate() const;
};

/// Samples round(density * N_nonocc) non-occluded pixels without
/// replacement; each maps to p + gt(p). Then round(corruption * count) of
/// them get a uniformly random in-bounds target. Output is in raster order.
/// Throws EmptyMatchError when the count rounds to zero.
MatchSet synthesize_matches(const FlowField& gt, const OcclusionMask& occluded, const SynthSpec& spec);

}  // namespace epic
