#pragma once

#include "epicflow/image.hpp"

namespace epic {

/// Per-pixel smoothness weight in (0, 1] for the variational refinement.
class SmoothnessWeights : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

/// Luminance gradient norm (central differences, replicated borders), unscaled.
Grid<double> gradient_norm(const Image& image);

/// Cost map from the luminance gradient norm, rescaled so that its 99th
/// percentile maps to 1 and clamped to [0, 1]. Falls back to the maximum when
/// the percentile is zero; a flat image gives an all-zero map.
CostMap gradient_cost_map(const Image& image);

/// External edge map used as-is apart from clamping to [0, 1].
CostMap adapt_edge_map(const CostMap& edges);

/// alpha(x) = exp(-kappa * |grad L(x)|). Throws std::invalid_argument for kappa <= 0.
SmoothnessWeights smoothness_weights(const Image& image, double kappa);

}  // namespace epic
