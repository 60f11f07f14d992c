#include "epicflow/edges.hpp"

#include <algorithm>
#include <stdexcept>

namespace epic {

Grid<double> gradient_norm(const Image& image) {
  const Grid<double> lum = image.luminance();
  const Grid<double> gx = derivative_x(lum);
  const Grid<double> gy = derivative_y(lum);
  Grid<double> out(lum.width(), lum.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  return out;
}

CostMap gradient_cost_map(const Image& image) {
  const Grid<double> g = gradient_norm(image);
  CostMap cost(g.width(), g.height());
  if (g.empty()) return cost;

  std::vector<double> all(g.values().begin(), g.values().end());
  double scale = percentile(all, 0.99);
  if (scale <= 0.0) scale = *std::max_element(all.begin(), all.end());
  if (scale <= 0.0) return cost;

  for (std::size_t i = 0; i < g.size(); ++i) cost[i] = std::clamp(g[i] / scale, 0.0, 1.0);
  return cost;
}

CostMap adapt_edge_map(const CostMap& edges) {
  CostMap out = edges;
  for (auto& v : out.values()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

SmoothnessWeights smoothness_weights(const Image& image, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  const Grid<double> g = gradient_norm(image);
  SmoothnessWeights alpha(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) alpha[i] = std::exp(-kappa * g[i]);
  return alpha;
}

}  // namespace epic
