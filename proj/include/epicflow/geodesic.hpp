#pragma once

// Geodesic distances on the 4-connected pixel grid weighted by a cost map,
// geodesic Voronoi labeling of pixels to matches, and the match adjacency
// graph used to approximate match-to-match geodesic distances.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "epicflow/image.hpp"

namespace epic {

inline constexpr double kBaseStepCost = 1e-3;
inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Cost of the unit step between 4-adjacent pixels p and q:
/// kBaseStepCost + (C(p) + C(q)) / 2. Throws std::invalid_argument otherwise.
double grid_edge_weight(const CostMap& cost, Pixel p, Pixel q);

class DistanceMap : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

/// Single-source Dijkstra over the grid.
DistanceMap exact_geodesic_map(const CostMap& cost, Pixel source);

/// Assignment of every pixel to its geodesically closest match.
struct Labeling {
  Grid<int> label;        // index into the match set
  Grid<double> distance;  // geodesic distance to the owning match pixel
};

/// Multi-source Dijkstra seeded at the (rounded, clamped) match pixels.
/// Exact distance ties go to the smaller match index, so when two matches
/// share a pixel the later one owns an empty cell.
Labeling label_assignment(const CostMap& cost, const MatchSet& matches);

struct GraphEdge {
  int to = 0;
  double weight = 0.0;
};

/// Undirected graph over match indices; edges join matches whose Voronoi
/// cells touch, weighted by the cheapest path through the shared boundary.
class MatchGraph {
 public:
  explicit MatchGraph(std::size_t nodes = 0) : adjacency_(nodes) {}

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const;
  std::span<const GraphEdge> neighbors(int node) const { return adjacency_[static_cast<std::size_t>(node)]; }
  /// Weight of edge (a, b), or kUnreachable if absent.
  double weight(int a, int b) const;

  /// Sets the weight of (a,b) to min(current, w). a != b.
  void relax_edge(int a, int b, double w);
  /// Sorts adjacency lists by neighbour index.
  void finalize();

 private:
  std::vector<std::vector<GraphEdge>> adjacency_;
};

MatchGraph build_match_graph(const Labeling& labeling, const CostMap& cost, std::size_t match_count);

struct Neighbor {
  int index = 0;
  double distance = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Up to k nearest nodes to `node` in graph distance, including itself,
/// ascending by (distance, index).
std::vector<Neighbor> knn_matches(const MatchGraph& graph, int node, std::size_t k);

/// Graph distances from `node` to each of `targets` (kUnreachable if not connected).
std::vector<double> graph_distances(const MatchGraph& graph, int node, std::span<const int> targets);

/// For every pixel, its k geodesically nearest match pixels with exact
/// distances, ascending by (distance, index).
class NearestSources {
 public:
  NearestSources() = default;
  NearestSources(int width, int height, std::size_t k);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t k() const { return k_; }
  std::span<const Neighbor> at(std::size_t pixel) const {
    return {entries_.data() + pixel * k_, counts_[pixel]};
  }

  /// Appends a settled source; returns false when the pixel is full or already has it.
  bool push(std::size_t pixel, Neighbor n);
  bool full(std::size_t pixel) const { return counts_[pixel] >= k_; }
  bool has(std::size_t pixel, int source) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::size_t k_ = 0;
  std::vector<Neighbor> entries_;
  std::vector<std::size_t> counts_;
};

/// k-nearest-source Dijkstra: each pixel is settled at most once per source
/// and at most k times. Exact because a source outside the k nearest of a
/// pixel on a shortest path cannot be among the k nearest further along it.
NearestSources exact_nearest_sources(const CostMap& cost, const MatchSet& matches, std::size_t k);

}  // namespace epic
