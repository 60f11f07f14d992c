#include "epicflow/geodesic.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <stdexcept>
#include <tuple>

#include "epicflow/error.hpp"

namespace epic {
namespace {

// (distance, tie-break key, pixel or node)
using HeapEntry = std::tuple<double, int, std::size_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

inline double step_cost(double cp, double cq) { return kBaseStepCost + 0.5 * (cp + cq); }

// Calls f(neighbor_index) for the 4-neighbours of pixel i.
template <typename F>
inline void for_each_neighbor(int width, int height, std::size_t i, F&& f) {
  const int x = static_cast<int>(i % static_cast<std::size_t>(width));
  const int y = static_cast<int>(i / static_cast<std::size_t>(width));
  const std::size_t w = static_cast<std::size_t>(width);
  if (x > 0) f(i - 1);
  if (x + 1 < width) f(i + 1);
  if (y > 0) f(i - w);
  if (y + 1 < height) f(i + w);
}

void check_source(const CostMap& cost, Pixel p) {
  if (!cost.contains(p.x, p.y)) throw std::invalid_argument("source pixel out of bounds");
}

}  // namespace

double grid_edge_weight(const CostMap& cost, Pixel p, Pixel q) {
  if (!cost.contains(p.x, p.y) || !cost.contains(q.x, q.y)) throw std::invalid_argument("pixel out of bounds");
  if (std::abs(p.x - q.x) + std::abs(p.y - q.y) != 1) throw std::invalid_argument("pixels are not 4-adjacent");
  return step_cost(cost(p.x, p.y), cost(q.x, q.y));
}

DistanceMap exact_geodesic_map(const CostMap& cost, Pixel source) {
  check_source(cost, source);
  const int w = cost.width(), h = cost.height();
  DistanceMap dist(w, h, kUnreachable);
  std::vector<char> done(dist.size(), 0);
  MinHeap heap;
  const std::size_t s = cost.index(source.x, source.y);
  dist[s] = 0.0;
  heap.emplace(0.0, 0, s);
  while (!heap.empty()) {
    const auto [d, unused, i] = heap.top();
    heap.pop();
    if (done[i]) continue;
    done[i] = 1;
    for_each_neighbor(w, h, i, [&](std::size_t j) {
      if (done[j]) return;
      const double nd = d + step_cost(cost[i], cost[j]);
      if (nd < dist[j]) {
        dist[j] = nd;
        heap.emplace(nd, 0, j);
      }
    });
  }
  return dist;
}

Labeling label_assignment(const CostMap& cost, const MatchSet& matches) {
  if (matches.empty()) throw EmptyMatchError("label_assignment needs at least one match");
  const int w = cost.width(), h = cost.height();
  Labeling lab{Grid<int>(w, h, -1), Grid<double>(w, h, kUnreachable)};
  std::vector<char> done(cost.size(), 0);
  MinHeap heap;

  auto better = [&](double d, int label, std::size_t j) {
    return d < lab.distance[j] || (d == lab.distance[j] && (lab.label[j] < 0 || label < lab.label[j]));
  };

  for (std::size_t m = 0; m < matches.size(); ++m) {
    const Pixel p = nearest_pixel_clamped(matches[m].source, w, h);
    const std::size_t i = cost.index(p.x, p.y);
    const int label = static_cast<int>(m);
    if (better(0.0, label, i)) {
      lab.distance[i] = 0.0;
      lab.label[i] = label;
      heap.emplace(0.0, label, i);
    }
  }

  while (!heap.empty()) {
    const auto [d, label, i] = heap.top();
    heap.pop();
    if (done[i] || label != lab.label[i] || d != lab.distance[i]) continue;
    done[i] = 1;
    for_each_neighbor(w, h, i, [&](std::size_t j) {
      if (done[j]) return;
      const double nd = d + step_cost(cost[i], cost[j]);
      if (better(nd, label, j)) {
        lab.distance[j] = nd;
        lab.label[j] = label;
        heap.emplace(nd, label, j);
      }
    });
  }
  return lab;
}

std::size_t MatchGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : adjacency_) n += adj.size();
  return n / 2;
}

double MatchGraph::weight(int a, int b) const {
  for (const auto& e : adjacency_[static_cast<std::size_t>(a)])
    if (e.to == b) return e.weight;
  return kUnreachable;
}

void MatchGraph::relax_edge(int a, int b, double w) {
  if (a == b) throw std::invalid_argument("self-loop in match graph");
  auto relax_one = [w](std::vector<GraphEdge>& adj, int to) {
    for (auto& e : adj) {
      if (e.to == to) {
        e.weight = std::min(e.weight, w);
        return;
      }
    }
    adj.push_back({to, w});
  };
  relax_one(adjacency_[static_cast<std::size_t>(a)], b);
  relax_one(adjacency_[static_cast<std::size_t>(b)], a);
}

void MatchGraph::finalize() {
  for (auto& adj : adjacency_)
    std::sort(adj.begin(), adj.end(), [](const GraphEdge& l, const GraphEdge& r) { return l.to < r.to; });
}

MatchGraph build_match_graph(const Labeling& labeling, const CostMap& cost, std::size_t match_count) {
  if (!labeling.label.same_shape(cost)) throw std::invalid_argument("labeling and cost map shapes differ");
  MatchGraph graph(match_count);
  const int w = cost.width(), h = cost.height();
  auto visit = [&](std::size_t i, std::size_t j) {
    const int a = labeling.label[i], b = labeling.label[j];
    if (a == b || a < 0 || b < 0) return;
    graph.relax_edge(a, b, labeling.distance[i] + step_cost(cost[i], cost[j]) + labeling.distance[j]);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = cost.index(x, y);
      if (x + 1 < w) visit(i, i + 1);
      if (y + 1 < h) visit(i, i + static_cast<std::size_t>(w));
    }
  }
  graph.finalize();
  return graph;
}

namespace {

// Dijkstra over the match graph; `settle` returns false to stop the search.
template <typename Settle>
void graph_dijkstra(const MatchGraph& graph, int node, Settle&& settle) {
  std::vector<double> dist(graph.node_count(), kUnreachable);
  std::vector<char> done(graph.node_count(), 0);
  MinHeap heap;
  dist[static_cast<std::size_t>(node)] = 0.0;
  heap.emplace(0.0, node, static_cast<std::size_t>(node));
  while (!heap.empty()) {
    const auto [d, n, unused] = heap.top();
    heap.pop();
    const auto un = static_cast<std::size_t>(n);
    if (done[un]) continue;
    done[un] = 1;
    if (!settle(n, d)) return;
    for (const auto& e : graph.neighbors(n)) {
      const auto to = static_cast<std::size_t>(e.to);
      if (done[to]) continue;
      const double nd = d + e.weight;
      if (nd < dist[to]) {
        dist[to] = nd;
        heap.emplace(nd, e.to, to);
      }
    }
  }
}

}  // namespace

std::vector<Neighbor> knn_matches(const MatchGraph& graph, int node, std::size_t k) {
  if (node < 0 || static_cast<std::size_t>(node) >= graph.node_count()) throw std::invalid_argument("node out of range");
  std::vector<Neighbor> out;
  if (k == 0) return out;
  out.reserve(k);
  graph_dijkstra(graph, node, [&](int n, double d) {
    out.push_back({n, d});
    return out.size() < k;
  });
  return out;
}

std::vector<double> graph_distances(const MatchGraph& graph, int node, std::span<const int> targets) {
  if (node < 0 || static_cast<std::size_t>(node) >= graph.node_count()) throw std::invalid_argument("node out of range");
  std::vector<double> found(graph.node_count(), kUnreachable);
  std::vector<char> wanted(graph.node_count(), 0);
  std::size_t remaining = 0;
  for (int t : targets) {
    auto& flag = wanted[static_cast<std::size_t>(t)];
    if (!flag) ++remaining;
    flag = 1;
  }
  if (remaining > 0) {
    graph_dijkstra(graph, node, [&](int n, double d) {
      const auto un = static_cast<std::size_t>(n);
      if (wanted[un]) {
        found[un] = d;
        --remaining;
      }
      return remaining > 0;
    });
  }
  std::vector<double> out;
  out.reserve(targets.size());
  for (int t : targets) out.push_back(found[static_cast<std::size_t>(t)]);
  return out;
}

NearestSources::NearestSources(int width, int height, std::size_t k)
    : width_(width), height_(height), k_(k),
      entries_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * k),
      counts_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

bool NearestSources::has(std::size_t pixel, int source) const {
  for (const auto& n : at(pixel))
    if (n.index == source) return true;
  return false;
}

bool NearestSources::push(std::size_t pixel, Neighbor n) {
  if (full(pixel) || has(pixel, n.index)) return false;
  entries_[pixel * k_ + counts_[pixel]++] = n;
  return true;
}

NearestSources exact_nearest_sources(const CostMap& cost, const MatchSet& matches, std::size_t k) {
  if (matches.empty()) throw EmptyMatchError("exact_nearest_sources needs at least one match");
  if (k == 0) throw std::invalid_argument("k must be positive");
  const int w = cost.width(), h = cost.height();
  k = std::min(k, matches.size());
  NearestSources out(w, h, k);
  MinHeap heap;
  for (std::size_t m = 0; m < matches.size(); ++m) {
    const Pixel p = nearest_pixel_clamped(matches[m].source, w, h);
    heap.emplace(0.0, static_cast<int>(m), cost.index(p.x, p.y));
  }
  while (!heap.empty()) {
    const auto [d, source, i] = heap.top();
    heap.pop();
    if (!out.push(i, {source, d})) continue;
    for_each_neighbor(w, h, i, [&](std::size_t j) {
      if (out.full(j) || out.has(j, source)) return;
      heap.emplace(d + step_cost(cost[i], cost[j]), source, j);
    });
  }
  return out;
}

}  // namespace epic
