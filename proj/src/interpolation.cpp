#include "epicflow/interpolation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

#include "epicflow/error.hpp"

namespace epic {

InterpConfig InterpConfig::for_estimator(Estimator e) {
  InterpConfig c;
  c.estimator = e;
  c.k = e == Estimator::NadarayaWatson ? 25 : 100;
  return c;
}

void InterpConfig::validate() const {
  if (!(kernel_a > 0.0)) throw std::invalid_argument("kernel coefficient a must be positive");
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (!(la_lambda >= 0.0)) throw std::invalid_argument("LA regularization must be nonnegative");
}

Estimator parse_estimator(std::string_view name) {
  if (name == "nw") return Estimator::NadarayaWatson;
  if (name == "la") return Estimator::LocallyAffine;
  throw std::invalid_argument("unknown interpolator '" + std::string(name) + "'");
}

DistanceMode parse_distance_mode(std::string_view name) {
  if (name == "approx") return DistanceMode::ApproxGeodesic;
  if (name == "exact") return DistanceMode::ExactGeodesic;
  if (name == "euclidean") return DistanceMode::Euclidean;
  if (name == "mixed") return DistanceMode::Mixed;
  throw std::invalid_argument("unknown distance mode '" + std::string(name) + "'");
}

std::string_view to_string(DistanceMode mode) {
  switch (mode) {
    case DistanceMode::ApproxGeodesic: return "approx";
    case DistanceMode::ExactGeodesic: return "exact";
    case DistanceMode::Euclidean: return "euclidean";
    case DistanceMode::Mixed: return "mixed";
  }
  return "?";
}

Vec2 AffineParams::target(const Vec2& p) const {
  const Eigen::Vector2d local(p.x - anchor.x, p.y - anchor.y);
  const Eigen::Vector2d out = a * local + t;
  return {anchor.x + out.x(), anchor.y + out.y()};
}

namespace {

double min_distance(std::span<const WeightedMatch> nb) {
  double m = kUnreachable;
  for (const auto& n : nb) m = std::min(m, n.distance);
  return m;
}

std::size_t nearest_index(std::span<const WeightedMatch> nb) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < nb.size(); ++i)
    if (nb[i].distance < nb[best].distance) best = i;
  return best;
}

// exp(-a (d - d_min)); zero for unreachable neighbours.
std::vector<double> kernel_weights(std::span<const WeightedMatch> nb, double kernel_a) {
  const double base = min_distance(nb);
  std::vector<double> w(nb.size(), 0.0);
  if (!std::isfinite(base)) return w;
  for (std::size_t i = 0; i < nb.size(); ++i)
    w[i] = std::isfinite(nb[i].distance) ? std::exp(-kernel_a * (nb[i].distance - base)) : 0.0;
  return w;
}

}  // namespace

Vec2 nw_estimate(std::span<const WeightedMatch> neighbors, double kernel_a) {
  if (neighbors.empty()) throw std::invalid_argument("nw_estimate needs at least one neighbour");
  const auto w = kernel_weights(neighbors, kernel_a);
  double sum = 0.0;
  Vec2 acc;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    sum += w[i];
    acc += w[i] * (neighbors[i].target - neighbors[i].source);
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    const auto& n = neighbors[nearest_index(neighbors)];
    return n.target - n.source;
  }
  return acc * (1.0 / sum);
}

AffineFit la_estimate(std::span<const WeightedMatch> neighbors, double kernel_a, double lambda, const Vec2& anchor) {
  if (neighbors.empty()) throw std::invalid_argument("la_estimate needs at least one neighbour");
  const auto w = kernel_weights(neighbors, kernel_a);

  double wsum = 0.0;
  Vec2 mean_disp;
  Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs_x = Eigen::Vector3d::Zero();
  Eigen::Vector3d rhs_y = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const auto& n = neighbors[i];
    const Eigen::Vector3d row(n.source.x - anchor.x, n.source.y - anchor.y, 1.0);
    normal.noalias() += w[i] * row * row.transpose();
    rhs_x += w[i] * (n.target.x - anchor.x) * row;
    rhs_y += w[i] * (n.target.y - anchor.y) * row;
    wsum += w[i];
    mean_disp += w[i] * (n.target - n.source);
  }

  AffineFit fit;
  fit.params.anchor = anchor;
  if (!(wsum > 0.0)) {
    fit.degenerate = true;
    const auto& n = neighbors[nearest_index(neighbors)];
    fit.params.t = {n.target.x - n.source.x, n.target.y - n.source.y};
    return fit;
  }
  mean_disp *= 1.0 / wsum;
  const Eigen::Vector2d fallback_t(mean_disp.x, mean_disp.y);

  if (neighbors.size() == 1) {
    // a lone neighbour: (I, its displacement) has zero residual and zero penalty
    fit.degenerate = lambda == 0.0;
    fit.params.t = {neighbors[0].target.x - neighbors[0].source.x, neighbors[0].target.y - neighbors[0].source.y};
    return fit;
  }

  if (lambda == 0.0) {
    bool degenerate = neighbors.size() < 3;
    if (!degenerate) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal, Eigen::EigenvaluesOnly);
      const auto ev = eig.eigenvalues();
      degenerate = !(ev(0) > 1e-10 * std::max(ev(2), 1.0));
    }
    if (degenerate) {
      fit.degenerate = true;
      fit.params.t = fallback_t;
      return fit;
    }
  } else {
    const double damp = lambda * wsum;
    normal.diagonal().array() += damp;
    rhs_x += damp * Eigen::Vector3d(1.0, 0.0, fallback_t.x());
    rhs_y += damp * Eigen::Vector3d(0.0, 1.0, fallback_t.y());
  }

  const Eigen::LDLT<Eigen::Matrix3d> solver(normal);
  const Eigen::Vector3d px = solver.solve(rhs_x);
  const Eigen::Vector3d py = solver.solve(rhs_y);
  if (!px.allFinite() || !py.allFinite()) {
    fit.degenerate = true;
    fit.params.t = fallback_t;
    return fit;
  }
  fit.params.a << px(0), px(1), py(0), py(1);
  fit.params.t << px(2), py(2);
  return fit;
}

namespace {

/// Uniform bucket grid over match sources for exact Euclidean k-NN queries.
class EuclideanIndex {
 public:
  EuclideanIndex(const MatchSet& matches, int width, int height) : matches_(matches) {
    const double area = static_cast<double>(width) * static_cast<double>(height);
    cell_ = std::max(1.0, std::sqrt(area / std::max<std::size_t>(matches.size(), 1)) * 2.0);
    cols_ = std::max(1, static_cast<int>(std::ceil((width + 1) / cell_)));
    rows_ = std::max(1, static_cast<int>(std::ceil((height + 1) / cell_)));
    buckets_.resize(static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_));
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const auto [cx, cy] = cell_of(matches[i].source);
      buckets_[static_cast<std::size_t>(cy) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(cx)].push_back(
          static_cast<int>(i));
    }
  }

  /// k nearest sources to p, ascending by (distance, index).
  std::vector<Neighbor> query(const Vec2& p, std::size_t k) const {
    k = std::min(k, matches_.size());
    auto worse = [](const Neighbor& a, const Neighbor& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
    };
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(worse)> best(worse);
    const auto [qx, qy] = cell_of(p);
    const int max_ring = std::max(cols_, rows_);
    for (int r = 0; r <= max_ring; ++r) {
      for (int cy = qy - r; cy <= qy + r; ++cy) {
        if (cy < 0 || cy >= rows_) continue;
        const bool edge_row = cy == qy - r || cy == qy + r;
        for (int cx = qx - r; cx <= qx + r; cx += (edge_row ? 1 : 2 * r)) {
          if (cx >= 0 && cx < cols_) {
            for (int i : buckets_[static_cast<std::size_t>(cy) * static_cast<std::size_t>(cols_) +
                                  static_cast<std::size_t>(cx)]) {
              const Neighbor n{i, (matches_[static_cast<std::size_t>(i)].source - p).norm()};
              if (best.size() < k) {
                best.push(n);
              } else if (worse(n, best.top())) {
                best.pop();
                best.push(n);
              }
            }
          }
          if (r == 0) break;
        }
      }
      // anything in ring r+1 is at least r * cell_ away
      if (best.size() == k && best.top().distance < r * cell_) break;
    }
    std::vector<Neighbor> out(best.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      out[i] = best.top();
      best.pop();
    }
    return out;
  }

 private:
  std::pair<int, int> cell_of(const Vec2& p) const {
    const int cx = std::clamp(static_cast<int>(std::floor((p.x + 0.5) / cell_)), 0, cols_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor((p.y + 0.5) / cell_)), 0, rows_ - 1);
    return {cx, cy};
  }

  const MatchSet& matches_;
  double cell_ = 1.0;
  int cols_ = 1;
  int rows_ = 1;
  std::vector<std::vector<int>> buckets_;
};

struct Estimate {
  Vec2 flow;             // NW
  AffineParams affine;   // LA
};

class Estimation {
 public:
  Estimation(const MatchSet& matches, const InterpConfig& config) : matches_(matches), config_(config) {}

  Estimate run(std::span<const Neighbor> nbs, const Vec2& anchor) {
    scratch_.clear();
    for (const auto& n : nbs) {
      const auto& m = matches_[static_cast<std::size_t>(n.index)];
      scratch_.push_back({m.source, m.target, n.distance});
    }
    Estimate e;
    if (config_.estimator == Estimator::NadarayaWatson) {
      e.flow = nw_estimate(scratch_, config_.kernel_a);
    } else {
      auto fit = la_estimate(scratch_, config_.kernel_a, config_.la_lambda, anchor);
      fallbacks_ += fit.degenerate;
      e.affine = fit.params;
    }
    return e;
  }

  Vec2 flow_at(const Estimate& e, const Vec2& p) const {
    return config_.estimator == Estimator::NadarayaWatson ? e.flow : e.affine.flow(p);
  }

  std::size_t fallbacks() const { return fallbacks_; }

 private:
  const MatchSet& matches_;
  const InterpConfig& config_;
  std::vector<WeightedMatch> scratch_;
  std::size_t fallbacks_ = 0;
};

Vec2 pixel_center(int x, int y) { return {static_cast<double>(x), static_cast<double>(y)}; }

void interpolate_approx(const CostMap& cost, const MatchSet& matches, const InterpConfig& config,
                        InterpolationResult& result) {
  Labeling lab = label_assignment(cost, matches);
  const MatchGraph graph = build_match_graph(lab, cost, matches.size());
  Estimation est(matches, config);
  std::vector<Estimate> per_match(matches.size());
  for (std::size_t m = 0; m < matches.size(); ++m) {
    const auto nbs = knn_matches(graph, static_cast<int>(m), config.k);
    per_match[m] = est.run(nbs, matches[m].source);
  }
  FlowField& flow = result.flow;
  for (int y = 0; y < flow.height(); ++y)
    for (int x = 0; x < flow.width(); ++x)
      flow(x, y) = est.flow_at(per_match[static_cast<std::size_t>(lab.label(x, y))], pixel_center(x, y));
  result.la_fallbacks = est.fallbacks();
  result.labeling = std::move(lab);
}

void interpolate_exact(const CostMap& cost, const MatchSet& matches, const InterpConfig& config,
                       InterpolationResult& result) {
  const NearestSources sources = exact_nearest_sources(cost, matches, config.k);
  Estimation est(matches, config);
  FlowField& flow = result.flow;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Vec2 p = pixel_center(x, y);
      flow(x, y) = est.flow_at(est.run(sources.at(flow.index(x, y)), p), p);
    }
  }
  result.la_fallbacks = est.fallbacks();
}

void interpolate_euclidean(const MatchSet& matches, const InterpConfig& config, InterpolationResult& result) {
  FlowField& flow = result.flow;
  const EuclideanIndex index(matches, flow.width(), flow.height());
  Estimation est(matches, config);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const Vec2 p = pixel_center(x, y);
      flow(x, y) = est.flow_at(est.run(index.query(p, config.k), p), p);
    }
  }
  result.la_fallbacks = est.fallbacks();
}

void interpolate_mixed(const CostMap& cost, const MatchSet& matches, const InterpConfig& config,
                       InterpolationResult& result) {
  FlowField& flow = result.flow;
  Labeling lab = label_assignment(cost, matches);
  const MatchGraph graph = build_match_graph(lab, cost, matches.size());
  const EuclideanIndex index(matches, flow.width(), flow.height());

  // Euclidean neighbour lists, grouped by owning cell so that one graph
  // search per match covers every pixel of its cell.
  std::vector<std::vector<Neighbor>> lists(flow.size());
  std::vector<std::vector<std::size_t>> cell_pixels(matches.size());
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const std::size_t i = flow.index(x, y);
      lists[i] = index.query(pixel_center(x, y), config.k);
      cell_pixels[static_cast<std::size_t>(lab.label[i])].push_back(i);
    }
  }

  Estimation est(matches, config);
  std::vector<int> targets;
  std::vector<double> slot(matches.size(), kUnreachable);
  for (std::size_t m = 0; m < matches.size(); ++m) {
    if (cell_pixels[m].empty()) continue;
    targets.clear();
    for (std::size_t i : cell_pixels[m])
      for (const auto& n : lists[i]) targets.push_back(n.index);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    const auto dist = graph_distances(graph, static_cast<int>(m), targets);
    for (std::size_t t = 0; t < targets.size(); ++t) slot[static_cast<std::size_t>(targets[t])] = dist[t];

    for (std::size_t i : cell_pixels[m]) {
      std::vector<Neighbor> weighted = lists[i];
      for (auto& n : weighted) n.distance = lab.distance[i] + slot[static_cast<std::size_t>(n.index)];
      const int x = static_cast<int>(i % static_cast<std::size_t>(flow.width()));
      const int y = static_cast<int>(i / static_cast<std::size_t>(flow.width()));
      const Vec2 p = pixel_center(x, y);
      flow[i] = est.flow_at(est.run(weighted, p), p);
    }
    for (int t : targets) slot[static_cast<std::size_t>(t)] = kUnreachable;
  }
  result.la_fallbacks = est.fallbacks();
  result.labeling = std::move(lab);
}

}  // namespace

InterpolationResult interpolate(int width, int height, const CostMap& cost, const MatchSet& matches,
                                const InterpConfig& config) {
  config.validate();
  if (width <= 0 || height <= 0) throw std::invalid_argument("non-positive dimensions");
  if (!cost.same_shape(width, height)) throw FormatError("cost map dimensions do not match the image");
  const MatchSet unique = deduplicate(matches, width, height);
  if (unique.empty()) throw EmptyMatchError("no matches to interpolate");

  InterpolationResult result;
  result.flow = FlowField(width, height);
  result.matches_used = unique.size();
  switch (config.distance) {
    case DistanceMode::ApproxGeodesic: interpolate_approx(cost, unique, config, result); break;
    case DistanceMode::ExactGeodesic: interpolate_exact(cost, unique, config, result); break;
    case DistanceMode::Euclidean: interpolate_euclidean(unique, config, result); break;
    case DistanceMode::Mixed: interpolate_mixed(cost, unique, config, result); break;
  }
  return result;
}

}  // namespace epic
