#include "epicflow/match_prep.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "epicflow/error.hpp"
#include "epicflow/interpolation.hpp"

namespace epic {

double min_structure_eigenvalue(const Grid<double>& grad_x, const Grid<double>& grad_y, Pixel p, int radius) {
  const int w = grad_x.width(), h = grad_x.height();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = std::clamp(p.y + dy, 0, h - 1);
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = std::clamp(p.x + dx, 0, w - 1);
      const double gx = grad_x(x, y), gy = grad_y(x, y);
      sxx += gx * gx;
      sxy += gx * gy;
      syy += gy * gy;
    }
  }
  const double half_trace = 0.5 * (sxx + syy);
  const double half_diff = 0.5 * (sxx - syy);
  return half_trace - std::sqrt(half_diff * half_diff + sxy * sxy);
}

MatchSet saliency_filter(const MatchSet& matches, const Image& image, int patch_radius, double threshold) {
  if (patch_radius < 1) throw std::invalid_argument("patch radius must be at least 1");
  if (threshold <= 0.0) return matches;
  const Grid<double> lum = image.luminance();
  const Grid<double> gx = derivative_x(lum);
  const Grid<double> gy = derivative_y(lum);
  MatchSet out;
  for (const auto& m : matches) {
    const Pixel p = nearest_pixel_clamped(m.source, image.width(), image.height());
    if (min_structure_eigenvalue(gx, gy, p, patch_radius) >= threshold) out.push_back(m);
  }
  return out;
}

ConsistencyResult consistency_filter(const MatchSet& matches, const CostMap& cost, double kernel_a, std::size_t k,
                                     double residual_px) {
  if (!(residual_px > 0.0)) throw std::invalid_argument("residual threshold must be positive");
  if (matches.size() < 2) return {matches, true};

  InterpConfig config = InterpConfig::for_estimator(Estimator::NadarayaWatson);
  config.distance = DistanceMode::ApproxGeodesic;
  config.kernel_a = kernel_a;
  config.k = k;
  const FlowField flow = interpolate(cost.width(), cost.height(), cost, matches, config).flow;

  ConsistencyResult result;
  for (const auto& m : matches) {
    const Pixel p = nearest_pixel_clamped(m.source, cost.width(), cost.height());
    if ((m.displacement() - flow(p.x, p.y)).norm() <= residual_px) result.kept.push_back(m);
  }
  return result;
}

void SynthSpec::validate() const {
  if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("density must be in [0,1]");
  if (!(corruption >= 0.0 && corruption <= 1.0)) throw std::invalid_argument("corruption must be in [0,1]");
}

namespace {

// mt19937_64 output is fully specified by the standard; the std
// distributions are not, so draws are derived from raw output here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform real in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// First `count` entries of a partial Fisher-Yates shuffle of 0..n-1, sorted.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, SeededRng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

MatchSet synthesize_matches(const FlowField& gt, const OcclusionMask& occluded, const SynthSpec& spec) {
  spec.validate();
  if (!occluded.same_shape(gt)) throw FormatError("occlusion mask and flow dimensions differ");

  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (!occluded[i]) visible.push_back(i);

  const auto count = static_cast<std::size_t>(std::llround(spec.density * static_cast<double>(visible.size())));
  if (count == 0) throw EmptyMatchError("density yields no matches");

  SeededRng rng(spec.seed);
  const auto chosen = sample_without_replacement(visible.size(), count, rng);

  MatchSet matches;
  matches.reserve(count);
  const auto w = static_cast<std::size_t>(gt.width());
  for (std::size_t c : chosen) {
    const std::size_t i = visible[c];
    const Vec2 p{static_cast<double>(i % w), static_cast<double>(i / w)};
    matches.push_back({p, p + gt[i]});
  }

  const auto corrupt = static_cast<std::size_t>(std::llround(spec.corruption * static_cast<double>(count)));
  const double max_x = gt.width() - 1, max_y = gt.height() - 1;
  for (std::size_t c : sample_without_replacement(count, corrupt, rng))
    matches[c].target = {rng.unit() * max_x, rng.unit() * max_y};
  return matches;
}

}  // namespace epic
