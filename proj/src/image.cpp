#include "epicflow/image.hpp"

#include <algorithm>
#include <unordered_set>

namespace epic {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative image dimensions");
  if (channels != 1 && channels != 3) throw std::invalid_argument("image must have 1 or 3 channels");
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Grid<double> Image::channel(int c) const {
  Grid<double> out(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) out(x, y) = (*this)(x, y, c);
  return out;
}

Grid<double> Image::luminance() const {
  if (channels_ == 1) return channel(0);
  Grid<double> out(width_, height_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      out(x, y) = 0.299 * (*this)(x, y, 0) + 0.587 * (*this)(x, y, 1) + 0.114 * (*this)(x, y, 2);
  return out;
}

Pixel nearest_pixel_clamped(const Vec2& p, int width, int height) {
  Pixel q = nearest_pixel(p);
  q.x = std::clamp(q.x, 0, width - 1);
  q.y = std::clamp(q.y, 0, height - 1);
  return q;
}

MatchSet deduplicate(const MatchSet& matches, int width, int height) {
  MatchSet out;
  out.reserve(matches.size());
  std::unordered_set<long long> seen;
  for (const auto& m : matches) {
    const Pixel p = nearest_pixel_clamped(m.source, width, height);
    const long long key = static_cast<long long>(p.y) * width + p.x;
    if (seen.insert(key).second) out.push_back(m);
  }
  return out;
}

Grid<double> derivative_x(const Grid<double>& g) {
  const int w = g.width(), h = g.height();
  Grid<double> out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = 0.5 * (g(std::min(x + 1, w - 1), y) - g(std::max(x - 1, 0), y));
  return out;
}

Grid<double> derivative_y(const Grid<double>& g) {
  const int w = g.width(), h = g.height();
  Grid<double> out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = 0.5 * (g(x, std::min(y + 1, h - 1)) - g(x, std::max(y - 1, 0)));
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  q = std::clamp(q, 0.0, 1.0);
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

}  // namespace epic
