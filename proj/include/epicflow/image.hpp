#pragma once

// Core value types: pixel grids, images, flow fields, cost maps, matches.
//
// Coordinates: origin at the top-left pixel centre, x to the right, y down,
// pixel centres at integer coordinates. All grids are stored row-major.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace epic {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
};

/// Dense row-major grid of values.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative grid dimensions");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_shape(const Grid<U>& o) const { return same_shape(o.width(), o.height()); }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Per-pixel displacement (u, v) from image 1 to image 2, in pixels.
class FlowField : public Grid<Vec2> {
 public:
  using Grid<Vec2>::Grid;
};

/// Nonnegative per-pixel crossing cost of the geodesic metric.
class CostMap : public Grid<double> {
 public:
  using Grid<double>::Grid;
};

/// Per-pixel flag grid; nonzero means set (occluded, invalid, out-of-bounds...).
class Mask : public Grid<std::uint8_t> {
 public:
  using Grid<std::uint8_t>::Grid;
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values()) n += (v != 0);
    return n;
  }
};

using OcclusionMask = Mask;

/// Intensities in [0,1], 1 or 3 channels, interleaved per pixel.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }

  double& operator()(int x, int y, int c = 0) { return data_[offset(x, y, c)]; }
  double operator()(int x, int y, int c = 0) const { return data_[offset(x, y, c)]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  /// Single-channel grid of one plane.
  Grid<double> channel(int c) const;
  /// Luminance with weights (0.299, 0.587, 0.114); a grey image is returned as-is.
  Grid<double> luminance() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t offset(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

/// A correspondence between a position in image 1 and one in image 2.
struct Match {
  Vec2 source;
  Vec2 target;
  Vec2 displacement() const { return target - source; }
  friend bool operator==(const Match&, const Match&) = default;
};

using MatchSet = std::vector<Match>;

/// Nearest pixel to a sub-pixel position (halves round away from zero).
inline Pixel nearest_pixel(const Vec2& p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

/// Clamped version of nearest_pixel, always inside a width x height grid.
Pixel nearest_pixel_clamped(const Vec2& p, int width, int height);

/// Removes matches whose source falls on an already-used pixel, keeping the
/// first occurrence and the original order.
MatchSet deduplicate(const MatchSet& matches, int width, int height);

/// Central-difference derivatives with replicated borders.
Grid<double> derivative_x(const Grid<double>& g);
Grid<double> derivative_y(const Grid<double>& g);

/// Nearest-rank percentile (q in [0,1]) of a sequence of values; 0 if empty.
double percentile(std::vector<double> values, double q);

}  // namespace epic
