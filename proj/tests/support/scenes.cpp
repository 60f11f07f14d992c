#include "support/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unistd.h>

namespace epic::testing {

Texture::Texture(std::uint64_t seed, int channels, double contrast, double min_wavelength)
    : channels_(channels), contrast_(contrast), waves_(static_cast<std::size_t>(channels)) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> wavelength(min_wavelength, 4.0 * min_wavelength);
  for (auto& list : waves_) {
    for (int i = 0; i < 6; ++i) {
      const double dir = angle(rng), k = 2.0 * std::numbers::pi / wavelength(rng);
      list.push_back({k * std::cos(dir), k * std::sin(dir), angle(rng), 0.4 / 6.0});
    }
  }
}

double Texture::operator()(double x, double y, int c) const {
  double v = 0.0;
  for (const auto& wv : waves_[static_cast<std::size_t>(c)]) v += wv.amp * std::sin(wv.kx * x + wv.ky * y + wv.phase);
  return 0.5 + contrast_ * v;
}

namespace {

Image render(const Texture& tex, int w, int h, const std::function<Vec2(double, double)>& offset) {
  Image img(w, h, tex.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec2 o = offset(x, y);
      for (int c = 0; c < tex.channels(); ++c) img(x, y, c) = tex(x - o.x, y - o.y, c);
    }
  return img;
}

}  // namespace

Scene translation_scene(int w, int h, Vec2 t, int channels, std::uint64_t seed, double contrast) {
  return warped_scene(w, h, [t](double, double) { return t; }, channels, seed, contrast);
}

Scene warped_scene(int w, int h, const std::function<Vec2(double, double)>& motion, int channels, std::uint64_t seed,
                   double contrast) {
  const Texture tex(seed, channels, contrast);
  Scene s;
  s.image1 = render(tex, w, h, [](double, double) { return Vec2{}; });
  s.image2 = render(tex, w, h, motion);
  s.truth = FlowField(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Vec2 q{static_cast<double>(x), static_cast<double>(y)};
      for (int it = 0; it < 100; ++it) q = Vec2{double(x), double(y)} + motion(q.x, q.y);
      s.truth(x, y) = q - Vec2{double(x), double(y)};
    }
  return s;
}

std::function<Vec2(double, double)> random_smooth_motion(std::mt19937_64& rng, int w, int h, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi);
  const double tx = amplitude * u(rng), ty = amplitude * u(rng);
  const double lin = 0.02;
  const double a = lin * u(rng), b = lin * u(rng), c = lin * u(rng), d = lin * u(rng);
  const double ax = 0.5 * amplitude * u(rng), ay = 0.5 * amplitude * u(rng);
  const double fx = 2.0 * std::numbers::pi / w, fy = 2.0 * std::numbers::pi / h, p1 = ph(rng), p2 = ph(rng);
  const double cx = w / 2.0, cy = h / 2.0;
  return [=](double x, double y) {
    return Vec2{tx + a * (x - cx) + b * (y - cy) + ax * std::sin(fx * x + p1) * std::cos(fy * y),
                ty + c * (x - cx) + d * (y - cy) + ay * std::cos(fx * x) * std::sin(fy * y + p2)};
  };
}

FlowField random_smooth_flow(std::mt19937_64& rng, int w, int h, double amplitude) {
  const auto m = random_smooth_motion(rng, w, h, amplitude);
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f(x, y) = m(x, y);
  return f;
}

CostMap random_cost(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CostMap c(w, h);
  for (auto& v : c.values()) v = u(rng);
  return c;
}

MatchSet random_matches(std::mt19937_64& rng, int w, int h, std::size_t n) {
  std::vector<int> pixels(static_cast<std::size_t>(w * h));
  std::iota(pixels.begin(), pixels.end(), 0);
  std::shuffle(pixels.begin(), pixels.end(), rng);
  std::uniform_real_distribution<double> disp(-5.0, 5.0);
  MatchSet m;
  for (std::size_t i = 0; i < n && i < pixels.size(); ++i) {
    const Vec2 p{double(pixels[i] % w), double(pixels[i] / w)};
    m.push_back({p, p + Vec2{disp(rng), disp(rng)}});
  }
  return m;
}

MatchSet lattice_matches(const FlowField& truth, int stride, int offset) {
  MatchSet m;
  for (int y = offset; y < truth.height(); y += stride)
    for (int x = offset; x < truth.width(); x += stride) {
      const Vec2 p{double(x), double(y)};
      m.push_back({p, p + truth(x, y)});
    }
  return m;
}

PiecewiseScene piecewise_scene(std::uint64_t seed, int w, int h, std::size_t match_count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, 2.0 * std::numbers::pi), noise(0.0, 0.05);
  const double amp = h * (0.1 + 0.1 * std::abs(u(rng))), phase = ph(rng), periods = 1.0 + std::abs(u(rng));
  auto curve = [&](double x) { return h / 2.0 + amp * std::sin(2.0 * std::numbers::pi * periods * x / w + phase); };

  struct Motion {
    double a, b, c, d, tx, ty;
  };
  auto draw = [&](double base_x, double base_y) {
    return Motion{0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng), base_x + u(rng), base_y + u(rng)};
  };
  const Motion top = draw(4.0, 1.0), bottom = draw(-3.0, -2.0);
  auto flow = [&](const Motion& m, double x, double y) {
    const double cx = x - w / 2.0, cy = y - h / 2.0;
    return Vec2{m.tx + m.a * cx + m.b * cy, m.ty + m.c * cx + m.d * cy};
  };

  PiecewiseScene s{CostMap(w, h), FlowField(w, h), {}};
  std::vector<int> off_curve;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dy = y - curve(x);
      const bool on_curve = std::abs(dy) <= 1.5;
      s.cost(x, y) = on_curve ? 1.0 : noise(rng);
      s.truth(x, y) = dy < 0 ? flow(top, x, y) : flow(bottom, x, y);
      if (!on_curve) off_curve.push_back(y * w + x);
    }
  std::shuffle(off_curve.begin(), off_curve.end(), rng);
  off_curve.resize(std::min(match_count, off_curve.size()));
  std::sort(off_curve.begin(), off_curve.end());
  for (int i : off_curve) {
    const Vec2 p{double(i % w), double(i / w)};
    s.matches.push_back({p, p + s.truth(i % w, i / w)});
  }
  return s;
}

double average_endpoint_error(const FlowField& a, const FlowField& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]).norm();
  return sum / static_cast<double>(a.size());
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "epicflow-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace epic::testing
