#include "epicflow/variational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "epicflow/error.hpp"

namespace epic {

namespace {
// zeta is given on the 8-bit intensity scale; images are stored in [0, 1]
constexpr double kIntensityLevels = 255.0;
}  // namespace

void VarParams::validate() const {
  if (fp_iters < 0) throw std::invalid_argument("fp_iters must be nonnegative");
  if (sor_iters < 1) throw std::invalid_argument("sor_iters must be positive");
  if (!(sor_omega > 0.0 && sor_omega < 2.0)) throw std::invalid_argument("sor_omega must be in (0, 2)");
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  if (!(delta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("data term weights must be positive");
  if (!(eps_psi > 0.0) || !(zeta > 0.0)) throw std::invalid_argument("epsilons must be positive");
  if (max_backtracks < 0) throw std::invalid_argument("max_backtracks must be nonnegative");
}

namespace {

inline double keys_weight(double t) {
  t = std::abs(t);
  constexpr double a = -0.5;
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

// 4x4 bicubic stencil at a sample position.
struct Taps {
  std::array<int, 4> xs;
  std::array<int, 4> ys;
  std::array<double, 4> wx;
  std::array<double, 4> wy;

  Taps(double x, double y, int width, int height) {
    // beyond two pixels outside, every tap hits the replicated border anyway
    x = std::isfinite(x) ? std::clamp(x, -2.0, width + 1.0) : -2.0;
    y = std::isfinite(y) ? std::clamp(y, -2.0, height + 1.0) : -2.0;
    const double fx = std::floor(x), fy = std::floor(y);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    const double tx = x - fx, ty = y - fy;
    for (int k = 0; k < 4; ++k) {
      xs[k] = std::clamp(ix - 1 + k, 0, width - 1);
      ys[k] = std::clamp(iy - 1 + k, 0, height - 1);
      wx[k] = keys_weight(tx - (k - 1));
      wy[k] = keys_weight(ty - (k - 1));
    }
  }

  double apply(const Grid<double>& g) const {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
      double row = 0.0;
      for (int i = 0; i < 4; ++i) row += wx[i] * g(xs[i], ys[j]);
      acc += wy[j] * row;
    }
    return acc;
  }
};

bool out_of_domain(double x, double y, int width, int height) {
  return !(x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1);
}

// Planes of one channel: value, first and second derivatives.
struct Planes {
  Grid<double> v, x, y, xx, xy, yy;

  explicit Planes(Grid<double> value) : v(std::move(value)) {
    x = derivative_x(v);
    y = derivative_y(v);
    xx = derivative_x(x);
    xy = derivative_y(x);
    yy = derivative_y(y);
  }
};

std::vector<Planes> decompose(const Image& img) {
  std::vector<Planes> out;
  out.reserve(static_cast<std::size_t>(img.channels()));
  for (int c = 0; c < img.channels(); ++c) out.emplace_back(img.channel(c));
  return out;
}

// Reference-image quantities that do not depend on the flow.
struct Reference {
  std::vector<Planes> planes;
  std::vector<Grid<double>> theta0, theta_x, theta_y;

  Reference(const Image& img, double zeta) : planes(decompose(img)) {
    const double z = zeta / kIntensityLevels;
    const double z2 = z * z;
    for (const auto& p : planes) {
      Grid<double> t0(p.v.width(), p.v.height()), tx = t0, ty = t0;
      for (std::size_t i = 0; i < t0.size(); ++i) {
        t0[i] = 1.0 / (p.x[i] * p.x[i] + p.y[i] * p.y[i] + z2);
        tx[i] = 1.0 / (p.xx[i] * p.xx[i] + p.xy[i] * p.xy[i] + z2);
        ty[i] = 1.0 / (p.xy[i] * p.xy[i] + p.yy[i] * p.yy[i] + z2);
      }
      theta0.push_back(std::move(t0));
      theta_x.push_back(std::move(tx));
      theta_y.push_back(std::move(ty));
    }
  }
};

// Second image planes sampled at x + w(x).
struct WarpedState {
  std::vector<Planes> planes;  // reuses the Planes layout; derivatives are warped, not recomputed
  Mask oob;
};

WarpedState warp_planes(const std::vector<Planes>& source, const FlowField& flow) {
  const int w = flow.width(), h = flow.height();
  WarpedState s{source, Mask(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 d = flow(x, y);
      const double sx = x + d.x, sy = y + d.y;
      const std::size_t i = flow.index(x, y);
      s.oob[i] = out_of_domain(sx, sy, w, h);
      const Taps taps(sx, sy, w, h);
      for (std::size_t c = 0; c < source.size(); ++c) {
        const Planes& src = source[c];
        Planes& dst = s.planes[c];
        dst.v[i] = taps.apply(src.v);
        dst.x[i] = taps.apply(src.x);
        dst.y[i] = taps.apply(src.y);
        dst.xx[i] = taps.apply(src.xx);
        dst.xy[i] = taps.apply(src.xy);
        dst.yy[i] = taps.apply(src.yy);
      }
    }
  }
  return s;
}

inline double psi(double s2, double eps) { return std::sqrt(s2 + eps * eps); }

// Squared forward-difference flow gradient at pixel i (zero across the far borders).
inline double flow_gradient_sq(const FlowField& flow, int x, int y) {
  const Vec2 c = flow(x, y);
  double s = 0.0;
  if (x + 1 < flow.width()) {
    const Vec2 d = flow(x + 1, y) - c;
    s += d.x * d.x + d.y * d.y;
  }
  if (y + 1 < flow.height()) {
    const Vec2 d = flow(x, y + 1) - c;
    s += d.x * d.x + d.y * d.y;
  }
  return s;
}

struct DataResiduals {
  double color = 0.0;     // sum_c theta0 (I2w - I1)^2
  double gradient = 0.0;  // sum_c sum_d theta_d (d I2w - d I1)^2
};

inline DataResiduals data_residuals(const Reference& ref, const WarpedState& ws, std::size_t i) {
  DataResiduals r;
  for (std::size_t c = 0; c < ref.planes.size(); ++c) {
    const Planes& a = ref.planes[c];
    const Planes& b = ws.planes[c];
    const double rz = b.v[i] - a.v[i];
    const double rx = b.x[i] - a.x[i];
    const double ry = b.y[i] - a.y[i];
    r.color += ref.theta0[c][i] * rz * rz;
    r.gradient += ref.theta_x[c][i] * rx * rx + ref.theta_y[c][i] * ry * ry;
  }
  return r;
}

double total_energy(const Reference& ref, const WarpedState& ws, const FlowField& flow, const VarParams& p,
                    const Grid<double>& alpha) {
  double e = 0.0;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const std::size_t i = flow.index(x, y);
      if (!ws.oob[i]) {
        const DataResiduals r = data_residuals(ref, ws, i);
        e += psi(p.delta * r.color, p.eps_psi) + psi(p.gamma * r.gradient, p.eps_psi);
      }
      e += alpha[i] * psi(flow_gradient_sq(flow, x, y), p.eps_psi);
    }
  }
  return e;
}

void check_inputs(const Image& image1, const Image& image2, int fw, int fh) {
  if (image1.width() != image2.width() || image1.height() != image2.height() || image1.channels() != image2.channels())
    throw FormatError("image dimensions differ");
  if (image1.width() != fw || image1.height() != fh) throw FormatError("flow and image dimensions differ");
}

// Frozen per-pixel linear system for the increment (du, dv).
struct LinearSystem {
  Grid<double> a11, a12, a22, b1, b2;
  Grid<double> smooth;  // weight of the forward edges leaving each pixel

  LinearSystem(int w, int h) : a11(w, h), a12(w, h), a22(w, h), b1(w, h), b2(w, h), smooth(w, h) {}
};

LinearSystem assemble(const Reference& ref, const WarpedState& ws, const FlowField& flow, const VarParams& p,
                      const Grid<double>& alpha) {
  const int w = flow.width(), h = flow.height();
  LinearSystem sys(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = flow.index(x, y);
      sys.smooth[i] = alpha[i] / psi(flow_gradient_sq(flow, x, y), p.eps_psi);
      if (ws.oob[i]) continue;

      const DataResiduals r = data_residuals(ref, ws, i);
      const double w0 = p.delta / psi(p.delta * r.color, p.eps_psi);
      const double w1 = p.gamma / psi(p.gamma * r.gradient, p.eps_psi);
      double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
      for (std::size_t c = 0; c < ref.planes.size(); ++c) {
        const Planes& a = ref.planes[c];
        const Planes& b = ws.planes[c];
        const double t0 = w0 * ref.theta0[c][i];
        const double tx = w1 * ref.theta_x[c][i];
        const double ty = w1 * ref.theta_y[c][i];
        const double rz = b.v[i] - a.v[i];
        const double rx = b.x[i] - a.x[i];
        const double ry = b.y[i] - a.y[i];
        a11 += t0 * b.x[i] * b.x[i] + tx * b.xx[i] * b.xx[i] + ty * b.xy[i] * b.xy[i];
        a12 += t0 * b.x[i] * b.y[i] + tx * b.xx[i] * b.xy[i] + ty * b.xy[i] * b.yy[i];
        a22 += t0 * b.y[i] * b.y[i] + tx * b.xy[i] * b.xy[i] + ty * b.yy[i] * b.yy[i];
        b1 += t0 * b.x[i] * rz + tx * b.xx[i] * rx + ty * b.xy[i] * ry;
        b2 += t0 * b.y[i] * rz + tx * b.xy[i] * rx + ty * b.yy[i] * ry;
      }
      sys.a11[i] = a11;
      sys.a12[i] = a12;
      sys.a22[i] = a22;
      sys.b1[i] = b1;
      sys.b2[i] = b2;
    }
  }
  return sys;
}

// Block SOR in raster order on the 2x2-per-pixel system.
FlowField solve_increment(const LinearSystem& sys, const FlowField& flow, const VarParams& p) {
  const int w = flow.width(), h = flow.height();
  FlowField inc(w, h);
  const double omega = p.sor_omega;
  for (int it = 0; it < p.sor_iters; ++it) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = flow.index(x, y);
        const Vec2 base = flow[i];
        double sw = 0.0, r1 = -sys.b1[i], r2 = -sys.b2[i];
        auto edge = [&](std::size_t j, double weight) {
          sw += weight;
          r1 += weight * (flow[j].x + inc[j].x - base.x);
          r2 += weight * (flow[j].y + inc[j].y - base.y);
        };
        if (x > 0) edge(i - 1, sys.smooth[i - 1]);
        if (x + 1 < w) edge(i + 1, sys.smooth[i]);
        if (y > 0) edge(i - static_cast<std::size_t>(w), sys.smooth[i - static_cast<std::size_t>(w)]);
        if (y + 1 < h) edge(i + static_cast<std::size_t>(w), sys.smooth[i]);

        const double m11 = sys.a11[i] + sw, m12 = sys.a12[i], m22 = sys.a22[i] + sw;
        const double det = m11 * m22 - m12 * m12;
        if (!(det > 0.0)) continue;
        const double du = (m22 * r1 - m12 * r2) / det;
        const double dv = (m11 * r2 - m12 * r1) / det;
        inc[i].x += omega * (du - inc[i].x);
        inc[i].y += omega * (dv - inc[i].y);
      }
    }
  }
  return inc;
}

FlowField add_scaled(const FlowField& flow, const FlowField& inc, double step) {
  FlowField out = flow;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += step * inc[i];
  return out;
}

void check_finite(const FlowField& f, const char* what) {
  for (const auto& v : f.values())
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

double bicubic_sample(const Grid<double>& plane, double x, double y) {
  return Taps(x, y, plane.width(), plane.height()).apply(plane);
}

WarpResult warp_image(const Image& image2, const FlowField& flow) {
  if (image2.width() != flow.width() || image2.height() != flow.height())
    throw FormatError("flow and image dimensions differ");
  const int w = flow.width(), h = flow.height();
  std::vector<Grid<double>> planes;
  for (int c = 0; c < image2.channels(); ++c) planes.push_back(image2.channel(c));
  WarpResult out{Image(w, h, image2.channels()), Mask(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 d = flow(x, y);
      const double sx = x + d.x, sy = y + d.y;
      out.out_of_bounds(x, y) = out_of_domain(sx, sy, w, h);
      const Taps taps(sx, sy, w, h);
      for (int c = 0; c < image2.channels(); ++c) out.warped(x, y, c) = taps.apply(planes[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

double energy(const Image& image1, const Image& image2, const FlowField& flow, const VarParams& params,
              const SmoothnessWeights& alpha) {
  check_inputs(image1, image2, flow.width(), flow.height());
  if (!alpha.same_shape(flow)) throw FormatError("smoothness weights and flow dimensions differ");
  const Reference ref(image1, params.zeta);
  const auto target = decompose(image2);
  return total_energy(ref, warp_planes(target, flow), flow, params, alpha);
}

FlowField refine(const Image& image1, const Image& image2, const FlowField& init, const VarParams& params,
                 RefineStats* stats) {
  params.validate();
  check_inputs(image1, image2, init.width(), init.height());
  check_finite(init, "initial flow");
  if (params.fp_iters == 0) return init;

  const SmoothnessWeights alpha = smoothness_weights(image1, params.kappa);
  const Reference ref(image1, params.zeta);
  const auto target = decompose(image2);

  FlowField flow = init;
  WarpedState state = warp_planes(target, flow);
  double e = total_energy(ref, state, flow, params, alpha);
  if (!std::isfinite(e)) throw NumericError("non-finite energy at initialization");
  if (stats) stats->energies.push_back(e);

  for (int it = 0; it < params.fp_iters; ++it) {
    const LinearSystem sys = assemble(ref, state, flow, params, alpha);
    const FlowField inc = solve_increment(sys, flow, params);
    check_finite(inc, "flow increment");

    double step = 1.0;
    double accepted = 0.0;
    for (int b = 0; b <= params.max_backtracks; ++b, step *= 0.5) {
      FlowField candidate = add_scaled(flow, inc, step);
      WarpedState cand_state = warp_planes(target, candidate);
      const double ce = total_energy(ref, cand_state, candidate, params, alpha);
      if (!std::isfinite(ce)) throw NumericError("non-finite energy");
      if (ce <= e) {
        flow = std::move(candidate);
        state = std::move(cand_state);
        e = ce;
        accepted = step;
        break;
      }
    }
    if (stats) {
      stats->energies.push_back(e);
      stats->step_sizes.push_back(accepted);
    }
  }
  return flow;
}

}  // namespace epic
