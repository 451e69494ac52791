#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <span>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/quadrature.hpp"

// Radial panel layouts along rays x + tω, shared by the principal-value evaluator and
// the Riesz-potential integrals.

namespace fraclab::detail {

/// Distance from x to the nearest non-smooth locus of u (features and the boundary of a
/// compact support). +∞ when there is none.
inline double feature_distance(const ScalarField& u, std::span<const double> x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : u.features()) best = std::min(best, std::abs(distance(x, f.center) - f.radius));
  const Support& sp = u.support();
  if (sp.compact()) {
    best = std::min(best, std::abs(distance(x, sp.center) - sp.outer));
    if (sp.kind == Support::Kind::Annulus) best = std::min(best, std::abs(distance(x, sp.center) - sp.inner));
  }
  return best;
}

/// Parameters t of the ray x + tω (|ω| = 1) on the sphere |y - c| = r.
inline int sphere_crossings(std::span<const double> x, std::span<const double> w, std::span<const double> c, double r,
                            double& t0, double& t1) {
  double b = 0.0, cc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - c[i];
    b += w[i] * dx;
    cc += dx * dx;
  }
  cc -= r * r;
  const double disc = b * b - cc;
  if (disc < 0.0) return 0;
  const double sq = std::sqrt(disc);
  // stable roots of t^2 + 2bt + cc = 0
  const double q = b >= 0.0 ? -(b + sq) : -(b - sq);
  double a0 = q, a1 = q != 0.0 ? cc / q : -b;
  if (a0 > a1) std::swap(a0, a1);
  t0 = a0;
  t1 = a1;
  return disc == 0.0 ? 1 : 2;
}

/// Interval of t ∈ [lo, hi] where the ray can see a nonzero field, and its panel breaks.
struct RayLayout {
  bool empty = false;
  std::vector<double> breaks;
};

/// Resolution length inside the support region: panels there are never wider.
inline double resolution_length(const ScalarField& u) {
  const Support& sp = u.support();
  double ell = sp.outer > 0.0 ? sp.outer / 8.0 : std::numeric_limits<double>::infinity();
  for (const auto& f : u.features())
    if (f.radius > 0.0) ell = std::min(ell, 2.0 * f.radius);
  return ell;
}

/// Breaks for ∫_lo^hi f(x + tω) k(t) dt: a geometric grid in t anchored at `anchor`, every
/// feature crossing, dyadic grading at singular crossings, and the resolution cap inside
/// the support region. Clips to the support ball of compact / rapidly decaying fields.
inline RayLayout ray_layout(const ScalarField& u, std::span<const double> x, std::span<const double> w, double lo,
                            double hi, double anchor, const QuadratureSpec& q) {
  RayLayout out;
  const Support& sp = u.support();
  if (sp.kind != Support::Kind::Global) {
    double t0, t1;
    if (sphere_crossings(x, w, sp.center, sp.outer, t0, t1) == 0) {
      out.empty = true;
      return out;
    }
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  if (!(hi > lo)) {
    out.empty = true;
    return out;
  }

  struct Cross {
    double t;
    bool singular;
  };
  std::vector<Cross> cross;
  auto add_sphere = [&](std::span<const double> c, double r, bool singular) {
    double t0, t1;
    const int n = sphere_crossings(x, w, c, r, t0, t1);
    if (n >= 1 && t0 > lo && t0 < hi) cross.push_back({t0, singular});
    if (n == 2 && t1 > lo && t1 < hi) cross.push_back({t1, singular});
  };
  for (const auto& f : u.features()) add_sphere(f.center, f.radius, f.singular);
  if (sp.kind == Support::Kind::Annulus) add_sphere(sp.center, sp.inner, false);

  std::vector<double> breaks = geometric_breaks(lo, hi, anchor, q.panel_ratio(), q.panel_phase);
  for (const auto& c : cross) breaks.push_back(c.t);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // grading toward singular crossings and toward singular endpoints (a support
  // boundary that is also a singular feature)
  auto singular_at = [&](double t) {
    for (const auto& c : cross)
      if (c.singular && c.t == t) return true;
    return false;
  };
  auto endpoint_singular = [&](double t) {
    for (const auto& f : u.features()) {
      if (!f.singular) continue;
      Point y(x.begin(), x.end());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * w[i];
      if (std::abs(distance(y, f.center) - f.radius) <= 1e-12 * (1.0 + f.radius)) return true;
    }
    return false;
  };
  std::vector<double> extra;
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    const double t = breaks[i];
    const bool sing = (i == 0 || i + 1 == breaks.size()) ? endpoint_singular(t) : singular_at(t);
    if (!sing) continue;
    if (i > 0) {
      const double width = t - breaks[i - 1];
      for (int j = 1; j <= q.feature_levels; ++j) extra.push_back(t - width * std::ldexp(1.0, -j));
    }
    if (i + 1 < breaks.size()) {
      const double width = breaks[i + 1] - t;
      for (int j = 1; j <= q.feature_levels; ++j) extra.push_back(t + width * std::ldexp(1.0, -j));
    }
  }
  breaks.insert(breaks.end(), extra.begin(), extra.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // resolution cap inside the support region
  const double ell = resolution_length(u);
  if (std::isfinite(ell)) {
    std::vector<double> capped{breaks.front()};
    Point y(x.size());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      const double a = breaks[i], b = breaks[i + 1];
      const double mid = 0.5 * (a + b);
      for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] + mid * w[k];
      const bool inside = distance(y, sp.center) <= sp.outer + 0.5 * (b - a);
      const int pieces = inside ? static_cast<int>(std::ceil((b - a) / ell - 1e-9)) : 1;
      for (int k = 1; k < pieces; ++k) capped.push_back(a + (b - a) * k / pieces);
      capped.push_back(b);
    }
    breaks = std::move(capped);
  }
  out.breaks = std::move(breaks);
  return out;
}

/// Angular windows in which the ray from x meets a feature ball or the compact support
/// ball without x being inside it: unit direction to the center and half-angle.
struct Cap {
  Point axis;
  double half_angle;
};

inline std::vector<Cap> feature_caps(const ScalarField& u, std::span<const double> x) {
  std::vector<Cap> caps;
  auto add = [&](std::span<const double> c, double r) {
    const double D = distance(x, c);
    if (!(r > 0.0) || D <= r) return;
    Point v(c.begin(), c.end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - x[i]) / D;
    caps.push_back({std::move(v), std::asin(r / D)});
  };
  const Support& sp = u.support();
  for (const auto& f : u.features())
    if (!sp.compact() || distance(f.center, sp.center) < f.radius + sp.outer) add(f.center, f.radius);
  if (sp.compact()) add(sp.center, sp.outer);
  return caps;
}

/// Breaks on [lo, lo + period) (or [lo, hi]) for one angular variable: uniform panels of
/// width h shifted by `shift`, `sub` panels across each window and `levels` dyadic
/// panels toward its edges.
inline std::vector<double> angular_breaks(double lo, double hi, double h, double shift,
                                          const std::vector<std::pair<double, double>>& windows, int sub, int levels,
                                          bool periodic) {
  std::vector<double> b;
  const double len = hi - lo;
  for (double t = lo + std::fmod(shift, h); t < hi; t += h) b.push_back(t);
  b.push_back(lo);
  b.push_back(hi);
  auto wrap = [&](double t) {
    if (!periodic) return std::clamp(t, lo, hi);
    t = std::fmod(t - lo, len);
    return lo + (t < 0.0 ? t + len : t);
  };
  for (const auto& [c, a] : windows) {
    for (int k = 0; k <= sub; ++k) b.push_back(wrap(c - a + 2.0 * a * k / sub));
    const double width = 2.0 * a / sub;
    for (int j = 1; j <= levels; ++j) {
      b.push_back(wrap(c - a + width * std::ldexp(1.0, -j)));
      b.push_back(wrap(c + a - width * std::ldexp(1.0, -j)));
    }
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end(), [](double u, double v) { return v - u < 1e-15; }), b.end());
  return b;
}

/// Direction rule for the far field. d = 2 and d = 3 use Gauss panels in the angles with
/// breaks at the caps of every feature seen from x, so localized structure away from x
/// is resolved; otherwise (and for d >= 4) the plain sphere rule. Node density away
/// from caps matches sphere_rule(d, n).
inline SphereRule adapted_sphere_rule(const ScalarField& u, std::span<const double> x, int n, double phase,
                                      int levels = 3) {
  const int d = static_cast<int>(x.size());
  const auto caps = feature_caps(u, x);
  if (d == 1 || d > 3 || caps.empty()) return sphere_rule(d, n, phase);
  const GaussRule& g = gauss_legendre(8);
  const double pi = std::numbers::pi;
  SphereRule rule;
  rule.dim = d;
  auto panels = [&](const std::vector<double>& b, auto&& emit) {
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      const double a = b[i], c = b[i + 1], half = 0.5 * (c - a);
      for (std::size_t k = 0; k < g.nodes.size(); ++k) emit(a + half * (g.nodes[k] + 1.0), half * g.weights[k]);
    }
  };
  if (d == 2) {
    std::vector<std::pair<double, double>> win;
    for (const auto& c : caps) win.emplace_back(std::atan2(c.axis[1], c.axis[0]), c.half_angle);
    const double h = 16.0 * pi / n;
    const auto b = angular_breaks(0.0, 2.0 * pi, h, phase * 2.0 * pi / n, win, std::max(4, n / 8), levels, true);
    panels(b, [&](double th, double w) {
      rule.directions.push_back(std::cos(th));
      rule.directions.push_back(std::sin(th));
      rule.weights.push_back(w);
    });
    return rule;
  }
  // d = 3: polar angle from e1, azimuth in the (e2, e3) plane
  std::vector<std::pair<double, double>> wth, wph;
  for (const auto& c : caps) {
    const double th = std::acos(std::clamp(c.axis[0], -1.0, 1.0));
    wth.emplace_back(th, c.half_angle);
    if (th - c.half_angle <= 0.0 || th + c.half_angle >= pi) continue;  // the cap holds a pole
    const double dph = std::asin(std::min(1.0, std::sin(c.half_angle) / std::sin(th)));
    wph.emplace_back(std::atan2(c.axis[2], c.axis[1]), dph);
  }
  const double hth = 16.0 * pi / n;
  // the tensor product multiplies window refinements, so they are leaner here
  const int sub = std::max(2, n / 16);
  const auto bth = angular_breaks(0.0, pi, hth, 0.0, wth, sub, levels - 1, false);
  const auto bph = angular_breaks(0.0, 2.0 * pi, 2.0 * hth, phase * 2.0 * pi / n, wph, sub, levels - 1, true);
  std::vector<std::pair<double, double>> az;
  panels(bph, [&](double ph, double w) { az.emplace_back(ph, w); });
  panels(bth, [&](double th, double w) {
    const double st = std::sin(th), ct = std::cos(th);
    for (const auto& [ph, wp] : az) {
      rule.directions.insert(rule.directions.end(), {ct, st * std::cos(ph), st * std::sin(ph)});
      rule.weights.push_back(w * wp * st);
    }
  });
  return rule;
}

/// ∫ over the layout of f(x + tω) · weight(t) dt.
template <class Weight>
double ray_integral(const ScalarField& u, std::span<const double> x, std::span<const double> w, const RayLayout& layout,
                    const GaussRule& rule, Weight&& weight) {
  if (layout.empty) return 0.0;
  Point y(x.size());
  return gauss_panels(
      [&](double t) {
        for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[k] + t * w[k];
        return u(y) * weight(t);
      },
      layout.breaks, rule);
}

}  // namespace fraclab::detail
