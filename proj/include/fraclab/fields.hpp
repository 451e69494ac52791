#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

inline constexpr int kSmooth = INT_MAX;  // declared smoothness C^∞

/// Sphere |y - center| = radius along which a field is not smooth. Quadrature puts a
/// panel break on every crossing; `singular` loci (Hölder behaviour) are also graded.
struct Feature {
  Point center;
  double radius = 0.0;
  bool singular = false;
};

/// Where a field can be nonzero, plus what is known about it far away.
struct Support {
  enum class Kind { Ball, Annulus, RapidlyDecaying, Global };

  Kind kind = Kind::Global;
  Point center;
  double inner = 0.0;  // annulus only
  double outer = 0.0;  // ball/annulus radius; effective extent when rapidly decaying
  // Global fields may declare u(y) ≈ amplitude |y - center|^exponent as |y| → ∞.
  bool has_decay = false;
  double decay_exponent = 0.0;
  double decay_amplitude = 0.0;

  static Support ball(Point c, double r) { return {Kind::Ball, std::move(c), 0.0, r}; }
  static Support annulus(Point c, double r_in, double r_out) { return {Kind::Annulus, std::move(c), r_in, r_out}; }
  static Support rapidly_decaying(Point c, double extent) { return {Kind::RapidlyDecaying, std::move(c), 0.0, extent}; }
  static Support global() { return {}; }
  static Support power_law(Point c, double extent, double exponent, double amplitude) {
    Support s{Kind::Global, std::move(c), 0.0, extent};
    s.has_decay = true;
    s.decay_exponent = exponent;
    s.decay_amplitude = amplitude;
    return s;
  }

  bool compact() const { return kind == Kind::Ball || kind == Kind::Annulus; }

  /// True when y lies outside the closed support (compact kinds only).
  bool excludes(std::span<const double> y) const {
    if (!compact()) return false;
    const double r = distance(y, center);
    if (r > outer) return true;
    return kind == Kind::Annulus && r < inner;
  }
};

/// A real function on R^d with support and smoothness metadata.
///
/// Evaluation outside a compact support returns exactly 0 without calling the
/// evaluator. Evaluators must be stateless; fields are cheap to copy.
class ScalarField {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;

  ScalarField(int dim, Evaluator fn, Support support, int smoothness = kSmooth, std::vector<Feature> features = {})
      : dim_(dim), fn_(std::make_shared<const Evaluator>(std::move(fn))), support_(std::move(support)),
        smoothness_(smoothness), features_(std::move(features)) {
    if (dim < 1) throw domain_error("ScalarField: dimension must be >= 1");
    if (support_.center.empty()) support_.center.assign(static_cast<std::size_t>(dim), 0.0);
  }

  double operator()(std::span<const double> y) const {
    if (support_.excludes(y)) return 0.0;
    return (*fn_)(y);
  }

  int dim() const noexcept { return dim_; }
  const Support& support() const noexcept { return support_; }
  int smoothness() const noexcept { return smoothness_; }
  const std::vector<Feature>& features() const noexcept { return features_; }

 private:
  int dim_;
  std::shared_ptr<const Evaluator> fn_;
  Support support_;
  int smoothness_;
  std::vector<Feature> features_;
};

namespace fields {

inline ScalarField zero(int d) {
  return ScalarField(d, [](std::span<const double>) { return 0.0; }, Support::ball(Point(static_cast<std::size_t>(d), 0.0), 0.0));
}

/// e^{-π|x - c|^2}, which is its own Fourier transform.
inline ScalarField gaussian(int d, Point c = {}, double amplitude = 1.0) {
  if (c.empty()) c.assign(static_cast<std::size_t>(d), 0.0);
  return ScalarField(
      d,
      [c, amplitude](std::span<const double> y) {
        const double r = distance(y, c);
        return amplitude * std::exp(-std::numbers::pi * r * r);
      },
      // e^{-π r^2} < 1e-24 beyond r = 4.2
      Support::rapidly_decaying(c, 4.2));
}

/// scale · (1 - |x|^2)_+^s, Hölder at the unit sphere.
inline ScalarField getoor_profile(int d, double s, double scale = 1.0) {
  Point c(static_cast<std::size_t>(d), 0.0);
  return ScalarField(
      d,
      [scale, s](std::span<const double> y) {
        const double t = 1.0 - dot(y, y);
        return t > 0.0 ? scale * std::pow(t, s) : 0.0;
      },
      Support::ball(c, 1.0), 0, {Feature{c, 1.0, true}});
}

/// value · 1_{B_radius(c)}.
inline ScalarField indicator(int d, double value = 1.0, Point c = {}, double radius = 1.0) {
  if (c.empty()) c.assign(static_cast<std::size_t>(d), 0.0);
  return ScalarField(
      d, [value](std::span<const double>) { return value; }, Support::ball(c, radius), 0, {Feature{c, radius, false}});
}

/// (1 - |x|^2)^p on B_1, zero outside; C^{p-1} across the unit sphere for integer p.
inline ScalarField poly_bump(int d, double p) {
  if (!(p > 0.0)) throw domain_error("poly_bump: exponent must be positive");
  Point c(static_cast<std::size_t>(d), 0.0);
  const bool integral = p == std::floor(p);
  const int smooth = integral ? static_cast<int>(p) - 1 : static_cast<int>(std::floor(p));
  return ScalarField(
      d,
      [p](std::span<const double> y) {
        const double t = 1.0 - dot(y, y);
        return t > 0.0 ? std::pow(t, p) : 0.0;
      },
      Support::ball(c, 1.0), smooth, {Feature{c, 1.0, !integral || p < 2.0}});
}

inline ScalarField from_function(int d, ScalarField::Evaluator fn, int smoothness = kSmooth) {
  return ScalarField(d, std::move(fn), Support::global(), smoothness);
}

inline ScalarField coordinate(int d, int axis) {
  if (axis < 0 || axis >= d) throw domain_error("coordinate: axis out of range");
  return from_function(d, [axis](std::span<const double> y) { return y[static_cast<std::size_t>(axis)]; });
}

inline ScalarField constant(int d, double c) {
  return from_function(d, [c](std::span<const double>) { return c; });
}

namespace detail {

inline Support combine_support(const Support& a, const Support& b, double wa, double wb) {
  using K = Support::Kind;
  if (wb == 0.0) return a;
  if (wa == 0.0) return b;
  auto bounding = [](const Support& x, const Support& y) {
    // smallest ball centered at x.center holding both
    return std::max(x.outer, distance(x.center, y.center) + y.outer);
  };
  if (a.compact() && b.compact()) return Support::ball(a.center, bounding(a, b));
  if (a.kind == K::Global || b.kind == K::Global) {
    const Support& g = a.kind == K::Global ? a : b;
    const Support& o = a.kind == K::Global ? b : a;
    const double wg = a.kind == K::Global ? wa : wb;
    if (o.kind == K::Global) {
      if (a.has_decay && b.has_decay && a.decay_exponent == b.decay_exponent && a.center == b.center)
        return Support::power_law(a.center, std::max(a.outer, b.outer), a.decay_exponent,
                                  wa * a.decay_amplitude + wb * b.decay_amplitude);
      return Support::global();
    }
    if (!g.has_decay) return Support::global();
    return Support::power_law(g.center, bounding(g, o), g.decay_exponent, wg * g.decay_amplitude);
  }
  // at least one rapidly decaying, none global
  const Support& r = a.kind == K::RapidlyDecaying ? a : b;
  const Support& o = a.kind == K::RapidlyDecaying ? b : a;
  return Support::rapidly_decaying(r.center, bounding(r, o));
}

inline std::vector<Feature> merge_features(const std::vector<Feature>& a, const std::vector<Feature>& b) {
  std::vector<Feature> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

/// wa·a + wb·b.
inline ScalarField linear_combination(double wa, const ScalarField& a, double wb, const ScalarField& b) {
  if (a.dim() != b.dim()) throw domain_error("linear_combination: dimension mismatch");
  return ScalarField(
      a.dim(), [a, b, wa, wb](std::span<const double> y) { return wa * a(y) + wb * b(y); },
      detail::combine_support(a.support(), b.support(), wa, wb), std::min(a.smoothness(), b.smoothness()),
      detail::merge_features(wa != 0.0 ? a.features() : std::vector<Feature>{},
                             wb != 0.0 ? b.features() : std::vector<Feature>{}));
}

inline ScalarField sum(const ScalarField& a, const ScalarField& b) { return linear_combination(1.0, a, 1.0, b); }
inline ScalarField difference(const ScalarField& a, const ScalarField& b) { return linear_combination(1.0, a, -1.0, b); }

inline ScalarField scaled(const ScalarField& a, double c) {
  Support s = a.support();
  s.decay_amplitude *= c;
  return ScalarField(
      a.dim(), [a, c](std::span<const double> y) { return c * a(y); }, s, a.smoothness(), a.features());
}

/// u · 1_{B_radius(c)}: hard restriction, discontinuous across the sphere.
inline ScalarField restricted(const ScalarField& u, Point c, double radius) {
  std::vector<Feature> feats;
  for (const auto& f : u.features())  // loci that miss the ball no longer matter
    if (std::abs(distance(f.center, c) - f.radius) < radius) feats.push_back(f);
  feats.push_back(Feature{c, radius, false});
  return ScalarField(
      u.dim(), [u](std::span<const double> y) { return u(y); }, Support::ball(std::move(c), radius), 0, std::move(feats));
}

/// u(y - shift).
inline ScalarField translated(const ScalarField& u, std::span<const double> shift) {
  Point z(shift.begin(), shift.end());
  Support s = u.support();
  for (std::size_t i = 0; i < s.center.size(); ++i) s.center[i] += z[i];
  auto feats = u.features();
  for (auto& f : feats)
    for (std::size_t i = 0; i < f.center.size(); ++i) f.center[i] += z[i];
  return ScalarField(
      u.dim(),
      [u, z](std::span<const double> y) {
        Point w(y.begin(), y.end());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= z[i];
        return u(w);
      },
      std::move(s), u.smoothness(), std::move(feats));
}

}  // namespace fields

// ---------------------------------------------------------------------------
// Bump, mollifier, cutoff

namespace detail {

inline double bump_profile(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

inline double compute_bump_normalization(int d) {
  // |S^{d-1}| ∫_0^1 r^{d-1} e^{-1/(1-r^2)} dr; the profile is flat at r = 1
  const QuadResult q = tanh_sinh(
      [d](double r, double, double hi) {
        const double one_minus_r2 = hi * (1.0 + r);
        return std::pow(r, d - 1) * std::exp(-1.0 / one_minus_r2);
      },
      0.0, 1.0, 7);
  return 1.0 / (sphere_measure(d) * q.value);
}

}  // namespace detail

/// Constant C_d making C_d exp(-1/(1 - |z|^2)) integrate to one over B_1 ⊂ R^d.
inline double bump_normalization(int d) {
  static const std::array<double, 17> table = [] {
    std::array<double, 17> t{};
    for (int k = 1; k <= 16; ++k) t[static_cast<std::size_t>(k)] = detail::compute_bump_normalization(k);
    return t;
  }();
  if (d >= 1 && d <= 16) return table[static_cast<std::size_t>(d)];
  return detail::compute_bump_normalization(d);
}

/// Unit-mass bump ζ supported in B_1.
inline double unit_bump(std::span<const double> z) { return bump_normalization(static_cast<int>(z.size())) * detail::bump_profile(dot(z, z)); }

/// ζ_m(z) = m^d ζ(m z); unit mass, supported in B_{1/m}.
class Mollifier {
 public:
  Mollifier(int d, double m) : d_(d), m_(m) {
    if (!(m > 0.0)) throw domain_error("Mollifier: scale index must be positive");
  }
  double operator()(std::span<const double> z) const {
    const double r2 = dot(z, z) * m_ * m_;
    return std::pow(m_, d_) * bump_normalization(d_) * detail::bump_profile(r2);
  }
  double support_radius() const { return 1.0 / m_; }
  int dim() const { return d_; }

 private:
  int d_;
  double m_;
};

/// Smooth radial cutoff: 1 on the closed ball B̄_plateau(center), 0 outside B_outer(center).
///
/// The transition is e(1-t) / (e(1-t) + e(t)) with e(t) = exp(-1/t), t ∈ (0,1) the
/// normalized position in the shell, so plateau and support hold exactly.
class Cutoff {
 public:
  Cutoff(Point center, double plateau, double outer) : center_(std::move(center)), plateau_(plateau), outer_(outer) {
    if (!(plateau > 0.0 && outer > plateau)) throw domain_error("Cutoff: need 0 < plateau < outer");
  }
  double operator()(std::span<const double> y) const {
    const double r = distance(y, center_);
    if (r <= plateau_) return 1.0;
    if (r >= outer_) return 0.0;
    const double t = (r - plateau_) / (outer_ - plateau_);
    const double a = std::exp(-1.0 / (1.0 - t)), b = std::exp(-1.0 / t);
    return a / (a + b);
  }
  const Point& center() const { return center_; }
  double plateau() const { return plateau_; }
  double outer() const { return outer_; }

 private:
  Point center_;
  double plateau_, outer_;
};

/// Annulus U = B_{4r}(a) \ B̄_{3r}(a) carrying dictionary densities for fits on B_r(a).
struct AnnulusGeometry {
  Point center;
  double radius = 1.0;

  double inner() const { return 3.0 * radius; }
  double outer() const { return 4.0 * radius; }
  bool contains(std::span<const double> x) const {
    const double r = distance(x, center);
    return r > inner() && r < outer();
  }
  /// distance from x to ∂U (negative outside U)
  double clearance(std::span<const double> x) const {
    const double r = distance(x, center);
    return std::min(r - inner(), outer() - r);
  }
  static AnnulusGeometry unit(int d) { return {Point(static_cast<std::size_t>(d), 0.0), 1.0}; }
};

/// The cutoff used at x ∈ U: plateau radius clearance/3, support radius 2·clearance/3.
inline Cutoff cutoff_at(const AnnulusGeometry& U, std::span<const double> x) {
  const double c = U.clearance(x);
  if (!(c > 0.0)) throw precondition_error("cutoff_at: point is not inside the annulus");
  return Cutoff(Point(x.begin(), x.end()), c / 3.0, 2.0 * c / 3.0);
}

/// g_m(z) = ξ(z) ζ_m(z - x): a unit-mass density concentrating at x ∈ U.
inline ScalarField mollify_at(std::span<const double> x, double m, const AnnulusGeometry& U) {
  const Cutoff xi = cutoff_at(U, x);
  const Mollifier zeta(static_cast<int>(x.size()), m);
  if (zeta.support_radius() > xi.plateau())
    throw precondition_error(detail::concat("mollify_at: B_{1/m}(x) leaks past the cutoff plateau (1/m = ",
                                            zeta.support_radius(), ", plateau = ", xi.plateau(), ")"));
  Point c(x.begin(), x.end());
  return ScalarField(
      static_cast<int>(x.size()),
      [xi, zeta, c](std::span<const double> z) {
        Point w(z.begin(), z.end());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c[i];
        return xi(z) * zeta(w);
      },
      Support::ball(c, zeta.support_radius()), kSmooth, {Feature{c, zeta.support_radius(), false}});
}

// ---------------------------------------------------------------------------
// Sampled C^k norm

struct Ball {
  Point center;
  double radius = 1.0;
};

struct GridSpec {
  int points_per_axis = 33;
  double step = 0.0;  // finite-difference step; 0 selects half the grid spacing
};

namespace detail {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> coeffs;  // multiply by h^-order
};

/// Fourth-order central difference stencils for derivative orders 0..4.
inline const Stencil& central_stencil(int order) {
  static const std::array<Stencil, 5> table{{
      {{0}, {1.0}},
      {{-2, -1, 1, 2}, {1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12}},
      {{-2, -1, 0, 1, 2}, {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12}},
      {{-3, -2, -1, 1, 2, 3}, {1.0 / 8, -1.0, 13.0 / 8, -13.0 / 8, 1.0, -1.0 / 8}},
      {{-3, -2, -1, 0, 1, 2, 3}, {-1.0 / 6, 2.0, -6.5, 28.0 / 3, -6.5, 2.0, -1.0 / 6}},
  }};
  if (order < 0 || order > 4) throw domain_error("central_stencil: derivative order must lie in [0, 4]");
  return table[static_cast<std::size_t>(order)];
}

inline void enumerate_multi_indices(int d, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = total; k >= 0; --k) {
    cur.push_back(k);
    enumerate_multi_indices(d, total - k, cur, out);
    cur.pop_back();
  }
}

}  // namespace detail

/// All multi-indices α ∈ N^d with |α| <= k, ordered by |α|.
inline std::vector<std::vector<int>> multi_indices(int d, int k) {
  std::vector<std::vector<int>> out;
  for (int t = 0; t <= k; ++t) {
    std::vector<int> cur;
    detail::enumerate_multi_indices(d, t, cur, out);
  }
  return out;
}

/// D^α f(y) by tensor products of fourth-order central differences with step h.
template <class F>
double finite_difference(F&& f, std::span<const double> y, const std::vector<int>& alpha, double h) {
  const int d = static_cast<int>(y.size());
  std::vector<const detail::Stencil*> st(static_cast<std::size_t>(d));
  double scale = 1.0;
  for (int i = 0; i < d; ++i) {
    st[static_cast<std::size_t>(i)] = &detail::central_stencil(alpha[static_cast<std::size_t>(i)]);
    scale *= std::pow(h, -alpha[static_cast<std::size_t>(i)]);
  }
  Point p(y.begin(), y.end());
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  double acc = 0.0;
  while (true) {
    double c = 1.0;
    for (int i = 0; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      c *= st[ui]->coeffs[idx[ui]];
      p[ui] = y[ui] + st[ui]->offsets[idx[ui]] * h;
    }
    acc += c * f(std::span<const double>(p));
    int i = 0;
    for (; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      if (++idx[ui] < st[ui]->offsets.size()) break;
      idx[ui] = 0;
    }
    if (i == d) break;
  }
  return acc * scale;
}

/// Grid points of a uniform tensor grid on the bounding box of the ball, masked to
/// the closed ball.
inline std::vector<Point> ball_grid(const Ball& region, int points_per_axis) {
  const int d = static_cast<int>(region.center.size());
  const int n = points_per_axis;
  const double spacing = 2.0 * region.radius / (n - 1);
  std::vector<Point> out;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Point p(static_cast<std::size_t>(d));
  while (true) {
    for (int i = 0; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      p[ui] = region.center[ui] - region.radius + idx[ui] * spacing;
    }
    if (distance(p, region.center) <= region.radius * (1.0 + 1e-12)) out.push_back(p);
    int i = 0;
    for (; i < d; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < n) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i == d) break;
  }
  return out;
}

inline double grid_spacing(const Ball& region, const GridSpec& grid) {
  return 2.0 * region.radius / (grid.points_per_axis - 1);
}

inline double derivative_step(const Ball& region, const GridSpec& grid) {
  const double spacing = grid_spacing(region, grid);
  const double h = grid.step > 0.0 ? grid.step : 0.5 * spacing;
  if (spacing < h)
    throw domain_error(detail::concat("ck_norm: grid spacing ", spacing, " is below the derivative step ", h));
  return h;
}

/// Sampled ‖f‖_{C^k}: Σ_{|α| <= k} max over grid points of |D^α f|.
inline double ck_norm(const ScalarField& f, const Ball& region, int k, const GridSpec& grid = {}) {
  if (k < 0 || k > 4) throw domain_error("ck_norm: k must lie in [0, 4]");
  if (k > f.smoothness()) throw precondition_error("ck_norm: k exceeds the declared smoothness of the field");
  if (grid.points_per_axis < 33) throw domain_error("ck_norm: need at least 33 points per axis");
  require_dim(region.center, f.dim(), "ck_norm");
  const double h = derivative_step(region, grid);
  const auto pts = ball_grid(region, grid.points_per_axis);
  double total = 0.0;
  for (const auto& alpha : multi_indices(f.dim(), k)) {
    double sup = 0.0;
    for (const auto& p : pts) sup = std::max(sup, std::abs(finite_difference(f, p, alpha, h)));
    total += sup;
  }
  return total;
}

}  // namespace fraclab
