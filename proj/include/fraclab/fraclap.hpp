#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/potential.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/rays.hpp"

namespace fraclab {

struct PvResult {
  double value = 0.0;
  double i1_estimate = 0.0;  // near ball |y - x| < ρ
  double i2_estimate = 0.0;  // complement
  double error_estimate = 0.0;
  double rho = 0.0;
};

namespace detail {

inline PvResult pv_single(const ScalarField& u, std::span<const double> x, const FracParams& p, const QuadratureSpec& q) {
  const int d = p.d();
  const double s = p.s();
  const Support& sp = u.support();

  const double fd = feature_distance(u, x);
  if (fd == 0.0) throw precondition_error("pv_eval: x lies on a declared non-smooth locus of the field");
  const double rho = std::min(q.rho, 0.5 * fd);

  double R = std::numeric_limits<double>::infinity();
  double tail = 0.0;
  if (q.outer_radius > 0.0) {
    R = q.outer_radius;
  } else if (sp.kind == Support::Kind::Global) {
    if (!sp.has_decay)
      throw domain_error("pv_eval: the tail integral needs compact support or decay metadata on the field");
    R = q.far_factor * (distance(x, sp.center) + sp.outer + 1.0);
  }

  const SphereRule S = sphere_rule(d, q.angular_nodes, q.angular_phase);
  const GaussRule& rule = gauss_legendre(q.radial_order);
  const double ux = u(x);
  const double two_s = 2.0 * s;

  // Near field. Pairing ω with -ω removes the gradient term, so the integrand
  // A(r) r^{-1-2s} is O(r^{1-2s}) and integrable at 0.
  Point y(x.size());
  auto spherical_difference = [&](double r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const auto w = S.direction(k);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + r * w[i];
      acc += S.weights[k] * (ux - u(y));
    }
    return acc;
  };
  const double rmin = rho * std::pow(10.0, -q.near_decades);
  const auto near_breaks = geometric_breaks(rmin, rho, rho, q.panel_ratio(), q.panel_phase);
  double i1 = gauss_panels([&](double r) { return spherical_difference(r) * std::pow(r, -1.0 - two_s); }, near_breaks, rule);
  // A(r) ≈ A(rmin) (r / rmin)^2 on the innermost ball
  i1 += spherical_difference(rmin) * std::pow(rmin, -two_s) / (2.0 - two_s);

  // Far field
  double far = 0.0;
  const SphereRule F = adapted_sphere_rule(u, x, q.angular_nodes, q.angular_phase);
  for (std::size_t k = 0; k < F.size(); ++k) {
    const auto w = F.direction(k);
    const RayLayout layout = ray_layout(u, x, w, rho, R, rho, q);
    far += F.weights[k] * ray_integral(u, x, w, layout, rule, [&](double r) { return std::pow(r, -1.0 - two_s); });
  }
  const double measure = sphere_measure(d);
  double i2 = ux * measure * std::pow(rho, -two_s) / two_s - far;
  if (std::isfinite(R) && sp.kind == Support::Kind::Global && q.outer_radius == 0.0) {
    // u(y) ≈ A |y - c|^e past R
    const double e = sp.decay_exponent;
    if (!(two_s - e > 0.0)) throw domain_error("pv_eval: declared decay too slow for a convergent tail");
    tail = sp.decay_amplitude * measure * std::pow(R, e - two_s) / (two_s - e);
    i2 -= tail;
  }

  const double c = pv_constant(p);
  return {c * (i1 + i2), i1, i2, 0.0, rho};
}

}  // namespace detail

/// (-Δ)^s u(x) by the principal-value integral, split at radius ρ into the near ball
/// (I₁) and its complement (I₂).
///
/// ρ = min(quad.rho, half the distance from x to the nearest declared feature). The
/// error estimate is the change under QuadratureSpec::refined(), repeated up to
/// quad.max_refinements times while it exceeds quad.tolerance (relative).
inline PvResult pv_eval(const ScalarField& u, std::span<const double> x, const FracParams& p,
                        const QuadratureSpec& quad = {}) {
  quad.validate();
  require_dim(x, p.d(), "pv_eval");
  if (u.dim() != p.d()) throw domain_error("pv_eval: field dimension differs from params");
  if (u.smoothness() < 2 && u.features().empty())
    throw precondition_error("pv_eval: field is below C^2 and declares no non-smooth loci to avoid");
  PvResult r = detail::pv_single(u, x, p, quad);
  if (!quad.estimate_error) return r;
  QuadratureSpec q = quad;
  for (int it = 0; it < std::max(1, quad.max_refinements); ++it) {
    q = q.refined();
    PvResult next = detail::pv_single(u, x, p, q);
    next.error_estimate = std::abs(next.value - r.value);
    r = next;
    if (r.error_estimate <= quad.tolerance * std::abs(r.value)) break;
  }
  return r;
}

/// (K_{2s-d} * g)(x) for a compactly supported field, in polar coordinates about x.
inline QuadResult riesz_potential_apply(const ScalarField& g, std::span<const double> x, const FracParams& p,
                                        const QuadratureSpec& quad = {}) {
  p.require_riesz();
  quad.validate();
  require_dim(x, p.d(), "riesz_potential_apply");
  if (!g.support().compact() && g.support().kind != Support::Kind::RapidlyDecaying)
    throw domain_error("riesz_potential_apply: density must be compactly supported");
  auto once = [&](const QuadratureSpec& q) {
    const double two_s = 2.0 * p.s();
    const SphereRule S = detail::adapted_sphere_rule(g, x, q.angular_nodes, q.angular_phase);
    const GaussRule& rule = gauss_legendre(q.radial_order);
    const double fd = std::min(detail::feature_distance(g, x), distance(x, g.support().center) + g.support().outer);
    const double rmin = std::max(fd, 1e-300) * std::pow(10.0, -q.near_decades - 6);
    const double hi = distance(x, g.support().center) + g.support().outer;
    double acc = 0.0;
    for (std::size_t k = 0; k < S.size(); ++k) {
      const auto w = S.direction(k);
      const auto layout = detail::ray_layout(g, x, w, rmin, hi, std::max(fd, rmin), q);
      acc += S.weights[k] *
             detail::ray_integral(g, x, w, layout, rule, [&](double r) { return std::pow(r, two_s - 1.0); });
    }
    // innermost ball: g ≈ g(x)
    return acc + g(x) * sphere_measure(p.d()) * std::pow(rmin, two_s) / two_s;
  };
  const double v0 = once(quad);
  if (!quad.estimate_error) return {v0, 0.0};
  const double v1 = once(quad.refined());
  return {v1, std::abs(v1 - v0)};
}

inline QuadResult riesz_potential_apply(const DictionaryPotential& g, std::span<const double> x,
                                        const QuadratureSpec& quad = {}) {
  return g.potential(x, quad);
}

/// ((-Δ)^s (K_{2s-d} * g)(x) by pv_eval, g(x) / C) with C = representation_constant.
struct IdentityPair {
  double lhs = 0.0;
  double rhs = 0.0;
  double error_estimate = 0.0;
};

inline IdentityPair fourier_identity_eval(const DictionaryPotential& g, std::span<const double> x,
                                          const QuadratureSpec& quad = {}) {
  const FracParams& p = g.params();
  if (g.size() == 0) return {};
  bool any = false;
  for (double c : g.coefficients()) any = any || c != 0.0;
  if (!any) return {};
  const PvResult r = pv_eval(g.potential_field(quad), x, p, quad);
  return {r.value, g.density(x) / representation_constant(p), r.error_estimate};
}

/// Bound on |I₁| for h vanishing outside B_{r1}(x): ‖D²h‖ r1^{2(1-s)} / (2(1-s)).
inline double taylor_bound(double h_norm_d2, double r1, const FracParams& p) {
  if (!(r1 > 0.0) || h_norm_d2 < 0.0) throw domain_error("taylor_bound: need r1 > 0 and a nonnegative norm");
  const double e = 2.0 * (1.0 - p.s());
  return h_norm_d2 * std::pow(r1, e) / e;
}

/// Bound on |I₂|: ‖h‖ r1^{-2s} / (2s).
inline double tail_bound(double h_norm_sup, double r1, const FracParams& p) {
  if (!(r1 > 0.0) || h_norm_sup < 0.0) throw domain_error("tail_bound: need r1 > 0 and a nonnegative norm");
  return h_norm_sup * std::pow(r1, -2.0 * p.s()) / (2.0 * p.s());
}

/// The same two bounds with the sphere measure and the Taylor ½ kept. ‖D²h‖ is the
/// sum over |α| = 2 of sup |D^α h|, which bounds the Hessian operator norm up to a
/// factor 2 for d >= 2 (mixed partials appear twice in the Hessian).
inline double rigorous_taylor_bound(double h_norm_d2, double r1, const FracParams& p) {
  const double hessian = p.d() >= 2 ? 2.0 : 1.0;
  return sphere_measure(p.d()) * 0.5 * hessian * taylor_bound(h_norm_d2, r1, p);
}
inline double rigorous_tail_bound(double h_norm_sup, double r1, const FracParams& p) {
  return sphere_measure(p.d()) * tail_bound(h_norm_sup, r1, p);
}

/// c_G with (-Δ)^s [c_G (1 - |x|²)₊^s] = 1 in B₁, calibrated by pv_eval at x = 0.
inline double getoor_constant(const FracParams& p, const QuadratureSpec& quad = {}) {
  const Point origin(static_cast<std::size_t>(p.d()), 0.0);
  const PvResult r = pv_eval(fields::getoor_profile(p.d(), p.s(), 1.0), origin, p, quad);
  if (!(r.value > 0.0) || r.error_estimate > std::max(quad.tolerance, 1e-6) * r.value * 1e3)
    throw quadrature_error("getoor_constant: calibration did not reach tolerance", r.value, r.error_estimate);
  return 1.0 / r.value;
}

/// Γ(d/2) / (4^s Γ(1+s) Γ(d/2+s)), the closed form for the same constant.
inline double getoor_constant_closed_form(const FracParams& p) {
  const double s = p.s(), h = 0.5 * p.d();
  return std::tgamma(h) / (std::pow(4.0, s) * std::tgamma(1.0 + s) * std::tgamma(h + s));
}

}  // namespace fraclab
