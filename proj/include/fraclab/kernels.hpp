#pragma once

#include <cmath>
#include <numbers>
#include <span>

#include "fraclab/core.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

/// |x - y|^beta. At x = y this is 0 for beta > 0, 1 for beta = 0, and a
/// singularity_error for beta < 0.
inline double riesz_eval(double beta, std::span<const double> x, std::span<const double> y) {
  const double r = distance(x, y);
  if (r == 0.0) {
    if (beta < 0.0) throw singularity_error("riesz_eval: negative exponent evaluated at the kernel center");
    return beta > 0.0 ? 0.0 : 1.0;
  }
  return std::pow(r, beta);
}

/// Constant c_{d,s} of the principal-value form
///   (-Δ)^s u(x) = c_{d,s} PV ∫ (u(x) - u(y)) / |x - y|^{d+2s} dy
/// matched to the multiplier (2π|ξ|)^{2s}: c = s 4^s Γ(d/2 + s) / (π^{d/2} Γ(1 - s)).
inline double pv_constant(const FracParams& p) {
  const double s = p.s(), d = p.d();
  return s * std::pow(4.0, s) * std::tgamma(0.5 * d + s) / (std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(1.0 - s));
}

/// c_{d,α} with  F(|x|^{-α})(ξ) = (2π)^α / c_{d,α} · |ξ|^{α-d},  F φ(ξ) = ∫ φ(x) e^{-2πi<x,ξ>} dx.
inline double fourier_constant(const FracParams& p, double alpha) {
  const double d = p.d();
  if (!(alpha > 0.0 && alpha < d))
    throw domain_error(detail::concat("fourier_constant: alpha must lie in (0, d), got ", alpha));
  return std::pow(2.0, alpha) * std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(0.5 * alpha) /
         std::tgamma(0.5 * (d - alpha));
}

/// Constant of the representation φ(x) = C ∫ |y - x|^{2s-d} (-Δ)^s φ(y) dy,
/// C = c_{d,d-2s} / (2π)^d. Its inverse is the factor in (-Δ)^s (K_{2s-d} * g) = g / C.
inline double representation_constant(const FracParams& p) {
  p.require_riesz();
  return fourier_constant(p, p.d() - 2.0 * p.s()) / std::pow(2.0 * std::numbers::pi, p.d());
}

/// ∂/∂x_i of |x - y|^{2s-d}:  (2s - d)(x_i - y_i)|x - y|^{2s-d-2}.
inline double kernel_derivative(const FracParams& p, std::span<const double> x, int i, std::span<const double> y) {
  require_dim(x, p.d(), "kernel_derivative");
  require_dim(y, p.d(), "kernel_derivative");
  if (i < 0 || i >= p.d()) throw domain_error("kernel_derivative: axis out of range");
  const double r = distance(x, y);
  if (r == 0.0) throw singularity_error("kernel_derivative: y coincides with the kernel center");
  const double beta = p.kernel_exponent();
  const auto ui = static_cast<std::size_t>(i);
  return beta * (x[ui] - y[ui]) * std::pow(r, beta - 2.0);
}

/// Coefficient c_m with Δ^m |x - y|^{2s-d} = c_m |x - y|^{2s-d-2m}.
///
/// Each Laplacian maps |z|^β to β(β + d - 2)|z|^{β-2}; with β_j = 2s - d - 2j that factor
/// is 2(s - 1 - j)(2s - d - 2j), so c_m is the product over j = 0..m-1.
inline double laplacian_power_coeff(const FracParams& p, int m) {
  if (m < 0) throw domain_error("laplacian_power_coeff: m must be nonnegative");
  double c = 1.0;
  for (int j = 0; j < m; ++j) c *= 2.0 * (p.s() - 1.0 - j) * (2.0 * p.s() - p.d() - 2.0 * j);
  return c;
}

/// Partial sum Σ_{m=0}^{M} (-t)^m / m! · |x - y|^{2s-d-2m} of the series for
/// |x - y|^{2s-d} exp(-t |x - y|^{-2}).
inline double exp_kernel_series(const FracParams& p, std::span<const double> x, double t, std::span<const double> y, int M) {
  if (M < 0) throw domain_error("exp_kernel_series: M must be nonnegative");
  if (t < 0.0) throw domain_error("exp_kernel_series: t must be nonnegative");
  const double r = distance(x, y);
  if (r == 0.0) throw singularity_error("exp_kernel_series: y coincides with the kernel center");
  const double q = -t / (r * r);
  double term = std::pow(r, p.kernel_exponent());
  double acc = term;
  for (int m = 1; m <= M; ++m) {
    term *= q / m;
    acc += term;
  }
  return acc;
}

/// M-test majorant of the truncation error: t^{M+1}/(M+1)! · |x - y|^{2s-d-2(M+1)}.
inline double exp_kernel_series_tail(const FracParams& p, std::span<const double> x, double t, std::span<const double> y, int M) {
  const double r = distance(x, y);
  if (r == 0.0) throw singularity_error("exp_kernel_series_tail: y coincides with the kernel center");
  return std::exp((M + 1) * std::log(t) - std::lgamma(M + 2.0) + (p.kernel_exponent() - 2.0 * (M + 1)) * std::log(r));
}

/// ∫_0^∞ t^α |x - y|^{2s-d} exp(-t |x - y|^{-2}) dt by quadrature; the closed form is
/// Γ(α + 1) |x - y|^{2s-d+2α+2}.
///
/// The half line is split at t* = |x - y|^2. On [0, t*] the substitution t = t* v^{1/(α+1)}
/// absorbs t^α and the v-panels are graded toward 0; [t*, ∞) is covered by geometric
/// panels. Panel counts double until the relative change drops below the tolerance.
inline QuadResult gamma_shift(const FracParams& p, std::span<const double> x, double alpha, std::span<const double> y,
                              const QuadratureSpec& quad) {
  if (!(alpha > -1.0)) throw domain_error("gamma_shift: alpha must exceed -1");
  const double r = distance(x, y);
  if (r == 0.0) throw singularity_error("gamma_shift: y coincides with the kernel center");
  const double r2 = r * r;
  const double kern = std::pow(r, p.kernel_exponent());
  const double tstar = r2;
  const double power = 1.0 / (alpha + 1.0);
  const GaussRule& rule = gauss_legendre(std::min(quad.radial_order, 128));

  auto evaluate = [&](int m) {
    // [0, t*]
    std::vector<double> breaks{0.0};
    for (int j = 8 * m; j >= 1; --j) breaks.push_back(std::ldexp(1.0, -j));
    breaks.push_back(1.0);
    const double near = std::pow(tstar, alpha + 1.0) / (alpha + 1.0) *
                        gauss_panels([&](double v) { return std::exp(-tstar * std::pow(v, power) / r2); }, breaks, rule);
    // [t*, ∞): the integrand is below e^{-256} t*^α past 256 t*
    std::vector<double> far_breaks;
    for (int k = 0; k <= 8 * m; ++k) far_breaks.push_back(tstar * std::exp2(static_cast<double>(k) / m));
    const double far = gauss_panels([&](double t) { return std::pow(t, alpha) * std::exp(-t / r2); }, far_breaks, rule);
    return kern * (near + far);
  };

  double prev = evaluate(1), err = std::abs(prev);
  for (int m = 2, it = 0; it <= quad.max_refinements + 4; m *= 2, ++it) {
    const double cur = evaluate(m);
    err = std::abs(cur - prev);
    prev = cur;
    if (err <= quad.tolerance * std::abs(cur)) return {cur, err};
  }
  throw quadrature_error("gamma_shift: panel doubling did not converge", prev, err);
}

}  // namespace fraclab
