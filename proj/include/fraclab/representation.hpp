#pragma once

#include <cmath>
#include <span>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/fraclap.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

enum class InnerOperator { Spectral, PrincipalValue };

struct RepresentationOptions {
  InnerOperator inner = InnerOperator::Spectral;
  PeriodicGrid grid{0, 0, 0.0};  // spectral route; dim 0 selects a default box for d
  double pv_radius = 30.0;  // PV route: asymptotic (-Δ)^s φ ≈ -c_pv M |y|^{-d-2s} beyond this
  double min_radius = 1e-10;
};

struct RepresentationResult {
  double residual = 0.0;  // |φ(x) - C ∫ |y - x|^{2s-d} (-Δ)^s φ(y) dy|
  double phi = 0.0;
  double reconstructed = 0.0;
  double error_estimate = 0.0;
  bool aliasing_warning = false;
};

inline PeriodicGrid default_representation_grid(int d) {
  if (d == 1) return {1, 65536, 2048.0};
  if (d == 2) return {2, 512, 32.0};
  return {d, 64, 16.0};
}

/// Residual of φ(x) = C ∫ |y - x|^{2s-d} (-Δ)^s φ(y) dy, C = representation_constant.
///
/// The outer integral runs in polar coordinates about x out to a radius R, with the
/// far field replaced by the leading asymptote -c_pv (∫φ) |y|^{-d-2s}.
inline RepresentationResult representation_check(const ScalarField& phi, std::span<const double> x, const FracParams& p,
                                                 const QuadratureSpec& quad = {}, RepresentationOptions opt = {}) {
  p.require_riesz();
  quad.validate();
  require_dim(x, p.d(), "representation_check");
  if (phi.support().kind != Support::Kind::RapidlyDecaying && !phi.support().compact())
    throw domain_error("representation_check: phi must be rapidly decaying");
  const int d = p.d();
  const double s = p.s();

  RepresentationResult out;
  out.phi = phi(x);

  SpectralResult spec;
  double R = opt.pv_radius;
  double mass = 0.0;
  QuadratureSpec inner_quad = quad;
  inner_quad.estimate_error = false;
  if (opt.inner == InnerOperator::Spectral) {
    if (opt.grid.dim != d) opt.grid = default_representation_grid(d);
    const auto samples = sample_periodic(phi, opt.grid);
    for (double v : samples) mass += v;
    mass *= std::pow(opt.grid.spacing(), d);
    spec = spectral_eval(samples, opt.grid, s);
    out.aliasing_warning = spec.aliasing_warning;
    R = 0.25 * opt.grid.length;
  } else {
    // ∫φ on the same kind of polar layout, about the support center
    const Point& c = phi.support().center;
    const SphereRule S = sphere_rule(d, quad.angular_nodes);
    const GaussRule& rule = gauss_legendre(quad.radial_order);
    std::vector<double> lin;
    for (int k = 0; k <= 32; ++k) lin.push_back(phi.support().outer * k / 32.0);
    for (std::size_t k = 0; k < S.size(); ++k) {
      const auto w = S.direction(k);
      Point y(c.size());
      mass += S.weights[k] * gauss_panels(
                                 [&](double r) {
                                   for (std::size_t i = 0; i < y.size(); ++i) y[i] = c[i] + r * w[i];
                                   return phi(y) * std::pow(r, d - 1);
                                 },
                                 lin, rule);
    }
  }
  auto inner = [&](std::span<const double> y) {
    return opt.inner == InnerOperator::Spectral ? spec.local(y) : pv_eval(phi, y, p, inner_quad).value;
  };

  auto integrate = [&](const QuadratureSpec& q) {
    const SphereRule S = sphere_rule(d, q.angular_nodes, q.angular_phase);
    const GaussRule& rule = gauss_legendre(q.radial_order);
    const auto breaks = geometric_breaks(opt.min_radius, R, 1.0, q.panel_ratio(), q.panel_phase);
    const double two_s = 2.0 * s;
    double acc = 0.0;
    Point y(x.size());
    for (std::size_t k = 0; k < S.size(); ++k) {
      const auto w = S.direction(k);
      acc += S.weights[k] * gauss_panels(
                                [&](double r) {
                                  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + r * w[i];
                                  return std::pow(r, two_s - 1.0) * inner(y);
                                },
                                breaks, rule);
    }
    const double measure = sphere_measure(d);
    acc += inner(x) * measure * std::pow(opt.min_radius, two_s) / two_s;
    acc += -pv_constant(p) * mass * measure * std::pow(R, -d) / d;
    return representation_constant(p) * acc;
  };

  const double v0 = integrate(quad);
  out.reconstructed = v0;
  if (quad.estimate_error) {
    const double v1 = integrate(quad.refined());
    out.error_estimate = std::abs(v1 - v0);
    out.reconstructed = v1;
  }
  out.residual = std::abs(out.phi - out.reconstructed);
  return out;
}

}  // namespace fraclab
