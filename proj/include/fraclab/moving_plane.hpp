#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/fraclap.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

/// Reflection R_a through the hyperplane H_a = {z : <z, a> = <a, a>}.
class ReflectionMap {
 public:
  explicit ReflectionMap(Point a) : a_(std::move(a)) {
    if (a_.empty()) throw domain_error("ReflectionMap: empty point");
    aa_ = dot(a_, a_);
    if (!(std::sqrt(aa_) >= 1e-12)) throw domain_error("ReflectionMap: a must be nonzero (|a| >= 1e-12)");
  }

  int dim() const { return static_cast<int>(a_.size()); }
  const Point& a() const { return a_; }

  /// x_r = 2a + x - (2<a, x>/<a, a>) a
  Point operator()(std::span<const double> x) const {
    require_dim(x, dim(), "ReflectionMap");
    const double t = 2.0 * dot(a_, x) / aa_;
    Point y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 2.0 * a_[i] + x[i] - t * a_[i];
    return y;
  }

  /// I - 2 a aᵀ / <a, a>
  Eigen::MatrixXd linear_part() const {
    const Eigen::Map<const Eigen::VectorXd> v(a_.data(), dim());
    return Eigen::MatrixXd::Identity(dim(), dim()) - 2.0 * v * v.transpose() / aa_;
  }

 private:
  Point a_;
  double aa_ = 0.0;
};

inline Point reflect_point(const ReflectionMap& map, std::span<const double> x) { return map(x); }

inline double jacobian_sign(const ReflectionMap& map) { return map.linear_part().determinant(); }

/// u ∘ R_a, with support center and features carried through the reflection.
inline ScalarField reflect_field(const ReflectionMap& map, const ScalarField& u) {
  if (u.dim() != map.dim()) throw domain_error("reflect_field: dimension mismatch");
  Support sp = u.support();
  sp.center = map(sp.center);
  auto feats = u.features();
  for (auto& f : feats) f.center = map(f.center);
  return ScalarField(
      u.dim(), [u, map](std::span<const double> y) { return u(map(y)); }, std::move(sp), u.smoothness(),
      std::move(feats));
}

struct CommutationResult {
  double residual = 0.0;
  double lhs = 0.0;  // (-Δ)^s (u ∘ R)(x)
  double rhs = 0.0;  // ((-Δ)^s u)(R x)
  double error_estimate = 0.0;
};

/// |(-Δ)^s(u ∘ R_a)(x) - ((-Δ)^s u)(R_a x)|.
///
/// The right side runs on a node layout shifted by half a panel and half an angular
/// step, so the two sides are independent quadratures rather than mirror images.
inline CommutationResult commutation_residual(const ScalarField& u, const ReflectionMap& map, std::span<const double> x,
                                              const FracParams& p, const QuadratureSpec& quad = {}) {
  QuadratureSpec shifted = quad;
  shifted.panel_phase += 0.5;
  shifted.angular_phase += 0.5;
  const PvResult l = pv_eval(reflect_field(map, u), x, p, quad);
  const PvResult r = pv_eval(u, map(x), p, shifted);
  return {std::abs(l.value - r.value), l.value, r.value, l.error_estimate + r.error_estimate};
}

}  // namespace fraclab
