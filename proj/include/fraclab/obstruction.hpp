#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/fraclap.hpp"
#include "fraclab/moving_plane.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/sharmonic.hpp"

namespace fraclab {

/// Reaction term f. declared_in_J is the caller's assertion that f is not constant on
/// any nonempty open interval; it is recorded, not checked.
class ReactionFunction {
 public:
  using Evaluator = std::function<double(double)>;

  ReactionFunction(Evaluator fn, bool declared_in_J, std::string label = "custom")
      : fn_(std::move(fn)), in_J_(declared_in_J), label_(std::move(label)) {
    f0_ = fn_(0.0);
  }

  static ReactionFunction affine(double a, double b) {
    return ReactionFunction([a, b](double t) { return a + b * t; }, b != 0.0,
                            detail::concat("affine:", a, ",", b));
  }

  /// Piecewise-linear interpolation of (t, f) samples sorted by t; constant extension.
  static ReactionFunction table(std::vector<std::pair<double, double>> samples, bool declared_in_J = true) {
    if (samples.empty()) throw domain_error("ReactionFunction::table: no samples");
    for (std::size_t i = 1; i < samples.size(); ++i)
      if (!(samples[i].first > samples[i - 1].first))
        throw domain_error("ReactionFunction::table: abscissae must increase strictly");
    return ReactionFunction(
        [samples](double t) {
          if (t <= samples.front().first) return samples.front().second;
          if (t >= samples.back().first) return samples.back().second;
          std::size_t i = 1;
          while (samples[i].first < t) ++i;
          const auto& [t0, f0] = samples[i - 1];
          const auto& [t1, f1] = samples[i];
          return f0 + (f1 - f0) * (t - t0) / (t1 - t0);
        },
        declared_in_J, "table");
  }

  double operator()(double t) const { return fn_(t); }
  double f0() const { return f0_; }
  bool declared_in_J() const { return in_J_; }
  const std::string& label() const { return label_; }

 private:
  Evaluator fn_;
  bool in_J_;
  double f0_;
  std::string label_;
};

namespace detail {
inline void require_obstruction_point(std::span<const double> x0, const char* what) {
  const double r = norm(x0);
  if (!(r > 1e-12)) throw domain_error(concat(what, ": x0 = 0 is excluded"));
  if (!(r < 1.0)) throw domain_error(concat(what, ": x0 must lie in the open unit ball"));
}
}  // namespace detail

/// v = u - u ∘ R_{x0/2}.
inline ScalarField difference_field(const ScalarField& u, std::span<const double> x0) {
  require_dim(x0, u.dim(), "difference_field");
  detail::require_obstruction_point(x0, "difference_field");
  Point a(x0.begin(), x0.end());
  for (double& v : a) v *= 0.5;
  return fields::difference(u, reflect_field(ReflectionMap(a), u));
}

struct ObstructionOptions {
  double reg = 1e-10;
  FitOptions fit{};
  int k = 2;
};

struct ObstructionReport {
  Point x0;
  double r0 = 0.0, r1 = 0.0;
  double fit_error_c2 = std::numeric_limits<double>::quiet_NaN();
  double fit_error_c0 = std::numeric_limits<double>::quiet_NaN();
  double bound_value = std::numeric_limits<double>::quiet_NaN();            // c_pv (taylor + tail) ε
  double rigorous_bound_value = std::numeric_limits<double>::quiet_NaN();   // with sphere measures kept
  double measured_pv = std::numeric_limits<double>::quiet_NaN();
  double measured_error = std::numeric_limits<double>::quiet_NaN();
  double i1 = std::numeric_limits<double>::quiet_NaN();
  double i2 = std::numeric_limits<double>::quiet_NaN();
  double g_at_x0 = std::numeric_limits<double>::quiet_NaN();
  double condition_estimate = std::numeric_limits<double>::quiet_NaN();
  int centers_used = 0;
  double u_x0 = 0.0, u_0 = 0.0;
  double necessary_residual = 0.0;  // f(u(x0)) - f(u(0))
  bool declared_in_J = false;
  std::string status = "ok";
  std::vector<std::string> warnings;

  bool completed() const { return status == "ok"; }
  bool bound_holds() const { return completed() && std::abs(measured_pv) <= bound_value + measured_error; }
};

/// The chain at one x0: fit v = u - u∘R_{x0/2} on B_{r0}(x0/2) in C², cut the remainder
/// h = (v - K g)·1_{B_{r1}(x0)}, evaluate (-Δ)^s h(x0) and its bound, and report
/// f(u(x0)) - f(u(0)). A failing fit or quadrature ends the chain with the partial report.
inline ObstructionReport obstruction_chain(const ScalarField& u, const ReactionFunction& f, std::span<const double> x0,
                                           int n_centers, const FracParams& p, const QuadratureSpec& quad = {},
                                           const ObstructionOptions& opt = {}) {
  p.require_riesz();
  require_dim(x0, p.d(), "obstruction_chain");
  detail::require_obstruction_point(x0, "obstruction_chain");
  if (u.smoothness() < 2) throw precondition_error("obstruction_chain: candidate must be C^2");

  ObstructionReport rep;
  rep.x0.assign(x0.begin(), x0.end());
  const double len = norm(x0);
  rep.r0 = 1.0 - 0.5 * len;
  rep.r1 = 1.0 - len;
  rep.declared_in_J = f.declared_in_J();
  const Point origin(x0.size(), 0.0);
  rep.u_x0 = u(x0);
  rep.u_0 = u(origin);
  rep.necessary_residual = f(rep.u_x0) - f(rep.u_0);

  Point half(x0.begin(), x0.end());
  for (double& v : half) v *= 0.5;
  const ScalarField v = difference_field(u, x0);

  std::optional<FitReport> fit;
  try {
    fit.emplace(fit_dictionary(v, Ball{half, rep.r0}, opt.k, n_centers, p, opt.reg, quad, opt.fit));
  } catch (const error& e) {
    rep.status = detail::concat("fit_failed: ", e.what());
    return rep;
  }
  rep.fit_error_c2 = fit->achieved_ck_error;
  rep.fit_error_c0 = fit->achieved_c0_error;
  rep.condition_estimate = fit->condition_estimate;
  rep.centers_used = fit->centers_used;
  rep.warnings = fit->warnings;

  rep.g_at_x0 = fit->potential.density(x0);
  if (rep.g_at_x0 != 0.0) {
    rep.status = "support_violation: g(x0) != 0";
    return rep;
  }

  const double eps = rep.fit_error_c2;
  const double c = pv_constant(p);
  rep.bound_value = c * (taylor_bound(eps, rep.r1, p) + tail_bound(eps, rep.r1, p));
  rep.rigorous_bound_value = c * (rigorous_taylor_bound(eps, rep.r1, p) + rigorous_tail_bound(eps, rep.r1, p));

  try {
    const ScalarField h =
        fields::restricted(fields::difference(v, fit->potential.potential_field(quad)), rep.x0, rep.r1);
    const PvResult r = pv_eval(h, x0, p, quad);
    rep.measured_pv = r.value;
    rep.measured_error = r.error_estimate;
    rep.i1 = r.i1_estimate;
    rep.i2 = r.i2_estimate;
  } catch (const error& e) {
    rep.status = detail::concat("quadrature_failed: ", e.what());
  }
  return rep;
}

struct ScanEntry {
  Point x0;
  double residual = 0.0;
};

struct ScanResult {
  std::vector<ScanEntry> entries;
  double max_abs_residual = 0.0;
};

/// f(u(x0)) - f(u(0)) over the grid.
inline ScanResult necessary_condition_scan(const ScalarField& u, const ReactionFunction& f,
                                           const std::vector<Point>& grid) {
  ScanResult out;
  out.entries.resize(grid.size());
  for (const auto& x0 : grid) {
    require_dim(x0, u.dim(), "necessary_condition_scan");
    detail::require_obstruction_point(x0, "necessary_condition_scan");
  }
  const double f0 = f(u(Point(static_cast<std::size_t>(u.dim()), 0.0)));
  parallel_for(grid.size(), [&](std::size_t i) { out.entries[i] = {grid[i], f(u(grid[i])) - f0}; });
  for (const auto& e : out.entries) out.max_abs_residual = std::max(out.max_abs_residual, std::abs(e.residual));
  return out;
}

/// x0 = (k / (n + 1)) e₁, k = 1..n.
inline std::vector<Point> radial_scan_points(int d, int n) {
  std::vector<Point> out;
  for (int k = 1; k <= n; ++k) {
    Point x(static_cast<std::size_t>(d), 0.0);
    x[0] = static_cast<double>(k) / (n + 1);
    out.push_back(x);
  }
  return out;
}

/// (T(0), T(0.8 e₁)) with T = (-Δ)^s (c·1_{B₁}).
inline std::pair<PvResult, PvResult> constant_exclusion_check(double c, const FracParams& p,
                                                              const QuadratureSpec& quad = {}) {
  if (c == 0.0) throw domain_error("constant_exclusion_check: c must be nonzero");
  const ScalarField u = fields::indicator(p.d(), c);
  Point x(static_cast<std::size_t>(p.d()), 0.0);
  const PvResult t0 = pv_eval(u, x, p, quad);
  x[0] = 0.8;
  const PvResult t1 = pv_eval(u, x, p, quad);
  return {t0, t1};
}

}  // namespace fraclab
