#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/fraclap.hpp"
#include "fraclab/parallel.hpp"
#include "fraclab/potential.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

/// f_m = K_{2s-d} * (ξ ζ_m(· - x)) for x ∈ U, with ξ = cutoff_at(U, x).
///
/// Once B_{1/m}(x) sits in the plateau of ξ the density is a single bump and the
/// potential comes from convolve_bump_potential. For smaller m the product density is
/// integrated directly, so the whole sequence m = 1, 2, ... is defined.
inline ScalarField mollified_kernel_sequence(std::span<const double> x, double m, const FracParams& p,
                                             const QuadratureSpec& quad = {},
                                             const AnnulusGeometry& U = AnnulusGeometry{}) {
  p.require_riesz();
  require_dim(x, p.d(), "mollified_kernel_sequence");
  const AnnulusGeometry geom = U.center.empty() ? AnnulusGeometry::unit(p.d()) : U;
  const Cutoff xi = cutoff_at(geom, x);
  const Mollifier zeta(p.d(), m);
  const Point c(x.begin(), x.end());
  if (zeta.support_radius() <= xi.plateau()) {
    const DictionaryPotential g(p, geom, {c}, {1.0}, zeta.support_radius());
    return g.potential_field(quad);
  }
  const double radius = std::min(zeta.support_radius(), xi.outer());
  const ScalarField density(
      p.d(),
      [xi, zeta, c](std::span<const double> z) {
        Point w(z.begin(), z.end());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c[i];
        return xi(z) * zeta(w);
      },
      Support::ball(c, radius), kSmooth);
  QuadratureSpec q = quad;
  q.estimate_error = false;
  return ScalarField(
      p.d(), [density, p, q](std::span<const double> y) { return riesz_potential_apply(density, y, p, q).value; },
      Support::power_law(c, radius, p.kernel_exponent(), 1.0), kSmooth, {Feature{c, radius, false}});
}

/// y ↦ |x - y|^{2s-d}.
inline ScalarField riesz_kernel_field(std::span<const double> x, const FracParams& p) {
  const Point c(x.begin(), x.end());
  const double beta = p.kernel_exponent();
  return ScalarField(
      p.d(), [c, beta](std::span<const double> y) { return riesz_eval(beta, c, y); },
      Support::power_law(c, 0.0, beta, 1.0), kSmooth, {Feature{c, 0.0, true}});
}

// ---------------------------------------------------------------------------
// Monomials from derivatives of K₂^x(y) = |x - y|² and K₄^x(y) = |x - y|⁴ in x

namespace detail {

inline double k2_partial(std::span<const double> x, std::span<const double> y, int i) {
  const auto ui = static_cast<std::size_t>(i);
  return 2.0 * (x[ui] - y[ui]);
}

inline double k4_second_partial(std::span<const double> x, std::span<const double> y, int i, int j) {
  const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
  const double r2 = dot(x, x) - 2.0 * dot(x, y) + dot(y, y);
  return 8.0 * (x[ui] - y[ui]) * (x[uj] - y[uj]) + (i == j ? 4.0 * r2 : 0.0);
}

/// -x_i x_j + x_j y_i + x_i y_j + ⅛ ∂²K₄/∂x_j∂x_i as printed; equals y_i y_j + ½ δ_ij |x - y|².
inline double printed_product_formula(std::span<const double> x, std::span<const double> y, int i, int j) {
  const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
  return -x[ui] * x[uj] + x[uj] * y[ui] + x[ui] * y[uj] + 0.125 * k4_second_partial(x, y, i, j);
}

}  // namespace detail

/// y ↦ x_i - ½ ∂K₂^x/∂x_i (y), which is y_i. Axes are 0-based.
inline ScalarField monomial_recovery(std::span<const double> x, int i) {
  const int d = static_cast<int>(x.size());
  if (i < 0 || i >= d) throw domain_error("monomial_recovery: axis out of range");
  const Point c(x.begin(), x.end());
  return fields::from_function(d, [c, i](std::span<const double> y) {
    return c[static_cast<std::size_t>(i)] - 0.5 * detail::k2_partial(c, y, i);
  });
}

/// y ↦ y_i y_j from the product formula; for i = j the ½|x - y|² = ½ K₂^x(y) it
/// carries is removed.
inline ScalarField monomial_recovery(std::span<const double> x, int i, int j) {
  const int d = static_cast<int>(x.size());
  if (i < 0 || i >= d || j < 0 || j >= d) throw domain_error("monomial_recovery: axis out of range");
  const Point c(x.begin(), x.end());
  return fields::from_function(d, [c, i, j](std::span<const double> y) {
    double v = detail::printed_product_formula(c, y, i, j);
    if (i == j) v -= 0.5 * (dot(c, c) - 2.0 * dot(c, y) + dot(y, y));
    return v;
  });
}

// ---------------------------------------------------------------------------
// Dictionary fits

struct FitOptions {
  double bump_scale = 0.1;      // relative to the region radius
  bool two_radii = false;       // d >= 2: alternate centers between 3.2r and 3.8r
  int points_per_axis = 33;     // sampling grid of the fit region
  double lambda = -1.0;         // absolute ridge parameter; < 0 uses reg · max column norm²
};

namespace detail {

inline double van_der_corput(unsigned k, unsigned base) {
  double v = 0.0, f = 1.0 / base;
  while (k > 0) {
    v += f * (k % base);
    k /= base;
    f /= base;
  }
  return v;
}

}  // namespace detail

/// Bump centers for the unit annulus B₄ \ B̄₃; every prefix of the list is the list for
/// a smaller n, so dictionaries of increasing size are nested.
inline std::vector<Point> dictionary_centers(int d, int n, const FitOptions& opt = {}) {
  std::vector<Point> out;
  const double margin = 1.5 * opt.bump_scale;
  for (int k = 0; k < n; ++k) {
    const auto uk = static_cast<unsigned>(k);
    if (d == 1) {
      // alternate sides, low-discrepancy positions inside (3 + margin, 4 - margin)
      const double u = detail::van_der_corput(uk / 2 + 1, 2);
      const double r = 3.0 + margin + (1.0 - 2.0 * margin) * u;
      out.push_back({k % 2 == 0 ? r : -r});
      continue;
    }
    double radius = 3.5;
    if (opt.two_radii) radius = k % 2 == 0 ? 3.2 : 3.8;
    Point p(static_cast<std::size_t>(d));
    if (d == 2) {
      const double th = 2.0 * std::numbers::pi * detail::van_der_corput(uk, 2);
      p = {std::cos(th), std::sin(th)};
    } else if (d == 3) {
      const double z = 1.0 - 2.0 * detail::van_der_corput(uk + 1, 2);
      const double ph = 2.0 * std::numbers::pi * detail::van_der_corput(uk + 1, 3);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      p = {z, rho * std::cos(ph), rho * std::sin(ph)};
    } else {
      static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
      for (unsigned skip = 0;; ++skip) {
        for (int i = 0; i < d; ++i)
          p[static_cast<std::size_t>(i)] =
              2.0 * detail::van_der_corput(uk * 7 + skip + 1, primes[static_cast<std::size_t>(i) % 16]) - 1.0;
        if (norm(p) > 0.1) break;
      }
      const double len = norm(p);
      for (double& v : p) v /= len;
    }
    for (double& v : p) v *= radius;
    out.push_back(p);
  }
  return out;
}

/// K h(z) = r^{2s} (K g)((z - a)/r) for h(z) = g((z - a)/r): centers a + r x_j,
/// coefficients c_j r^d, bump scale r·scale.
inline DictionaryPotential rescale_potential(const DictionaryPotential& g, std::span<const double> a, double r) {
  if (!(r > 0.0)) throw domain_error("rescale_potential: r must be positive");
  const FracParams& p = g.params();
  require_dim(a, p.d(), "rescale_potential");
  auto map = [&](std::span<const double> x) {
    Point y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + r * x[i];
    return y;
  };
  std::vector<Point> centers;
  for (const auto& c : g.centers()) centers.push_back(map(c));
  std::vector<double> coeffs;
  const double jac = std::pow(r, p.d());
  for (double c : g.coefficients()) coeffs.push_back(c * jac);
  AnnulusGeometry geom{map(g.geometry().center), r * g.geometry().radius};
  return DictionaryPotential(p, std::move(geom), std::move(centers), std::move(coeffs), r * g.scale());
}

struct FitReport {
  DictionaryPotential potential;
  double achieved_c0_error = 0.0;
  double achieved_ck_error = 0.0;
  double condition_estimate = 0.0;
  int centers_used = 0;
  double regularization = 0.0;  // absolute ridge parameter on the unit geometry
  int k = 0;
  Ball region;
  std::vector<std::string> warnings;
};

namespace detail {

struct FitSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<Point> centers;  // unit geometry
  double scale = 0.1;
};

/// Rows: sampled D^α values (|α| <= k) on the grid of B₁; columns: unit-geometry bump
/// potentials. The target is pulled back to B₁ and divided by r^{2s}.
inline FitSystem assemble_fit(const ScalarField& target, const Ball& region, int k, int n, const FracParams& p,
                              const QuadratureSpec& quad, const FitOptions& opt) {
  const int d = p.d();
  FitSystem sys;
  sys.centers = dictionary_centers(d, n, opt);
  sys.scale = opt.bump_scale;
  const Ball unit{Point(static_cast<std::size_t>(d), 0.0), 1.0};
  const GridSpec grid{opt.points_per_axis, 0.0};
  const double h = derivative_step(unit, grid);
  const auto pts = ball_grid(unit, grid.points_per_axis);
  const auto alphas = multi_indices(d, k);
  const double rs = std::pow(region.radius, -2.0 * p.s());
  auto pulled = [&](std::span<const double> y) {
    Point z(y.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = region.center[i] + region.radius * y[i];
    return rs * target(z);
  };
  const std::size_t rows = pts.size() * alphas.size();
  sys.A.resize(static_cast<Eigen::Index>(rows), n);
  sys.b.resize(static_cast<Eigen::Index>(rows));
  std::size_t row = 0;
  for (const auto& y : pts)
    for (const auto& alpha : alphas) sys.b(static_cast<Eigen::Index>(row++)) = finite_difference(pulled, y, alpha, h);
  const RadialBumpTable* table = quad.tabulate_bumps ? &detail::radial_bump_table(p) : nullptr;
  const double amp = std::pow(sys.scale, p.kernel_exponent());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    auto phi = [&](std::span<const double> y) {
      if (table) return amp * (*table)(distance(y, sys.centers[j]) / sys.scale);
      return convolve_bump_potential(p, sys.centers[j], sys.scale, y, quad).value;
    };
    std::size_t r = 0;
    for (const auto& y : pts)
      for (const auto& alpha : alphas)
        sys.A(static_cast<Eigen::Index>(r++), static_cast<Eigen::Index>(j)) = finite_difference(phi, y, alpha, h);
  });
  return sys;
}

inline double default_lambda(const Eigen::MatrixXd& A, double reg) {
  return reg * A.colwise().squaredNorm().maxCoeff();
}

struct RidgeSolution {
  Eigen::VectorXd coefficients;
  double condition = 0.0;
};

inline RidgeSolution ridge_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::VectorXd ub = svd.matrixU().transpose() * b;
  // lambda = 0 is minimum-norm least squares with the usual pseudo-inverse cutoff
  const double cutoff = sv.size() ? sv(0) * std::numeric_limits<double>::epsilon() *
                                        static_cast<double>(std::max(A.rows(), A.cols()))
                                  : 0.0;
  Eigen::VectorXd w(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double den = sv(i) * sv(i) + lambda;
    w(i) = den > 0.0 && (lambda > 0.0 || sv(i) > cutoff) ? sv(i) * ub(i) / den : 0.0;
  }
  RidgeSolution out;
  out.coefficients = svd.matrixV() * w;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  return out;
}

inline FitReport finish_fit(const ScalarField& target, const Ball& region, int k, const FracParams& p,
                            const QuadratureSpec& quad, const FitOptions& opt, const std::vector<Point>& centers,
                            double scale, const Eigen::VectorXd& coeffs, double lambda, double condition) {
  const int d = p.d();
  std::vector<double> c(coeffs.data(), coeffs.data() + coeffs.size());
  const DictionaryPotential unit(p, AnnulusGeometry::unit(d), centers, c, scale);
  DictionaryPotential fitted = rescale_potential(unit, region.center, region.radius);
  const ScalarField residual = fields::difference(target, fitted.potential_field(quad));
  const GridSpec grid{opt.points_per_axis, 0.0};
  FitReport rep{fitted, ck_norm(residual, region, 0, grid), 0.0, condition, static_cast<int>(centers.size()), lambda,
                k, region, {}};
  rep.achieved_ck_error = k == 0 ? rep.achieved_c0_error : ck_norm(residual, region, k, grid);
  if (!std::isfinite(condition) || condition > 1e12)
    rep.warnings.push_back(detail::concat("ill-conditioned dictionary: condition estimate ", condition,
                                          ", ridge parameter ", lambda));
  return rep;
}

}  // namespace detail

/// Fits K_{2s-d} * g ≈ target in C^k(B̄_r(a)) with g a sum of n bumps in B_{4r}(a) \ B̄_{3r}(a).
///
/// The fit runs on the unit geometry and is mapped back with rescale_potential.
/// Ridge least squares with λ = reg · (largest diagonal entry of AᵀA) unless
/// opt.lambda is set.
inline FitReport fit_dictionary(const ScalarField& target, const Ball& region, int k, int n_centers, const FracParams& p,
                                double reg = 1e-10, const QuadratureSpec& quad = {}, const FitOptions& opt = {}) {
  p.require_riesz();
  if (n_centers < 1) throw domain_error("fit_dictionary: need at least one center");
  if (k < 0 || k > 4) throw domain_error("fit_dictionary: k must lie in [0, 4]");
  if (target.smoothness() < k) throw precondition_error("fit_dictionary: target smoothness is below k");
  if (!(region.radius > 0.0)) throw domain_error("fit_dictionary: region radius must be positive");
  require_dim(region.center, p.d(), "fit_dictionary");
  const auto sys = detail::assemble_fit(target, region, k, n_centers, p, quad, opt);
  const double lambda = opt.lambda >= 0.0 ? opt.lambda : detail::default_lambda(sys.A, reg);
  const auto sol = detail::ridge_solve(sys.A, sys.b, lambda);
  return detail::finish_fit(target, region, k, p, quad, opt, sys.centers, sys.scale, sol.coefficients, lambda,
                            sol.condition);
}

/// Fits for an increasing list of center counts on nested center sets with one shared
/// ridge parameter (from the largest set). A larger set contains every smaller fit, so
/// when a fresh solve does not lower the C^k error the predecessor's coefficients are
/// kept (zero-padded) and a warning is attached.
inline std::vector<FitReport> fit_dictionary_ladder(const ScalarField& target, const Ball& region, int k,
                                                    const std::vector<int>& counts, const FracParams& p,
                                                    double reg = 1e-10, const QuadratureSpec& quad = {},
                                                    const FitOptions& opt = {}) {
  p.require_riesz();
  if (counts.empty()) return {};
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] < 1 || (i > 0 && counts[i] <= counts[i - 1]))
      throw domain_error("fit_dictionary_ladder: counts must be positive and increasing");
  const auto sys = detail::assemble_fit(target, region, k, counts.back(), p, quad, opt);
  const double lambda = opt.lambda >= 0.0 ? opt.lambda : detail::default_lambda(sys.A, reg);
  std::vector<FitReport> out;
  Eigen::VectorXd prev;
  for (int n : counts) {
    const auto sol = detail::ridge_solve(sys.A.leftCols(n), sys.b, lambda);
    std::vector<Point> centers(sys.centers.begin(), sys.centers.begin() + n);
    FitReport rep =
        detail::finish_fit(target, region, k, p, quad, opt, centers, sys.scale, sol.coefficients, lambda, sol.condition);
    Eigen::VectorXd used = sol.coefficients;
    if (!out.empty() && !(rep.achieved_ck_error < out.back().achieved_ck_error)) {
      Eigen::VectorXd padded = Eigen::VectorXd::Zero(n);
      padded.head(prev.size()) = prev;
      rep = detail::finish_fit(target, region, k, p, quad, opt, centers, sys.scale, padded, lambda, sol.condition);
      rep.warnings.push_back(detail::concat("adding centers did not reduce the error (", n,
                                            " centers); kept the previous coefficients"));
      used = padded;
    }
    prev = used;
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace fraclab
