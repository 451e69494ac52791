#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

namespace detail {

// ∫ |y - z|^{2s-d} ζ_a(z - c) dz at one tanh-sinh level; value and embedded error.
inline QuadResult bump_convolution(const FracParams& p, std::span<const double> center, double a,
                                   std::span<const double> y, int level) {
  const int d = p.d();
  const double beta = p.kernel_exponent();
  const double norm = bump_normalization(d) * std::pow(a, -d);
  const double inv_a2 = 1.0 / (a * a);

  if (d == 1) {
    const double c = center[0], yy = y[0];
    auto density = [&](double z) { return norm * detail::bump_profile((z - c) * (z - c) * inv_a2); };
    const double lo = c - a, hi = c + a;
    if (yy >= lo && yy <= hi) {
      const QuadResult left =
          tanh_sinh([&](double z, double, double dhi) { return std::pow(dhi, beta) * density(z); }, lo, yy, level);
      const QuadResult right =
          tanh_sinh([&](double z, double dlo, double) { return std::pow(dlo, beta) * density(z); }, yy, hi, level);
      return {left.value + right.value, left.error + right.error};
    }
    return tanh_sinh([&](double z, double, double) { return std::pow(std::abs(yy - z), beta) * density(z); }, lo, hi,
                     level);
  }

  // Polar coordinates about y with the axis pointing at the bump center; the bump is
  // radial, so only the polar angle φ matters:
  //   |S^{d-2}| ∫ sin^{d-2}φ ∫_{chord} r^{2s-1} ζ_a(|y + rω - c|) dr dφ.
  // Chords are parametrized from their midpoint, r = ρ cos φ + u, so that
  // |y + rω - c|² = (ρ sin φ)² + u² carries no cancellation when ρ ≫ a.
  const double rho = distance(y, center);
  const double sub_measure = sphere_measure(d - 1);
  const bool inside = rho < a;
  const double phi_max = inside ? std::numbers::pi : std::asin(std::min(1.0, a / rho));
  const double two_s = 2.0 * p.s();
  double err = 0.0;
  auto radial = [&](double phi) {
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double b = rho * sp;
    const double disc = (a - b) * (a + b);
    if (disc <= 0.0) return 0.0;
    const double root = std::sqrt(disc);
    const double mid = rho * cp;
    const double u_lo = inside ? -mid : -root;
    const QuadResult q = tanh_sinh(
        [&](double u, double dlo, double) {
          const double r = inside ? dlo : mid + u;
          return std::pow(r, two_s - 1.0) * norm * detail::bump_profile((b * b + u * u) * inv_a2);
        },
        u_lo, root, level);
    err = std::max(err, q.error * std::pow(sp, d - 2));
    return q.value;
  };
  const QuadResult outer = tanh_sinh(
      [&](double phi, double, double) { return std::pow(std::sin(phi), d - 2) * radial(phi); }, 0.0, phi_max,
      std::max(1, level - 1));
  return {sub_measure * outer.value, sub_measure * (outer.error + err * phi_max)};
}

/// Piecewise Chebyshev table of P(ρ) = (K_{2s-d} * ζ)(ρ e₁) for the unit bump ζ.
/// Every bump potential is a^{2s-d} P(|y - c| / a). Panels are split until the
/// interpolant matches direct quadrature at interior check points (5e-14 relative for
/// d = 1, 1e-12 above, near the floor of the reference quadrature);
/// past ρ = 1e8 the leading term ρ^{2s-d} is exact to double precision.
class RadialBumpTable {
 public:
  RadialBumpTable(int d, double s) : params_(FracParams(d, s)) {
    std::vector<double> breaks{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 3.0, 4.0};
    while (breaks.back() < kFar) breaks.push_back(std::min(kFar, breaks.back() * 1.5));
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) build(breaks[i], breaks[i + 1], 0);
  }

  double operator()(double rho) const {
    if (rho >= kFar) return std::pow(rho, params_.kernel_exponent());
    auto it = std::upper_bound(panels_.begin(), panels_.end(), rho,
                               [](double r, const Panel& p) { return r < p.hi; });
    if (it == panels_.end()) --it;
    return it->eval(rho);
  }

  double max_relative_error() const { return max_err_; }
  std::size_t panel_count() const { return panels_.size(); }

 private:
  static constexpr double kFar = 1e8;
  static constexpr int kNodes = 20;

  struct Panel {
    double lo, hi;
    std::array<double, kNodes> coef;
    double eval(double r) const {
      const double t = (2.0 * r - lo - hi) / (hi - lo);
      double b1 = 0.0, b2 = 0.0;
      for (int k = kNodes - 1; k >= 1; --k) {
        const double b0 = 2.0 * t * b1 - b2 + coef[static_cast<std::size_t>(k)];
        b2 = b1;
        b1 = b0;
      }
      return t * b1 - b2 + coef[0];
    }
  };

  double direct(double rho) const {
    Point y(static_cast<std::size_t>(params_.d()), 0.0), c(y.size(), 0.0);
    y[0] = rho;
    return bump_convolution(params_, c, 1.0, y, params_.d() == 1 ? 6 : 5).value;
  }

  void build(double lo, double hi, int depth) {
    Panel p{lo, hi, {}};
    std::array<double, kNodes> f{};
    for (int j = 0; j < kNodes; ++j) {
      const double t = std::cos(std::numbers::pi * (j + 0.5) / kNodes);
      f[static_cast<std::size_t>(j)] = direct(0.5 * (lo + hi) + 0.5 * (hi - lo) * t);
    }
    for (int k = 0; k < kNodes; ++k) {
      double acc = 0.0;
      for (int j = 0; j < kNodes; ++j)
        acc += f[static_cast<std::size_t>(j)] * std::cos(std::numbers::pi * k * (j + 0.5) / kNodes);
      p.coef[static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : 2.0) * acc / kNodes;
    }
    double err = 0.0;
    for (double frac : {0.03, 0.31, 0.5, 0.77, 0.97}) {
      const double r = lo + frac * (hi - lo);
      const double ref = direct(r);
      err = std::max(err, std::abs(p.eval(r) - ref) / std::max(std::abs(ref), 1e-300));
    }
    if (err > (params_.d() == 1 ? 5e-14 : 1e-12) && depth < 6) {
      const double mid = 0.5 * (lo + hi);
      build(lo, mid, depth + 1);
      build(mid, hi, depth + 1);
      return;
    }
    max_err_ = std::max(max_err_, err);
    panels_.push_back(p);
  }

  FracParams params_;
  std::vector<Panel> panels_;
  double max_err_ = 0.0;
};

/// Shared table per (d, s); built once, immutable afterwards.
inline const RadialBumpTable& radial_bump_table(const FracParams& p) {
  static std::mutex m;
  static std::map<std::pair<int, double>, std::unique_ptr<RadialBumpTable>> cache;
  std::lock_guard lock(m);
  auto& slot = cache[{p.d(), p.s()}];
  if (!slot) slot = std::make_unique<RadialBumpTable>(p.d(), p.s());
  return *slot;
}

}  // namespace detail

/// (K_{2s-d} * ζ_scale(· - center))(y) for the unit-mass bump of radius `scale`.
///
/// Tanh-sinh handles both the weak kernel singularity (y inside the bump) and the flat
/// edge of the bump. Starts at quad.conv_level and refines until the embedded error is
/// below quad.tolerance relative; throws quadrature_error otherwise.
inline QuadResult convolve_bump_potential(const FracParams& p, std::span<const double> center, double scale,
                                          std::span<const double> y, const QuadratureSpec& quad) {
  p.require_riesz();
  require_dim(center, p.d(), "convolve_bump_potential");
  require_dim(y, p.d(), "convolve_bump_potential");
  if (!(scale > 0.0)) throw domain_error("convolve_bump_potential: scale must be positive");
  QuadResult r{};
  for (int level = quad.conv_level; level <= 8; ++level) {
    r = detail::bump_convolution(p, center, scale, y, level);
    if (r.error <= quad.tolerance * std::abs(r.value) || r.error < 1e-300) return r;
  }
  throw quadrature_error("convolve_bump_potential: tolerance unreachable at the maximal tanh-sinh level", r.value,
                         r.error);
}

/// A finite bump sum g = Σ_j c_j ζ_scale(· - x_j) supported in the annulus U, and its
/// Riesz potential K_{2s-d} * g.
class DictionaryPotential {
 public:
  DictionaryPotential(FracParams params, AnnulusGeometry geometry, std::vector<Point> centers,
                      std::vector<double> coefficients, double scale)
      : params_(params), geometry_(std::move(geometry)), centers_(std::move(centers)),
        coefficients_(std::move(coefficients)), scale_(scale) {
    params_.require_riesz();
    if (centers_.size() != coefficients_.size())
      throw domain_error("DictionaryPotential: centers and coefficients differ in length");
    if (!(scale_ > 0.0)) throw domain_error("DictionaryPotential: bump scale must be positive");
    require_dim(geometry_.center, params_.d(), "DictionaryPotential");
    for (const auto& c : centers_) {
      require_dim(c, params_.d(), "DictionaryPotential");
      if (!(geometry_.clearance(c) > scale_))
        throw domain_error("DictionaryPotential: a bump reaches outside the annulus");
    }
  }

  const FracParams& params() const { return params_; }
  const AnnulusGeometry& geometry() const { return geometry_; }
  const std::vector<Point>& centers() const { return centers_; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  double scale() const { return scale_; }
  std::size_t size() const { return centers_.size(); }

  double total_mass() const {
    double m = 0.0;
    for (double c : coefficients_) m += c;
    return m;
  }

  /// g(z).
  double density(std::span<const double> z) const {
    double acc = 0.0;
    const Mollifier zeta(params_.d(), 1.0 / scale_);
    Point w(z.size());
    for (std::size_t j = 0; j < centers_.size(); ++j) {
      if (coefficients_[j] == 0.0) continue;
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = z[i] - centers_[j][i];
      acc += coefficients_[j] * zeta(w);
    }
    return acc;
  }

  /// (K_{2s-d} * g)(y) with the summed quadrature error.
  QuadResult potential(std::span<const double> y, const QuadratureSpec& quad = {}) const {
    QuadResult acc{};
    if (quad.tabulate_bumps) {
      const auto& table = detail::radial_bump_table(params_);
      const double amp = std::pow(scale_, params_.kernel_exponent());
      for (std::size_t j = 0; j < centers_.size(); ++j) {
        if (coefficients_[j] == 0.0) continue;
        const double term = coefficients_[j] * amp * table(distance(y, centers_[j]) / scale_);
        acc.value += term;
        acc.error += std::abs(term);
      }
      acc.error *= table.max_relative_error();
      return acc;
    }
    for (std::size_t j = 0; j < centers_.size(); ++j) {
      if (coefficients_[j] == 0.0) continue;
      const QuadResult q = convolve_bump_potential(params_, centers_[j], scale_, y, quad);
      acc.value += coefficients_[j] * q.value;
      acc.error += std::abs(coefficients_[j]) * q.error;
    }
    return acc;
  }

  ScalarField density_field() const {
    auto self = std::make_shared<const DictionaryPotential>(*this);
    std::vector<Feature> feats;
    for (const auto& c : centers_) feats.push_back({c, scale_, false});
    return ScalarField(
        params_.d(), [self](std::span<const double> z) { return self->density(z); },
        Support::annulus(geometry_.center, geometry_.inner(), geometry_.outer()), kSmooth, std::move(feats));
  }

  /// y ↦ (K_{2s-d} * g)(y); smooth everywhere, decaying like total_mass · |y - a|^{2s-d}.
  ScalarField potential_field(const QuadratureSpec& quad = {}) const {
    auto self = std::make_shared<const DictionaryPotential>(*this);
    std::vector<Feature> feats;
    for (std::size_t j = 0; j < centers_.size(); ++j)
      if (coefficients_[j] != 0.0) feats.push_back({centers_[j], scale_, false});
    return ScalarField(
        params_.d(), [self, quad](std::span<const double> y) { return self->potential(y, quad).value; },
        Support::power_law(geometry_.center, geometry_.outer(), params_.kernel_exponent(), total_mass()), kSmooth,
        std::move(feats));
  }

 private:
  FracParams params_;
  AnnulusGeometry geometry_;
  std::vector<Point> centers_;
  std::vector<double> coefficients_;
  double scale_;
};

}  // namespace fraclab
