#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "fraclab/core.hpp"

namespace fraclab {

/// A quadrature value with its estimated absolute error.
struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Discretization choices shared by the singular, convolution and half-line integrals.
///
/// Radial integrals use geometric panels (`panels_per_decade` per factor of ten in
/// radius) carrying `radial_order` Gauss-Legendre nodes each. Non-smooth loci of a
/// field become panel breaks; loci flagged singular additionally receive
/// `feature_levels` dyadic grading panels. `refined()` is the next level used for the
/// error estimate: doubling orders and node counts on the same layout.
struct QuadratureSpec {
  double rho = 0.5;            // cap on the near-field (regularized core) radius
  double outer_radius = 0.0;   // 0 selects the truncation from field metadata
  int radial_order = 12;
  int panels_per_decade = 4;
  int near_decades = 3;        // geometric grading of the core down to rho * 10^-near_decades
  int feature_levels = 12;
  int angular_nodes = 32;      // circle nodes for d = 2; polar nodes for d >= 3
  double tolerance = 1e-8;
  int max_refinements = 1;
  bool estimate_error = true;
  double panel_phase = 0.0;    // shifts the geometric grid by ratio^phase
  double angular_phase = 0.0;  // rotates circle nodes by phase * (2π / n)
  int conv_level = 5;          // tanh-sinh step 2^-conv_level for bump convolutions
  double far_factor = 1e4;     // truncation multiple for power-law decaying fields
  bool tabulate_bumps = true;  // dictionary potentials through the radial bump table

  void validate() const {
    if (!(rho > 0.0)) throw domain_error("QuadratureSpec: rho must be positive");
    if (outer_radius != 0.0 && !(outer_radius > rho)) throw domain_error("QuadratureSpec: need 0 < rho < R");
    if (radial_order < 4 || angular_nodes < 4) throw domain_error("QuadratureSpec: node counts must be >= 4");
    if (radial_order > 128) throw domain_error("QuadratureSpec: radial_order must be <= 128");
    if (angular_nodes % 2 != 0) throw domain_error("QuadratureSpec: angular_nodes must be even");
    if (!(tolerance > 0.0)) throw domain_error("QuadratureSpec: tolerance must be positive");
    if (panels_per_decade < 1 || near_decades < 1 || feature_levels < 0 || max_refinements < 0)
      throw domain_error("QuadratureSpec: counts must be positive");
    if (conv_level < 1 || conv_level > 8) throw domain_error("QuadratureSpec: conv_level must lie in [1, 8]");
  }

  QuadratureSpec refined() const {
    QuadratureSpec q = *this;
    q.radial_order = std::min(2 * radial_order, 128);
    q.angular_nodes = 2 * angular_nodes;
    q.feature_levels = feature_levels + feature_levels / 2;
    q.conv_level = std::min(conv_level + 1, 8);
    return q;
  }

  double panel_ratio() const { return std::pow(10.0, 1.0 / panels_per_decade); }
};

// ---------------------------------------------------------------------------
// Gauss-Legendre

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

namespace detail {

inline GaussRule build_gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // final derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule with n nodes (1 <= n <= 128); tables are built once.
inline const GaussRule& gauss_legendre(int n) {
  static const std::vector<GaussRule> table = [] {
    std::vector<GaussRule> t(129);
    for (int k = 1; k <= 128; ++k) t[static_cast<std::size_t>(k)] = detail::build_gauss_legendre(k);
    return t;
  }();
  if (n < 1 || n > 128) throw domain_error(detail::concat("gauss_legendre: unsupported order ", n));
  return table[static_cast<std::size_t>(n)];
}

template <class F>
double gauss_panel(F&& f, double a, double b, const GaussRule& rule) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * acc;
}

template <class F>
double gauss_panels(F&& f, const std::vector<double>& breaks, const GaussRule& rule) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) acc += gauss_panel(f, breaks[i], breaks[i + 1], rule);
  return acc;
}

// ---------------------------------------------------------------------------
// Panel layouts

/// Sorted breakpoints on [lo, hi]: both ends plus every anchor * ratio^(k + phase), k ∈ Z,
/// falling strictly inside.
inline std::vector<double> geometric_breaks(double lo, double hi, double anchor, double ratio, double phase) {
  std::vector<double> out{lo};
  if (hi > lo && anchor > 0.0) {
    const double lr = std::log(ratio);
    const double k0 = std::floor(std::log(lo / anchor) / lr - phase);
    for (double k = k0;; k += 1.0) {
      const double p = anchor * std::exp((k + phase) * lr);
      if (p >= hi * (1.0 - 1e-12)) break;
      if (p > lo * (1.0 + 1e-12)) out.push_back(p);
    }
  }
  out.push_back(hi);
  return out;
}

/// Adds dyadic grading toward `lo` and/or `hi` of each panel adjacent to those ends.
inline std::vector<double> graded(std::vector<double> breaks, bool toward_lo, bool toward_hi, int levels) {
  if (breaks.size() < 2 || levels <= 0) return breaks;
  std::vector<double> extra;
  if (toward_lo) {
    const double a = breaks[0], w = breaks[1] - breaks[0];
    for (int j = 1; j <= levels; ++j) extra.push_back(a + w * std::ldexp(1.0, -j));
  }
  if (toward_hi) {
    const double b = breaks.back(), w = breaks.back() - breaks[breaks.size() - 2];
    for (int j = 1; j <= levels; ++j) extra.push_back(b - w * std::ldexp(1.0, -j));
  }
  breaks.insert(breaks.end(), extra.begin(), extra.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

// ---------------------------------------------------------------------------
// Tanh-sinh (double exponential) quadrature

namespace detail {

struct TanhSinhNode {
  double weight;      // (π/2) cosh t / cosh² u, without the step h
  double complement;  // 1 - tanh u, exact for large u
};

inline const std::vector<TanhSinhNode>& tanh_sinh_level(int level) {
  static const std::array<std::vector<TanhSinhNode>, 9> table = [] {
    std::array<std::vector<TanhSinhNode>, 9> t;
    for (int L = 0; L <= 8; ++L) {
      const double h = std::ldexp(1.0, -L);
      for (int k = 0;; ++k) {
        const double tk = k * h;
        const double u = 0.5 * std::numbers::pi * std::sinh(tk);
        const double ch = std::cosh(u);
        const double w = 0.5 * std::numbers::pi * std::cosh(tk) / (ch * ch);
        const double c = 2.0 / (1.0 + std::exp(2.0 * u));
        if (!(w > 0.0) || !(c > 1e-300) || tk > 7.0) break;
        t[static_cast<std::size_t>(L)].push_back({w, c});
      }
    }
    return t;
  }();
  return table.at(static_cast<std::size_t>(level));
}

}  // namespace detail

/// Integrates f over [a, b] by the tanh-sinh rule with step 2^-level.
///
/// f is called as f(x, x - a, b - x) with both distances computed without
/// cancellation, so integrable endpoint singularities can be written in terms of them.
/// The error estimate is the difference to the embedded rule with twice the step.
template <class F>
QuadResult tanh_sinh(F&& f, double a, double b, int level) {
  if (!(b > a)) return {};
  const auto& nodes = detail::tanh_sinh_level(level);
  const double half = 0.5 * (b - a);
  const double h = std::ldexp(1.0, -level);
  double all = 0.0, even = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& n = nodes[k];
    double contrib;
    if (k == 0) {
      contrib = n.weight * f(a + half, half, half);
    } else {
      const double dlo = half * n.complement;
      const double dhi = half * (2.0 - n.complement);
      contrib = n.weight * (f(a + dlo, dlo, dhi) + f(b - dlo, dhi, dlo));
    }
    all += contrib;
    if (k % 2 == 0) even += contrib;
  }
  const double fine = half * h * all;
  const double coarse = half * 2.0 * h * even;
  return {fine, std::abs(fine - coarse)};
}

// ---------------------------------------------------------------------------
// Sphere rules

/// Directions and weights integrating over S^{d-1}. Every rule built here is
/// antipodally symmetric: ω and -ω appear with equal weight.
struct SphereRule {
  int dim = 0;
  std::vector<double> directions;  // row-major, dim entries per node
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> direction(std::size_t i) const {
    return {directions.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

/// d = 1: {+1, -1}. d = 2: n equispaced angles (rotated by phase). d >= 3: n/2 Gauss
/// nodes in the polar angle times the rule on S^{d-2}.
inline SphereRule sphere_rule(int d, int n, double phase = 0.0) {
  SphereRule rule;
  rule.dim = d;
  if (d == 1) {
    rule.directions = {1.0, -1.0};
    rule.weights = {1.0, 1.0};
    return rule;
  }
  if (d == 2) {
    const double step = 2.0 * std::numbers::pi / n;
    for (int k = 0; k < n; ++k) {
      const double th = step * (k + phase);
      rule.directions.push_back(std::cos(th));
      rule.directions.push_back(std::sin(th));
      rule.weights.push_back(step);
    }
    return rule;
  }
  const SphereRule sub = sphere_rule(d - 1, n, phase);
  const GaussRule& g = gauss_legendre(std::max(2, n / 2));
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double phi = 0.5 * std::numbers::pi * (g.nodes[i] + 1.0);
    const double wphi = 0.5 * std::numbers::pi * g.weights[i] * std::pow(std::sin(phi), d - 2);
    for (std::size_t j = 0; j < sub.size(); ++j) {
      rule.directions.push_back(std::cos(phi));
      for (double c : sub.direction(j)) rule.directions.push_back(std::sin(phi) * c);
      rule.weights.push_back(wphi * sub.weights[j]);
    }
  }
  return rule;
}

}  // namespace fraclab
