#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

using Point = std::vector<double>;

// Error hierarchy. Everything thrown by the library derives from fraclab::error.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct domain_error : error {
  using error::error;
};

// Raised when a kernel with negative exponent is evaluated at its center.
struct singularity_error : error {
  using error::error;
};

struct precondition_error : error {
  using error::error;
};

// A quadrature that could not reach its tolerance. Carries what it did reach.
struct quadrature_error : error {
  quadrature_error(const std::string& what, double achieved_value, double achieved_error)
      : error(what), value(achieved_value), estimate(achieved_error) {}
  double value;
  double estimate;
};

namespace detail {

template <class... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

/// Spatial dimension and fractional order.
///
/// The default constructor enforces the standing hypothesis d > 2s used by every
/// Riesz-kernel argument. `operator_only` relaxes it to d >= 1 for callers that only
/// evaluate (-Δ)^s and never touch the kernel K_{2s-d}.
class FracParams {
 public:
  FracParams(int d, double s) : FracParams(d, s, true) {}

  static FracParams operator_only(int d, double s) { return FracParams(d, s, false); }

  int d() const noexcept { return d_; }
  double s() const noexcept { return s_; }

  /// Exponent 2s - d of the fundamental kernel.
  double kernel_exponent() const noexcept { return 2.0 * s_ - d_; }

  bool riesz_admissible() const noexcept { return d_ > 2.0 * s_; }

  void require_riesz() const {
    if (!riesz_admissible())
      throw domain_error(detail::concat("kernel K_{2s-d} requires d > 2s (got d=", d_, ", s=", s_, ")"));
  }

  friend bool operator==(const FracParams&, const FracParams&) = default;

 private:
  FracParams(int d, double s, bool strict) : d_(d), s_(s) {
    if (!(s > 0.0 && s < 1.0)) throw domain_error(detail::concat("fractional order must lie in (0,1), got ", s));
    if (d < 1) throw domain_error(detail::concat("dimension must be >= 1, got ", d));
    if (strict) require_riesz();
  }

  int d_;
  double s_;
};

// Small vector helpers. Points are plain coordinate vectors; spans are accepted
// wherever the routine does not need ownership.

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    acc += t * t;
  }
  return std::sqrt(acc);
}

inline Point axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  Point out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * x[i];
  return out;
}

inline Point unit_vector(int d, int axis) {
  Point e(static_cast<std::size_t>(d), 0.0);
  e.at(static_cast<std::size_t>(axis)) = 1.0;
  return e;
}

/// Surface measure |S^{d-1}| = 2 π^{d/2} / Γ(d/2).
inline double sphere_measure(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

inline void require_dim(std::span<const double> x, int d, const char* what) {
  if (static_cast<int>(x.size()) != d)
    throw domain_error(detail::concat(what, ": expected a point of dimension ", d, ", got ", x.size()));
}

}  // namespace fraclab
