#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "fraclab/core.hpp"
#include "fraclab/fields.hpp"
#include "fraclab/kernels.hpp"

namespace fraclab {

/// Periodic box [-L/2, L/2)^d sampled at n points per axis (n even).
struct PeriodicGrid {
  int dim = 1;
  int n = 1024;
  double length = 64.0;

  double spacing() const { return length / n; }
  std::size_t size() const {
    std::size_t t = 1;
    for (int i = 0; i < dim; ++i) t *= static_cast<std::size_t>(n);
    return t;
  }
  /// Coordinates of the flat index (row-major, last axis fastest).
  Point node(std::size_t flat) const {
    Point x(static_cast<std::size_t>(dim));
    for (int i = dim - 1; i >= 0; --i) {
      x[static_cast<std::size_t>(i)] = -0.5 * length + spacing() * static_cast<double>(flat % static_cast<std::size_t>(n));
      flat /= static_cast<std::size_t>(n);
    }
    return x;
  }
};

inline std::vector<double> sample_periodic(const ScalarField& u, const PeriodicGrid& grid) {
  if (u.dim() != grid.dim) throw domain_error("sample_periodic: field dimension differs from the grid");
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = u(grid.node(i));
  return out;
}

/// Σ_{k ∈ Z^d \ 0} |x - kL|^{-d-2s}: direct sum over |k|_∞ <= K, the rest by the
/// integral over the complement of the ball with the same volume as the summed cube.
inline double lattice_image_sum(std::span<const double> x, double length, double s) {
  const int d = static_cast<int>(x.size());
  const int K = d == 1 ? 2000 : d == 2 ? 40 : 6;
  const double e = -0.5 * (d + 2.0 * s);
  double acc = 0.0;
  std::vector<int> k(static_cast<std::size_t>(d), -K);
  for (;;) {
    bool zero = true;
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      zero = zero && k[ui] == 0;
      const double t = x[ui] - k[ui] * length;
      r2 += t * t;
    }
    if (!zero) acc += std::pow(r2, e);
    int i = 0;
    while (i < d && ++k[static_cast<std::size_t>(i)] > K) k[static_cast<std::size_t>(i++)] = -K;
    if (i == d) break;
  }
  const double side = (2 * K + 1) * length;
  const double req = std::pow(std::pow(side, d) / (sphere_measure(d) / d), 1.0 / d);
  acc += sphere_measure(d) * std::pow(req, -2.0 * s) / (2.0 * s * std::pow(length, d));
  return acc;
}

/// Grid values of (-Δ)^s u plus the multiplied spectrum, which allows trigonometric
/// interpolation at arbitrary points.
///
/// The periodic operator sees every translate u(· - kL). Far from the box those
/// translates contribute -c_pv M |x - kL|^{-d-2s} (M = ∫u) to leading order; at()
/// adds that back, leaving an O(L^{-d-2-2s}) periodization error.
struct SpectralResult {
  PeriodicGrid grid;
  double s = 0.5;
  std::vector<double> values;                  // raw periodic values on the grid
  std::vector<std::complex<double>> spectrum;  // multiplied, divided by the node count
  double mass = 0.0;                           // ∫u by the trapezoidal rule
  double tail_energy_fraction = 0.0;           // energy in the outer half of the frequency band
  bool aliasing_warning = false;
  bool correct_images = true;

  double image_correction(std::span<const double> x) const {
    if (!correct_images || mass == 0.0) return 0.0;
    return pv_constant(FracParams::operator_only(grid.dim, s)) * mass * lattice_image_sum(x, grid.length, s);
  }

  /// Trigonometric interpolant of (-Δ)^s u at x (x inside the box), image-corrected.
  double at(std::span<const double> x) const { return interpolate(x) + image_correction(x); }

  /// Tensor Lagrange interpolation of the grid values through `order` nodes per axis
  /// (periodic wrap), image-corrected. O(order^d) instead of O(n^d) per point.
  double local(std::span<const double> x, int order = 8) const {
    require_dim(x, grid.dim, "SpectralResult::local");
    const auto n = static_cast<long>(grid.n);
    const double h = grid.spacing();
    const auto dim = static_cast<std::size_t>(grid.dim);
    std::vector<long> base(dim);
    std::vector<std::vector<double>> w(dim, std::vector<double>(static_cast<std::size_t>(order)));
    for (std::size_t a = 0; a < dim; ++a) {
      const double u = (x[a] + 0.5 * grid.length) / h;
      base[a] = static_cast<long>(std::floor(u)) - order / 2 + 1;
      for (int j = 0; j < order; ++j) {
        double l = 1.0;
        for (int m = 0; m < order; ++m)
          if (m != j) l *= (u - static_cast<double>(base[a] + m)) / static_cast<double>(j - m);
        w[a][static_cast<std::size_t>(j)] = l;
      }
    }
    double acc = 0.0;
    std::vector<int> idx(dim, 0);
    for (;;) {
      double wt = 1.0;
      std::size_t flat = 0;
      for (std::size_t a = 0; a < dim; ++a) {
        wt *= w[a][static_cast<std::size_t>(idx[a])];
        const long k = ((base[a] + idx[a]) % n + n) % n;
        flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
      }
      acc += wt * values[flat];
      std::size_t a = dim;
      while (a > 0 && ++idx[a - 1] == order) idx[--a] = 0;
      if (a == 0) break;
    }
    return acc + image_correction(x);
  }

  double interpolate(std::span<const double> x) const {
    require_dim(x, grid.dim, "SpectralResult::at");
    const std::size_t n = static_cast<std::size_t>(grid.n);
    // per-axis phase tables e^{2πi k (x - x0)/L} for k in FFT order
    std::vector<std::vector<std::complex<double>>> phase(static_cast<std::size_t>(grid.dim));
    for (int a = 0; a < grid.dim; ++a) {
      auto& tab = phase[static_cast<std::size_t>(a)];
      tab.resize(n);
      const double theta = 2.0 * std::numbers::pi * (x[static_cast<std::size_t>(a)] + 0.5 * grid.length) / grid.length;
      // powers by recurrence, re-anchored every 64 steps
      const std::complex<double> step = std::polar(1.0, theta);
      std::complex<double> up = 1.0, down = 1.0;
      tab[0] = 1.0;
      for (std::size_t k = 1; k <= n / 2; ++k) {
        if (k % 64 == 0) {
          up = std::polar(1.0, theta * static_cast<double>(k));
          down = std::conj(up);
        } else {
          up *= step;
          down *= std::conj(step);
        }
        if (k < n / 2) tab[k] = up;
        tab[n - k] = down;
      }
    }
    if (grid.dim == 1) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += spectrum[k] * phase[0][k];
      return acc.real();
    }
    std::complex<double> acc = 0.0;
    for (std::size_t flat = 0; flat < spectrum.size(); ++flat) {
      std::size_t rem = flat;
      std::complex<double> ph = 1.0;
      for (int a = grid.dim - 1; a >= 0; --a) {
        ph *= phase[static_cast<std::size_t>(a)][rem % n];
        rem /= n;
      }
      acc += spectrum[flat] * ph;
    }
    return acc.real();
  }
};

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Applies the multiplier (2π|ξ|)^{2s} to periodic samples by FFT.
///
/// The zero mode is annihilated. aliasing_warning is set when the outer half of the
/// frequency band carries more than 1e-10 of the energy.
inline SpectralResult spectral_eval(std::span<const double> samples, const PeriodicGrid& grid, double s) {
  if (grid.n < 4 || grid.n % 2 != 0) throw domain_error("spectral_eval: n must be even and >= 4");
  if (!(grid.length > 0.0)) throw domain_error("spectral_eval: box length must be positive");
  if (!(s > 0.0 && s < 1.0)) throw domain_error("spectral_eval: s must lie in (0, 1)");
  if (samples.size() != grid.size()) throw domain_error("spectral_eval: sample count differs from the grid");

  const std::size_t total = grid.size();
  std::vector<std::complex<double>> buf(samples.begin(), samples.end());
  std::vector<int> dims(static_cast<std::size_t>(grid.dim), grid.n);
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fwd = fftw_plan_dft(grid.dim, dims.data(), data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft(grid.dim, dims.data(), data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);

  SpectralResult out;
  out.grid = grid;
  out.s = s;
  for (double v : samples) out.mass += v;
  out.mass *= std::pow(grid.spacing(), grid.dim);
  const std::size_t n = static_cast<std::size_t>(grid.n);
  double energy = 0.0, tail = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double xi2 = 0.0;
    bool outer = false;
    for (int a = 0; a < grid.dim; ++a) {
      const std::size_t k = rem % n;
      rem /= n;
      const double kk = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
      outer = outer || std::abs(kk) >= static_cast<double>(n) / 4.0;
      const double xi = kk / grid.length;
      xi2 += xi * xi;
    }
    const double e = std::norm(buf[flat]);
    energy += e;
    if (outer) tail += e;
    buf[flat] *= xi2 == 0.0 ? 0.0 : std::pow(2.0 * std::numbers::pi * std::sqrt(xi2), 2.0 * s);
  }
  out.tail_energy_fraction = energy > 0.0 ? tail / energy : 0.0;
  out.aliasing_warning = out.tail_energy_fraction > 1e-10;
  out.spectrum.resize(total);
  for (std::size_t i = 0; i < total; ++i) out.spectrum[i] = buf[i] / static_cast<double>(total);

  fftw_execute(bwd);
  out.values.resize(total);
  for (std::size_t i = 0; i < total; ++i) out.values[i] = buf[i].real() / static_cast<double>(total);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  return out;
}

inline SpectralResult spectral_eval(const ScalarField& u, const PeriodicGrid& grid, double s) {
  const auto samples = sample_periodic(u, grid);
  return spectral_eval(samples, grid, s);
}

}  // namespace fraclab
