#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fraclab/kernels.hpp"

using namespace fraclab;
using std::numbers::pi;

namespace {

// composite Simpson, n even
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

Point random_point(std::mt19937_64& rng, int d, double scale) {
  std::normal_distribution<double> n;
  Point x(static_cast<std::size_t>(d));
  for (double& v : x) v = scale * n(rng);
  return x;
}

}  // namespace

TEST(RieszEval, Examples) {
  EXPECT_DOUBLE_EQ(riesz_eval(-1.0, Point{0.0}, Point{2.0}), 0.5);
  EXPECT_EQ(riesz_eval(2.0, Point{0.3, 0.1}, Point{0.3, 0.1}), 0.0);
  EXPECT_DOUBLE_EQ(riesz_eval(FracParams(2, 0.5).kernel_exponent(), Point{0.0, 0.0}, Point{0.0, 0.25}), 4.0);
  EXPECT_THROW(riesz_eval(-0.5, Point{1.0}, Point{1.0}), singularity_error);
}

TEST(RieszEval, HomogeneityAndRadialSymmetry) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.1, 10.0), beta(-3.0, 4.0);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 3;
    const Point x = random_point(rng, d, 1.0), y = random_point(rng, d, 1.0);
    const double b = beta(rng), l = lam(rng);
    Point z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + l * (y[i] - x[i]);
    const double k = riesz_eval(b, x, y);
    EXPECT_GT(k, 0.0);
    EXPECT_NEAR(riesz_eval(b, x, z) / (std::pow(l, b) * k), 1.0, 1e-12);
    Point mirror(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) mirror[i] = 2.0 * x[i] - y[i];
    EXPECT_NEAR(riesz_eval(b, x, mirror) / k, 1.0, 1e-12);
  }
}

TEST(FracParams, RejectsInadmissible) {
  EXPECT_THROW(FracParams(1, 0.0), domain_error);
  EXPECT_THROW(FracParams(1, 1.0), domain_error);
  EXPECT_THROW(FracParams(0, 0.3), domain_error);
  EXPECT_THROW(FracParams(1, 0.5), domain_error);  // d = 2s
  EXPECT_NO_THROW(FracParams::operator_only(1, 0.5));
}

TEST(PvConstant, KnownValues) {
  // half-Laplacian constants 1/π (d = 1) and 1/π² (d = 3)
  EXPECT_NEAR(pv_constant(FracParams::operator_only(1, 0.5)), 1.0 / pi, 1e-15);
  EXPECT_NEAR(pv_constant(FracParams(3, 0.5)), 1.0 / (pi * pi), 1e-15);
  for (double s : {0.05, 0.3, 0.7, 0.95})
    for (int d : {1, 2, 3}) EXPECT_GT(pv_constant(FracParams::operator_only(d, s)), 0.0);
}

TEST(PvConstant, ConstantTimesTailMatchesMultiplierMoment) {
  // Gaussian e^{-πx²} at 0: c_pv ∫ (1 - e^{-πy²}) |y|^{-1-2s} dy must equal ∫ (2π|ξ|)^{2s} e^{-πξ²} dξ.
  for (double s : {0.2, 0.25, 0.4}) {
    const FracParams p(1, s);
    // y = t^{1/(1-s)} removes the endpoint power at 0; the tail past 8 is 1/(s 8^{2s})
    const double a = 1.0 / (1.0 - s);
    const double near = simpson(
        [&](double t) {
          if (t == 0.0) return 0.0;
          const double y = std::pow(t, a);
          return a * std::pow(t, a - 1.0) * (1.0 - std::exp(-pi * y * y)) * std::pow(y, -1.0 - 2.0 * s);
        },
        0.0, std::pow(8.0, 1.0 - s), 20000);
    const double far = std::pow(8.0, -2.0 * s) / (2.0 * s);
    const double lhs = pv_constant(p) * 2.0 * (near + far);
    const double moment = 2.0 * simpson(
                                    [&](double u) {
                                      const double xi = u * u;  // ξ = u² smooths |ξ|^{2s}
                                      return 2.0 * u * std::pow(2.0 * pi * xi, 2.0 * s) * std::exp(-pi * xi * xi);
                                    },
                                    0.0, 3.0, 20000);
    EXPECT_NEAR(lhs / moment, 1.0, 1e-7) << "s=" << s;
  }
}

TEST(FourierConstant, ParsevalWithGaussian) {
  // ∫ |x|^{-α} e^{-π|x|²} dx = (2π)^α / c ∫ |ξ|^{α-d} e^{-π|ξ|²} dξ; radial moments by Simpson
  auto radial = [](int d, double power) {
    // ∫_0^∞ r^{q-1} e^{-πr²} dr: termwise series on [0, 1], Simpson on [1, 7]
    const double q = d + power;
    double head = 0.0, term = 1.0;
    for (int k = 0; k < 60; ++k) {
      head += term / (q + 2.0 * k);
      term *= -pi / (k + 1);
    }
    return head + simpson([&](double r) { return std::pow(r, q - 1.0) * std::exp(-pi * r * r); }, 1.0, 7.0, 6000);
  };
  for (int d : {1, 2, 3})
    for (double alpha : {0.3, 0.5, 0.9 * d}) {
      const FracParams p = FracParams::operator_only(d, 0.25);
      const double lhs = radial(d, -alpha);
      const double rhs = std::pow(2.0 * pi, alpha) / fourier_constant(p, alpha) * radial(d, alpha - d);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-6) << "d=" << d << " alpha=" << alpha;
    }
}

TEST(FourierConstant, NumericalTransformOfTruncatedKernel) {
  // F(|x|^{-1/2})(1) = 2 ∫_0^∞ x^{-1/2} cos(2πx) dx over [0, N], N integer, plus the
  // integration-by-parts tail α N^{-α-1} / (4π²), extrapolated in N.
  const double alpha = 0.5;
  auto transform = [&](int N) {
    double head = 1.0 / (1.0 - alpha) +
                  simpson([&](double t) { return t == 0.0 ? 0.0 : 2.0 * (std::cos(2.0 * pi * t * t) - 1.0); }, 0.0,
                          1.0, 4000);  // x = t² on [0, 1]
    head += simpson([&](double x) { return std::pow(x, -alpha) * std::cos(2.0 * pi * x); }, 1.0, N, 400 * N);
    return 2.0 * (head + alpha * std::pow(N, -alpha - 1.0) / (4.0 * pi * pi));
  };
  const double f1 = transform(40), f2 = transform(80);
  const double extrapolated = f2 + (f2 - f1) / (std::pow(2.0, 3.5) - 1.0);
  const double c = std::pow(2.0 * pi, alpha) / extrapolated;
  EXPECT_NEAR(c / fourier_constant(FracParams::operator_only(1, 0.25), alpha), 1.0, 1e-6);
  EXPECT_THROW(fourier_constant(FracParams::operator_only(1, 0.25), 1.0), domain_error);
}

TEST(KernelDerivative, FiniteDifferenceIsFirstOrder) {
  const FracParams p(2, 0.3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.7, 0.7), ang(0.0, 2.0 * pi), rad(3.2, 3.8);
  for (int t = 0; t < 10; ++t) {
    const double th = ang(rng), r = rad(rng);
    const Point x{r * std::cos(th), r * std::sin(th)}, y{u(rng), u(rng)};
    for (int i = 0; i < 2; ++i) {
      const double exact = kernel_derivative(p, x, i, y);
      double prev = 0.0;
      for (double m : {10.0, 100.0, 1000.0}) {
        Point xm = x;
        xm[static_cast<std::size_t>(i)] += 1.0 / m;
        const double err = std::abs(m * (riesz_eval(p.kernel_exponent(), xm, y) - riesz_eval(p.kernel_exponent(), x, y)) - exact);
        if (prev > 0.0) {
          EXPECT_LT(err, 0.2 * prev);
        }
        prev = err;
      }
    }
  }
  EXPECT_EQ(kernel_derivative(p, Point{3.5, 0.2}, 1, Point{0.1, 0.2}), 0.0);
  EXPECT_THROW(kernel_derivative(p, Point{0.1, 0.1}, 0, Point{0.1, 0.1}), singularity_error);
}

TEST(LaplacianPowerCoeff, MatchesRepeatedLaplacian) {
  for (int d : {1, 2, 3}) {
    const FracParams p(d, 0.35);
    EXPECT_EQ(laplacian_power_coeff(p, 0), 1.0);
    double c = 1.0, beta = p.kernel_exponent();
    for (int m = 1; m <= 3; ++m) {
      c *= beta * (beta + d - 2.0);
      beta -= 2.0;
      EXPECT_NEAR(laplacian_power_coeff(p, m) / c, 1.0, 1e-14) << d << " " << m;
    }
  }
}

TEST(LaplacianPowerCoeff, FiniteDifferenceLaplacian) {
  // Δ|z|^β at a point by the 5-point stencil per axis
  const FracParams p(3, 0.4);
  const Point z{0.7, -0.4, 0.5};
  const double h = 1e-3, beta = p.kernel_exponent();
  double lap = 0.0;
  const Point o(3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    auto f = [&](double dz) {
      Point w = z;
      w[i] += dz;
      return riesz_eval(beta, o, w);
    };
    lap += (-f(2 * h) + 16 * f(h) - 30 * f(0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h);
  }
  EXPECT_NEAR(lap / (laplacian_power_coeff(p, 1) * std::pow(norm(z), beta - 2.0)), 1.0, 1e-8);
}

TEST(ExpKernelSeries, TrivialCasesAndMTest) {
  const FracParams p(2, 0.25);
  const Point x{3.0, 0.5}, y{0.2, -0.3};
  const double k = riesz_eval(p.kernel_exponent(), x, y);
  EXPECT_EQ(exp_kernel_series(p, x, 0.7, y, 0), k);
  for (int M : {0, 3, 9}) EXPECT_EQ(exp_kernel_series(p, x, 0.0, y, M), k);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.7, 0.7), tt(0.1, 2.0), far(2.0, 6.0), ang(0.0, 2.0 * pi);
  for (int trial = 0; trial < 50; ++trial) {
    const double th = ang(rng), r = 1.0 + far(rng);
    const Point xs{r * std::cos(th), r * std::sin(th)}, ys{u(rng), u(rng)};
    const double t = tt(rng), dist = distance(xs, ys);
    const double exact = std::pow(dist, p.kernel_exponent()) * std::exp(-t / (dist * dist));
    for (int M : {4, 8, 12}) {
      const double err = std::abs(exp_kernel_series(p, xs, t, ys, M) - exact);
      // the reference itself carries a few ulps
      EXPECT_LE(err, exp_kernel_series_tail(p, xs, t, ys, M) + 8e-16 * exact);
    }
  }
  const Point xf{3.2, 0.0}, yf{0.9, 0.0};
  const double dist = distance(xf, yf);
  EXPECT_NEAR(exp_kernel_series(p, xf, 1.0, yf, 12),
              std::pow(dist, p.kernel_exponent()) * std::exp(-1.0 / (dist * dist)), 1e-8);
}

TEST(GammaShift, ClosedFormAtAllAlphas) {
  const QuadratureSpec q;
  for (auto [d, s] : {std::pair{1, 0.3}, {2, 0.5}, {3, 0.25}}) {
    const FracParams p(d, s);
    const Point x = unit_vector(d, 0);
    Point y(static_cast<std::size_t>(d), 0.0);
    y[0] = -2.5;
    const double r = distance(x, y);
    for (double alpha : {0.0, 0.5, 1.0, (d - 2.0 - 2.0 * s) / 2.0, (d - 2.0 * s) / 2.0, (2.0 + d - 2.0 * s) / 2.0}) {
      if (!(alpha > -1.0)) {
        continue;
      }
      const QuadResult g = gamma_shift(p, x, alpha, y, q);
      const double exact = std::tgamma(alpha + 1.0) * std::pow(r, p.kernel_exponent() + 2.0 * alpha + 2.0);
      EXPECT_NEAR(g.value / exact, 1.0, 1e-6) << d << " " << alpha;
      EXPECT_LE(std::abs(g.value - exact), std::max(g.error, 1e-12 * exact) * 10.0);
    }
    // K₂ and K₄ recovery
    EXPECT_NEAR(gamma_shift(p, x, (d - 2.0 * s) / 2.0, y, q).value / std::tgamma((d - 2.0 * s) / 2.0 + 1.0), r * r,
                1e-6 * r * r);
    EXPECT_NEAR(gamma_shift(p, x, (2.0 + d - 2.0 * s) / 2.0, y, q).value / std::tgamma((2.0 + d - 2.0 * s) / 2.0 + 1.0),
                std::pow(r, 4), 1e-6 * std::pow(r, 4));
  }
}

TEST(RepresentationConstant, InverseOfFourierFactor) {
  const FracParams p(2, 0.5);
  EXPECT_NEAR(representation_constant(p) * std::pow(2.0 * pi, 2), fourier_constant(p, 1.0), 1e-14);
}
