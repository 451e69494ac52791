#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fraclab/io.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/potential.hpp"

using namespace fraclab;
using std::numbers::pi;

namespace {

template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

// random point at distance in [lo, hi) from c
Point point_in_shell(std::mt19937_64& rng, const Point& c, double lo, double hi) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x(c.size());
  for (double& v : x) v = n(rng);
  const double len = norm(x), r = lo + (hi - lo) * u(rng);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = c[i] + r * x[i] / len;
  return x;
}

}  // namespace

TEST(Support, CompactFieldsVanishExactlyOutside) {
  std::mt19937_64 rng(5);
  for (int d : {1, 2, 3}) {
    const Point o(static_cast<std::size_t>(d), 0.0);
    const Point a = point_in_shell(rng, o, 3.4, 3.6);
    const AnnulusGeometry U = AnnulusGeometry::unit(d);
    const FracParams p(d, 0.25);
    const DictionaryPotential g(p, U, {a}, {2.0}, 0.2);
    struct Case {
      ScalarField f;
      Point c;
      double r;
    };
    const std::vector<Case> cases{
        {fields::indicator(d, 3.0), o, 1.0},
        {fields::getoor_profile(d, 0.3), o, 1.0},
        {fields::poly_bump(d, 4.0), o, 1.0},
        {mollify_at(a, 8.0, U), a, 1.0 / 8.0},
        {fields::restricted(fields::gaussian(d), a, 0.7), a, 0.7},
    };
    for (const auto& cs : cases) {
      EXPECT_TRUE(cs.f.support().compact());
      for (int t = 0; t < 1000; ++t) EXPECT_EQ(cs.f(point_in_shell(rng, cs.c, cs.r * (1.0 + 1e-9), 6.0)), 0.0);
    }
    const ScalarField dens = g.density_field();
    for (int t = 0; t < 1000; ++t) {
      EXPECT_EQ(dens(point_in_shell(rng, o, 0.0, 3.0)), 0.0);
      EXPECT_EQ(dens(point_in_shell(rng, o, 4.0, 9.0)), 0.0);
    }
  }
}

TEST(Support, FiniteEverywhere) {
  std::mt19937_64 rng(9);
  const ScalarField fs[] = {fields::gaussian(2), fields::getoor_profile(2, 0.5), fields::poly_bump(2, 2.5)};
  for (const auto& f : fs)
    for (int t = 0; t < 1000; ++t) EXPECT_TRUE(std::isfinite(f(point_in_shell(rng, Point{0.0, 0.0}, 0.0, 2.0))));
  EXPECT_EQ(fields::getoor_profile(1, 0.5)(Point{1.0}), 0.0);
}

TEST(CkNorm, Examples) {
  const Ball b1{{0.0}, 1.0};
  EXPECT_EQ(ck_norm(fields::zero(1), b1, 3), 0.0);
  EXPECT_NEAR(ck_norm(fields::coordinate(1, 0), b1, 1), 2.0, 1e-10);
  // |x₀ - y|^{2s-d}, d = 1: sup over [-1, 1] of |K|, |K'|, |K''| sits at y = 1
  const FracParams p(1, 0.3);
  const double x0 = 3.5, beta = p.kernel_exponent(), r = x0 - 1.0;
  const double analytic = std::pow(r, beta) + std::abs(beta) * std::pow(r, beta - 1.0) +
                          std::abs(beta * (beta - 1.0)) * std::pow(r, beta - 2.0);
  const ScalarField k = fields::from_function(1, [&](std::span<const double> y) { return std::pow(x0 - y[0], beta); });
  EXPECT_NEAR(ck_norm(k, b1, 2, {257, 0.0}) / analytic, 1.0, 1e-6);
  EXPECT_THROW(ck_norm(fields::getoor_profile(1, 0.5), b1, 1), precondition_error);
  EXPECT_THROW(ck_norm(k, b1, 5), domain_error);
}

TEST(CkNorm, MonotoneInKAndTriangle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d : {1, 2}) {
    const Ball b{Point(static_cast<std::size_t>(d), 0.0), 1.0};
    for (int t = 0; t < 4; ++t) {
      Point c1(static_cast<std::size_t>(d)), c2(static_cast<std::size_t>(d));
      for (auto& v : c1) v = u(rng);
      for (auto& v : c2) v = u(rng);
      const ScalarField f = fields::gaussian(d, c1, u(rng)), g = fields::gaussian(d, c2, 2.0 * u(rng));
      double prev = -1.0;
      for (int k = 0; k <= 3; ++k) {
        const double nk = ck_norm(f, b, k);
        EXPECT_GE(nk, prev);
        prev = nk;
        EXPECT_LE(ck_norm(fields::sum(f, g), b, k), ck_norm(f, b, k) + ck_norm(g, b, k) + 1e-8);
      }
    }
  }
}

TEST(Mollifier, UnitMassAtEveryScale) {
  for (int d : {1, 2, 3})
    for (double m : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      const Mollifier z(d, m);
      // radial integral |S^{d-1}| ∫_0^{1/m} r^{d-1} ζ_m(r) dr
      Point e(static_cast<std::size_t>(d), 0.0);
      const double mass = sphere_measure(d) * simpson(
                                                  [&](double r) {
                                                    e[0] = r;
                                                    return std::pow(r, d - 1) * z(e);
                                                  },
                                                  0.0, 1.0 / m, 4000);
      EXPECT_NEAR(mass, 1.0, 1e-8) << d << " " << m;
      e[0] = 1.0 / m;
      EXPECT_EQ(z(e), 0.0);
    }
}

TEST(Cutoff, PlateauRangeAndSupport) {
  const AnnulusGeometry U = AnnulusGeometry::unit(2);
  const Point x{3.3, 0.2};
  const Cutoff xi = cutoff_at(U, x);
  std::mt19937_64 rng(4);
  for (int t = 0; t < 2000; ++t) {
    const Point y = point_in_shell(rng, x, 0.0, 1.0);
    const double v = xi(y);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (distance(y, x) <= xi.plateau()) {
      EXPECT_EQ(v, 1.0);
    }
    if (v > 0.0) {
      EXPECT_TRUE(U.contains(y));
    }
  }
  EXPECT_THROW(cutoff_at(U, Point{1.0, 0.0}), precondition_error);
  EXPECT_THROW(mollify_at(x, 1.0, U), precondition_error);
}

TEST(MollifyAt, IntegratesToOne) {
  const AnnulusGeometry U = AnnulusGeometry::unit(1);
  const Point x{3.5};
  for (double m : {8.0, 16.0}) {
    const ScalarField g = mollify_at(x, m, U);
    const double mass = simpson([&](double t) { return g(Point{t}); }, 3.5 - 1.0 / m, 3.5 + 1.0 / m, 4000);
    EXPECT_NEAR(mass, 1.0, 1e-8);
    EXPECT_EQ(g(Point{0.3}), 0.0);
  }
}

TEST(BumpPotential, ZeroCoefficientsAndReferenceValue) {
  const FracParams p(1, 0.25);
  const AnnulusGeometry U = AnnulusGeometry::unit(1);
  const DictionaryPotential zero(p, U, {{3.5}, {-3.5}}, {0.0, 0.0}, 0.4);
  EXPECT_EQ(zero.potential(Point{0.2}).value, 0.0);
  // reference: tanh-sinh-free Simpson of ∫ |y - z|^{-1/2} ζ_{0.4}(z - 3.5) dz
  const Mollifier z(1, 1.0 / 0.4);
  const double ref = simpson([&](double t) { return std::pow(t, -0.5) * z(Point{t - 3.5}); }, 3.1, 3.9, 200000);
  const DictionaryPotential g(p, U, {{3.5}}, {1.0}, 0.4);
  QuadratureSpec direct;
  direct.tabulate_bumps = false;
  EXPECT_NEAR(g.potential(Point{0.0}, direct).value, ref, 1e-6 * ref);
  EXPECT_NEAR(g.potential(Point{0.0}).value, ref, 1e-6 * ref);
}

TEST(BumpPotential, FarFieldMultipole) {
  for (auto [d, s] : {std::pair{1, 0.3}, {2, 0.5}, {3, 0.25}}) {
    const FracParams p(d, s);
    Point c(static_cast<std::size_t>(d), 0.0);
    c[0] = 3.5;
    const double scale = 0.05;
    const DictionaryPotential g(p, AnnulusGeometry::unit(d), {c}, {1.0}, scale);
    Point y(static_cast<std::size_t>(d), 0.0);
    y[0] = -0.5;
    const double lead = riesz_eval(p.kernel_exponent(), c, y);
    EXPECT_NEAR(g.potential(y).value / lead, 1.0, 10.0 * (scale / 4.0) * (scale / 4.0)) << d;
  }
}

TEST(BumpPotential, TableMatchesDirectQuadrature) {
  std::mt19937_64 rng(13);
  for (auto [d, s] : {std::pair{1, 0.25}, {2, 0.5}, {3, 0.5}}) {
    const FracParams p(d, s);
    const Point o(static_cast<std::size_t>(d), 0.0);
    const Point c = point_in_shell(rng, o, 3.4, 3.6);
    const DictionaryPotential g(p, AnnulusGeometry::unit(d), {c}, {1.0}, 0.1);
    QuadratureSpec direct;
    direct.tabulate_bumps = false;
    for (int t = 0; t < 5; ++t) {
      // inside the bump, near its edge, and far away
      const Point y = t == 0 ? c : point_in_shell(rng, c, t == 1 ? 0.05 : 0.1, t < 3 ? 0.2 : 8.0);
      const double a = g.potential(y).value, b = g.potential(y, direct).value;
      EXPECT_NEAR(a / b, 1.0, 1e-9) << d << " t=" << t;
    }
  }
}

TEST(Io, NumbersRoundTrip) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 6.02e23}) EXPECT_EQ(io::parse_number(io::format_number(v), "t"), v);
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
  EXPECT_THROW(io::parse_number("1.0x", "t"), domain_error);
  const auto pts = io::parse_points("0.1,0;0.5,0.5", 2, "t");
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1][1], 0.5);
  EXPECT_THROW(io::parse_points("0.1,0,3", 2, "t"), domain_error);
}

TEST(Io, CsvFieldInterpolatesAndVanishesOffGrid) {
  std::stringstream in;
  in << "x1,x2,value\n";
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) in << 0.25 * i - 0.5 << "," << 0.25 * j - 0.5 << "," << (0.25 * i - 0.5) + 2.0 * (0.25 * j - 0.5) << "\n";
  const ScalarField f = io::field_from_table(io::read_csv(in, "mem"), 2);
  EXPECT_NEAR(f(Point{0.1, -0.3}), 0.1 - 0.6, 1e-14);  // bilinear reproduces affine data
  EXPECT_EQ(f(Point{0.6, 0.0}), 0.0);
  EXPECT_TRUE(f.support().compact());
  std::stringstream bad("x1,value\n0,1\n0.5\n");
  EXPECT_THROW(io::read_csv(bad, "bad"), domain_error);
}
