// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/cli.hpp"
#include "fraclab/fraclab.hpp"

using namespace fraclab;
using std::numbers::pi;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Point gauss_point(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n;
  Point x(static_cast<std::size_t>(d));
  for (double& v : x) v = n(rng);
  return x;
}

Point ball_point(std::mt19937_64& rng, int d, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Point x(static_cast<std::size_t>(d));
  do {
    for (double& v : x) v = u(rng);
  } while (norm(x) > 1.0);
  for (double& v : x) v *= radius;
  return x;
}

// 1 --------------------------------------------------------------------------
Verdict reflection_algebra() {
  std::mt19937_64 rng(101);
  double iso = 0.0, inv = 0.0, fix = 0.0, expand = 0.0, jac = 0.0;
  for (int t = 0; t < 3000; ++t) {
    const int d = 1 + t % 3;
    const Point a = gauss_point(rng, d), x = gauss_point(rng, d), y = gauss_point(rng, d);
    const ReflectionMap R(a);
    const Point xr = R(x), yr = R(y);
    iso = std::max(iso, std::abs(distance(xr, yr) - distance(x, y)) / (1.0 + distance(x, y)));
    inv = std::max(inv, distance(R(xr), x));
    Point z = gauss_point(rng, d);
    const double t0 = (dot(a, a) - dot(z, a)) / dot(a, a);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += t0 * a[i];
    fix = std::max(fix, distance(R(z), z) / (1.0 + norm(z)));
    const double aa = dot(a, a), ax = dot(a, x), ay = dot(a, y);
    const double e1 = dot(x, x) + 4.0 * (aa - ax), e2 = dot(x, y) + 2.0 * (2.0 * aa - ax - ay);
    expand = std::max({expand, std::abs(dot(xr, xr) - e1) / (1.0 + std::abs(e1)),
                       std::abs(dot(xr, yr) - e2) / (1.0 + std::abs(e2))});
    jac = std::max(jac, std::abs(jacobian_sign(R) + 1.0));
  }
  const double worst = std::max({iso, inv, fix, expand, jac});
  return {worst <= 1e-12, fmt("3000 instances, isometry %.1e involution %.1e fixed %.1e expansions %.1e |J+1| %.1e (tol 1e-12)",
                              iso, inv, fix, expand, jac)};
}

// 2 --------------------------------------------------------------------------
Verdict half_point_reflection() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 3;
    Point x0;
    do {
      x0 = ball_point(rng, d, 1.0);
    } while (norm(x0) < 1e-6 || norm(x0) >= 1.0);
    Point a = x0;
    for (double& v : a) v *= 0.5;
    worst = std::max(worst, norm(ReflectionMap(a)(x0)));
  }
  return {worst <= 1e-14, fmt("100 points, max |R(x0)| %.1e (tol 1e-14)", worst)};
}

// 3 --------------------------------------------------------------------------
Verdict monomials() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int d : {1, 2, 3})
    for (int t = 0; t < 100; ++t) {
      Point x = ball_point(rng, d, 1.0);
      x[0] += 3.5;
      const Point y = ball_point(rng, d, 1.0);
      for (int i = 0; i < d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        worst = std::max(worst, std::abs(monomial_recovery(x, i)(y) - y[ui]));
        for (int j = 0; j < d; ++j)
          worst = std::max(worst, std::abs(monomial_recovery(x, i, j)(y) - y[ui] * y[static_cast<std::size_t>(j)]));
      }
    }
  return {worst <= 1e-10, fmt("300 pairs in d=1,2,3, max error %.1e (tol 1e-10)", worst)};
}

// 4 --------------------------------------------------------------------------
Verdict spectral_vs_pv() {
  std::mt19937_64 rng(404);
  std::string detail;
  bool ok = true;
  for (auto [d, s] : {std::pair{1, 0.2}, {1, 0.4}, {2, 0.5}}) {
    const FracParams p = FracParams::operator_only(d, s);
    const ScalarField g = fields::gaussian(d);
    const PeriodicGrid grid = d == 1 ? PeriodicGrid{1, 8192, 400.0} : PeriodicGrid{2, 512, 24.0};
    const SpectralResult spec = spectral_eval(g, grid, s);
    std::vector<Point> xs;
    for (int i = 0; i < 20; ++i) xs.push_back(ball_point(rng, d, 1.0));
    std::vector<double> rel(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
      const double pv = pv_eval(g, xs[i], p).value;
      rel[i] = std::abs(spec.at(xs[i]) - pv) / std::abs(pv);
    });
    double worst = 0.0;
    for (double r : rel) worst = std::max(worst, r);
    ok = ok && worst < 1e-3;
    detail += fmt("(%d,%.1f) %.1e; ", d, s, worst);
  }
  // moment integral ∫ (2π|ξ|)^{2s} e^{-πξ²} dξ with ξ = u²
  const double s = 0.25;
  const double oracle = 2.0 * simpson(
                                  [&](double u) {
                                    const double xi = u * u;
                                    return 2.0 * u * std::pow(2.0 * pi * xi, 2.0 * s) * std::exp(-pi * xi * xi);
                                  },
                                  0.0, 3.0, 20000);
  const double at0 = pv_eval(fields::gaussian(1), Point{0.0}, FracParams(1, s)).value;
  const bool near = std::abs(at0 - oracle) < 1e-3 && std::abs(oracle - 1.302) < 1e-3;
  return {ok && near, detail + fmt("20 pts each, max rel diff (tol 1e-3); value at 0 %.10f vs oracle %.10f", at0, oracle)};
}

// 5 --------------------------------------------------------------------------
Verdict getoor() {
  std::mt19937_64 rng(505);
  std::string detail;
  bool ok = true;
  for (auto [d, s] : {std::pair{1, 0.25}, {2, 0.5}}) {
    const FracParams p(d, s);
    const double cg = getoor_constant(p);
    const ScalarField u = fields::getoor_profile(d, s, cg);
    std::vector<Point> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(ball_point(rng, d, 0.8));
    std::vector<double> err(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { err[i] = std::abs(pv_eval(u, xs[i], p).value - 1.0); });
    double worst = 0.0;
    for (double e : err) worst = std::max(worst, e);
    ok = ok && worst < 1e-2;
    detail += fmt("(%d,%.2f) c_G %.10f max |Tu-1| %.1e; ", d, s, cg, worst);
  }
  return {ok, detail + "10 pts each, |x| <= 0.8 (tol 1e-2)"};
}

// 6 --------------------------------------------------------------------------
Verdict fourier_identity() {
  std::mt19937_64 rng(606);
  std::string detail;
  bool ok = true;
  for (auto [d, s] : {std::pair{1, 0.3}, {2, 0.5}}) {
    const FracParams p(d, s);
    const auto centers = dictionary_centers(d, 4);
    const DictionaryPotential g(p, AnnulusGeometry::unit(d), centers, {1.0, -0.5, 0.25, 1.0}, 0.1);
    std::vector<Point> xs = centers;
    xs.push_back(Point(static_cast<std::size_t>(d), 0.0));
    xs.push_back(unit_vector(d, 0));
    for (int i = 0; i < 3; ++i) xs.push_back(ball_point(rng, d, 1.0));
    std::vector<IdentityPair> ids(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { ids[i] = fourier_identity_eval(g, xs[i]); });
    double center = 0.0, outside = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i < centers.size())
        center = std::max(center, std::abs(ids[i].lhs - ids[i].rhs) / std::abs(ids[i].rhs));
      else
        outside = std::max(outside, std::abs(ids[i].lhs));
    }
    ok = ok && center < 1e-2 && outside < 1e-3;
    detail += fmt("(%d,%.1f) centers rel %.1e, |lhs| on B1 %.1e; ", d, s, center, outside);
  }
  return {ok, detail + "4 centers, 5 pts of B1 (tol 1e-2, 1e-3)"};
}

// 7 --------------------------------------------------------------------------
Verdict representation() {
  const FracParams p(1, 0.25);
  double spec = 0.0, pv = 0.0;
  RepresentationOptions pv_opt;
  pv_opt.inner = InnerOperator::PrincipalValue;
  for (double x : {0.0, 0.35, -0.8}) {
    spec = std::max(spec, representation_check(fields::gaussian(1), Point{x}, p).residual);
    pv = std::max(pv, representation_check(fields::gaussian(1), Point{x}, p, {}, pv_opt).residual);
  }
  return {spec < 1e-2 && pv < 1e-2, fmt("3 pts, residual spectral inner %.1e, PV inner %.1e (tol 1e-2)", spec, pv)};
}

// 8 --------------------------------------------------------------------------
Verdict commutation() {
  const FracParams p(1, 0.3);
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  QuadratureSpec coarse;
  coarse.radial_order = 4;
  coarse.panels_per_decade = 1;
  coarse.near_decades = 1;
  coarse.angular_nodes = 4;
  coarse.estimate_error = false;
  double worst = 0.0, worst_ratio = INFINITY;
  for (int t = 0; t < 5; ++t) {
    Point a{u(rng)};
    if (std::abs(a[0]) < 0.05) a[0] += 0.1;
    const ReflectionMap R(a);
    const Point x{u(rng)};
    worst = std::max(worst, commutation_residual(fields::gaussian(1), R, x, p).residual);
    const double r0 = commutation_residual(fields::gaussian(1), R, x, p, coarse).residual;
    const double r1 = commutation_residual(fields::gaussian(1), R, x, p, coarse.refined()).residual;
    worst_ratio = std::min(worst_ratio, r0 / r1);
  }
  return {worst < 1e-3 && worst_ratio >= 2.0,
          fmt("5 reflections, max residual %.1e (tol 1e-3); coarse->refined reduction >= %.1fx (need 2x)", worst,
              worst_ratio)};
}

// 9 --------------------------------------------------------------------------
Verdict ladder() {
  const FracParams p(1, 0.25);
  const Point x{3.5};
  const ScalarField k = riesz_kernel_field(x, p);
  std::string detail = "mollified C0 errors";
  bool ok = true;
  double prev = INFINITY;
  for (double m : {2.0, 4.0, 8.0, 16.0}) {
    const double e = ck_norm(fields::difference(mollified_kernel_sequence(x, m, p), k), Ball{{0.0}, 1.0}, 0);
    ok = ok && e < prev;
    prev = e;
    detail += fmt(" %.1e", e);
  }
  ok = ok && prev < 1e-2;
  // M-test on points at distance >= 2 from the unit ball
  const FracParams q(2, 0.4);
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * pi), rad(3.0, 6.0), tt(0.1, 2.0);
  double excess = 0.0;
  for (int t = 0; t < 200; ++t) {
    const double th = ang(rng), r = rad(rng);
    const Point xs{r * std::cos(th), r * std::sin(th)}, ys = ball_point(rng, 2, 1.0);
    const double tv = tt(rng), dist = distance(xs, ys);
    const double exact = std::pow(dist, q.kernel_exponent()) * std::exp(-tv / (dist * dist));
    for (int M : {4, 8, 12}) {
      const double err = std::abs(exp_kernel_series(q, xs, tv, ys, M) - exact);
      excess = std::max(excess, err - exp_kernel_series_tail(q, xs, tv, ys, M) - 8e-16 * exact);
    }
  }
  ok = ok && excess <= 0.0;
  double gamma = 0.0;
  for (auto [d, s] : {std::pair{1, 0.3}, {2, 0.5}, {3, 0.25}}) {
    const FracParams g(d, s);
    const Point xa = unit_vector(d, 0);
    Point ya(static_cast<std::size_t>(d), 0.0);
    ya[0] = -2.5;
    const double r = distance(xa, ya);
    for (double alpha : {0.0, 0.5, 1.0, (d - 2.0 - 2.0 * s) / 2.0, (d - 2.0 * s) / 2.0, (2.0 + d - 2.0 * s) / 2.0}) {
      if (!(alpha > -1.0)) continue;
      const double exact = std::tgamma(alpha + 1.0) * std::pow(r, g.kernel_exponent() + 2.0 * alpha + 2.0);
      gamma = std::max(gamma, std::abs(gamma_shift(g, xa, alpha, ya, {}).value / exact - 1.0));
    }
  }
  ok = ok && gamma < 1e-6;
  return {ok, detail + fmt(" (decreasing, final < 1e-2); series over M-tail %s; gamma_shift max rel %.1e (tol 1e-6)",
                           excess <= 0.0 ? "never" : "EXCEEDED", gamma)};
}

// 10 -------------------------------------------------------------------------
Verdict density() {
  const FracParams p(1, 0.3);
  const Ball b{{0.0}, 1.0};
  const std::vector<int> counts{4, 8, 16, 32, 64};
  std::string detail;
  bool ok = true;
  const std::pair<const char*, ScalarField> targets[] = {{"1", fields::constant(1, 1.0)}, {"y1", fields::coordinate(1, 0)}};
  for (double reg : {1e-10, 0.0}) {
    for (const auto& [name, target] : targets) {
      const auto lad = fit_dictionary_ladder(target, b, 0, counts, p, reg);
      bool mono = true;
      for (std::size_t i = 1; i < lad.size(); ++i) mono = mono && lad[i].achieved_c0_error <= lad[i - 1].achieved_c0_error;
      ok = ok && mono && lad.back().achieved_c0_error < 1e-2;
      detail += fmt("%s reg %g: %.1e -> %.1e%s; ", name, reg, lad.front().achieved_c0_error, lad.back().achieved_c0_error,
                    mono ? "" : " NOT MONOTONE");
    }
  }
  return {ok, detail + "counts 4..64 (tol 1e-2, non-increasing)"};
}

// 11 -------------------------------------------------------------------------
Verdict obstruction() {
  const FracParams p(1, 0.25);
  const ScalarField u = fields::poly_bump(1, 4.0);
  const auto f = ReactionFunction::affine(1.0, 1.0);
  const ObstructionReport rep = obstruction_chain(u, f, Point{0.5}, 32, p);
  bool ok = rep.completed() && rep.bound_holds() && rep.necessary_residual == -0.68359375;
  std::string detail = fmt("default: |pv| %.2e <= bound %.2e + err %.1e; residual %.8f; ", std::abs(rep.measured_pv),
                           rep.bound_value, rep.measured_error, rep.necessary_residual);
  ObstructionOptions opt;
  opt.reg = 0.0;
  double lo = INFINITY, hi = 0.0;
  detail += "reg 0 eps:";
  for (int n : {8, 16, 32, 64}) {
    const ObstructionReport r = obstruction_chain(u, f, Point{0.5}, n, p, {}, opt);
    ok = ok && r.completed() && r.bound_holds();
    const double q = r.bound_value / r.fit_error_c2;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
    detail += fmt(" %.1e", r.fit_error_c2);
  }
  ok = ok && hi / lo - 1.0 < 1e-12;
  return {ok, detail + fmt(", bound/eps spread %.1e (linear)", hi / lo - 1.0)};
}

// 12 -------------------------------------------------------------------------
Verdict constant_exclusion() {
  const FracParams p(1, 0.25);
  const double c = 1.0;
  const auto [t0, t1] = constant_exclusion_check(c, p);
  const double closed = pv_constant(p) * c / p.s();
  const double err = std::abs(t0.value - closed);
  const double ratio = t1.value / t0.value;
  return {err <= 1e-10 && ratio > 1.1, fmt("T(0) %.12f vs %.12f (err %.1e, tol 1e-10); T(0.8)/T(0) %.4f (> 1.1)",
                                           t0.value, closed, err, ratio)};
}

// 13 -------------------------------------------------------------------------
Verdict determinism() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "fraclab_acceptance";
  fs::remove_all(base);
  auto once = [&](const std::string& name) {
    const std::string out = (base / name).string();
    const char* argv[] = {"fraclab", "verify", "--d", "1", "--s", "0.25", "--seed", "7", "--out", out.c_str()};
    std::ostringstream sink;
    const int code = cli::run(10, argv, sink, sink);
    std::ifstream in(base / name / "verify.json", std::ios::binary);
    return std::pair{code, std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};
  };
  const auto a = once("a"), b = once("b");
  fs::remove_all(base);
  const bool same = !a.second.empty() && a.second == b.second;
  return {same && a.first == 0, fmt("two verify runs: exit %d/%d, %zu bytes, %s", a.first, b.first, a.second.size(),
                                    same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all{
      {1, "reflection algebra", 1.0, reflection_algebra},
      {2, "R_{x0/2}(x0) = 0", 1.0, half_point_reflection},
      {3, "monomial recovery", 1.0, monomials},
      {4, "spectral vs PV on Gaussians", 30.0, spectral_vs_pv},
      {5, "Getoor solution", 60.0, getoor},
      {6, "Fourier identity", 60.0, fourier_identity},
      {7, "representation formula", 60.0, representation},
      {8, "commutation with reflections", 60.0, commutation},
      {9, "kernel ladder", 60.0, ladder},
      {10, "density by dictionary fits", 120.0, density},
      {11, "obstruction chain", 120.0, obstruction},
      {12, "constant exclusion", 10.0, constant_exclusion},
      {13, "determinism", 1e9, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = v.ok && secs < c.budget_s;
    failed += ok ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2f s%s]\n", ok ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                secs < c.budget_s ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed;
}
