#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "fraclab/fraclap.hpp"
#include "fraclab/io.hpp"
#include "fraclab/kernels.hpp"
#include "fraclab/moving_plane.hpp"
#include "fraclab/obstruction.hpp"
#include "fraclab/representation.hpp"
#include "fraclab/sharmonic.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab::cli {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::ordered_json;

struct RunConfig {
  int d = 1;
  double s = 0.25;
  QuadratureSpec quad{};
  std::uint64_t seed = 1;
  std::string out_dir = "fraclab-out";
  std::string format = "csv";  // eval / potential rows: csv or json
};

namespace detail {

inline json number(double v) { return std::isfinite(v) ? json(v) : json(io::format_number(v)); }

inline json point(std::span<const double> x) {
  json a = json::array();
  for (double v : x) a.push_back(number(v));
  return a;
}

inline json header(const std::string& command, const RunConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["d"] = cfg.d;
  j["s"] = cfg.s;
  j["seed"] = cfg.seed;
  return j;
}

inline std::filesystem::path output_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

inline void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
  std::ofstream f(output_path(cfg, name));
  f << j.dump(2) << '\n';
}

inline std::string starts(const std::string& spec, const std::string& prefix) {
  return spec.rfind(prefix, 0) == 0 ? spec.substr(prefix.size()) : std::string();
}

/// gaussian | getoor | indicator | bump | polybump:p | csv:PATH
inline ScalarField make_field(const std::string& spec, int d, double s, int csv_smoothness = 0) {
  if (spec == "gaussian") return fields::gaussian(d);
  if (spec == "getoor")
    return fields::getoor_profile(d, s, getoor_constant_closed_form(FracParams::operator_only(d, s)));
  if (spec == "indicator") return fields::indicator(d);
  if (spec == "bump") {
    Point c(static_cast<std::size_t>(d), 0.0);
    return ScalarField(d, [](std::span<const double> y) { return unit_bump(y); },
                       Support::ball(c, 1.0), kSmooth, {Feature{c, 1.0, false}});
  }
  if (auto p = starts(spec, "polybump:"); !p.empty()) return fields::poly_bump(d, io::parse_number(p, "polybump"));
  if (auto path = starts(spec, "csv:"); !path.empty())
    return io::field_from_table(io::read_csv_file(path), d, csv_smoothness);
  throw domain_error(fraclab::detail::concat("unknown field '", spec, "'"));
}

/// const | const:c | coord:i (1-based) | poly:c0,c1,... (in x1) | csv:PATH
inline ScalarField make_target(const std::string& spec, int d) {
  if (spec == "const") return fields::constant(d, 1.0);
  if (auto c = starts(spec, "const:"); !c.empty()) return fields::constant(d, io::parse_number(c, "const"));
  if (auto i = starts(spec, "coord:"); !i.empty()) {
    const double axis = io::parse_number(i, "coord");
    if (axis != std::floor(axis) || axis < 1 || axis > d)
      throw domain_error(fraclab::detail::concat("coord: axis must be an integer in [1, ", d, "]"));
    return fields::coordinate(d, static_cast<int>(axis) - 1);
  }
  if (auto c = starts(spec, "poly:"); !c.empty()) {
    const auto coeffs = io::parse_list(c, "poly");
    return fields::from_function(d, [coeffs](std::span<const double> y) {
      double acc = 0.0;
      for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * y[0] + *it;
      return acc;
    });
  }
  if (auto path = starts(spec, "csv:"); !path.empty())
    return io::field_from_table(io::read_csv_file(path), d, kSmooth);
  throw domain_error(fraclab::detail::concat("unknown target '", spec, "'"));
}

inline std::vector<Point> make_points(const std::string& spec, int d) {
  if (std::filesystem::exists(spec)) return io::read_points_file(spec, d);
  return io::parse_points(spec, d, "--points");
}

inline PeriodicGrid default_spectral_grid(int d) {
  if (d == 1) return {1, 8192, 400.0};
  if (d == 2) return {2, 512, 24.0};
  return {d, 96, 12.0};
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string field = "gaussian";
  std::string points = "0";
  std::string method = "pv";
  double tol = 0.0;
  int grid_n = 0;
  double box = 0.0;
};

inline int run_eval(const RunConfig& cfg, const EvalArgs& a, std::ostream& out) {
  const FracParams p = FracParams::operator_only(cfg.d, cfg.s);
  if (a.method != "pv" && a.method != "spectral" && a.method != "both")
    throw domain_error("--method must be pv, spectral or both");
  QuadratureSpec q = cfg.quad;
  if (a.tol > 0.0) q.tolerance = a.tol;
  const ScalarField u = make_field(a.field, cfg.d, cfg.s);
  const auto pts = make_points(a.points, cfg.d);
  auto hdr = io::coordinate_header(cfg.d);
  for (const char* c : {"value", "i1", "i2", "error_estimate"}) hdr.emplace_back(c);

  double worst = 0.0;
  auto emit = [&](const std::string& name, const std::vector<std::vector<double>>& rows) {
    if (cfg.format == "json") {
      json j = header("eval", cfg);
      j["field"] = a.field;
      j["method"] = name;
      j["columns"] = hdr;
      j["rows"] = json::array();
      for (const auto& r : rows) j["rows"].push_back(point(r));
      write_json(cfg, "eval_" + name + ".json", j);
    } else {
      std::ofstream f(output_path(cfg, "eval_" + name + ".csv"));
      io::CsvWriter w(f, hdr);
      for (const auto& r : rows) w.row(r);
    }
  };
  if (a.method == "pv" || a.method == "both") {
    std::vector<std::vector<double>> rows(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
      const PvResult r = pv_eval(u, pts[i], p, q);
      rows[i] = pts[i];
      rows[i].insert(rows[i].end(), {r.value, r.i1_estimate, r.i2_estimate, r.error_estimate});
    });
    for (const auto& r : rows) worst = std::max(worst, r.back());
    emit("pv", rows);
  }
  if (a.method == "spectral" || a.method == "both") {
    PeriodicGrid g = default_spectral_grid(cfg.d);
    if (a.grid_n > 0) g.n = a.grid_n;
    if (a.box > 0.0) g.length = a.box;
    PeriodicGrid coarse = g;
    coarse.n = g.n / 2;
    const SpectralResult fine = spectral_eval(u, g, cfg.s);
    const SpectralResult half = spectral_eval(u, coarse, cfg.s);
    std::vector<std::vector<double>> rows;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& x : pts) {
      const double v = fine.at(x);
      std::vector<double> r = x;
      r.insert(r.end(), {v, nan, nan, std::abs(v - half.at(x))});
      worst = std::max(worst, r.back());
      rows.push_back(std::move(r));
    }
    emit("spectral", rows);
    if (fine.aliasing_warning) out << "warning: spectral grid under-resolves the field\n";
  }
  out << "eval: " << pts.size() << " point(s), field " << a.field << ", method " << a.method
      << ", max error estimate " << io::format_number(worst) << " -> " << cfg.out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct PotentialArgs {
  std::string centers = "3.5";
  std::string coeffs = "1";
  double scale = 0.1;
  double radius = 1.0;
  std::string points = "0";
  bool direct = false;
};

inline int run_potential(const RunConfig& cfg, const PotentialArgs& a, std::ostream& out) {
  const FracParams p(cfg.d, cfg.s);
  QuadratureSpec q = cfg.quad;
  q.tabulate_bumps = !a.direct;
  auto centers = io::parse_points(a.centers, cfg.d, "--centers");
  const auto coeffs = io::parse_list(a.coeffs, "--coeffs");
  const DictionaryPotential g(p, AnnulusGeometry{Point(static_cast<std::size_t>(cfg.d), 0.0), a.radius},
                              std::move(centers), coeffs, a.scale);
  const auto pts = make_points(a.points, cfg.d);
  std::vector<QuadResult> res(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { res[i] = g.potential(pts[i], q); });
  auto hdr = io::coordinate_header(cfg.d);
  hdr.emplace_back("value");
  hdr.emplace_back("error_estimate");
  if (cfg.format == "json") {
    json j = header("potential", cfg);
    j["columns"] = hdr;
    j["rows"] = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      json r = point(pts[i]);
      r.push_back(number(res[i].value));
      r.push_back(number(res[i].error));
      j["rows"].push_back(r);
    }
    write_json(cfg, "potential.json", j);
  } else {
    std::ofstream f(output_path(cfg, "potential.csv"));
    io::CsvWriter w(f, hdr);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto r = pts[i];
      r.insert(r.end(), {res[i].value, res[i].error});
      w.row(r);
    }
  }
  out << "potential: " << pts.size() << " point(s), " << g.size() << " bump(s) -> " << cfg.out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline json fit_json(const FitReport& r) {
  json j;
  j["k"] = r.k;
  j["region"] = {{"center", point(r.region.center)}, {"radius", r.region.radius}};
  j["centers_used"] = r.centers_used;
  j["achieved_c0_error"] = number(r.achieved_c0_error);
  j["achieved_ck_error"] = number(r.achieved_ck_error);
  j["condition_estimate"] = number(r.condition_estimate);
  j["regularization"] = number(r.regularization);
  const auto& g = r.potential;
  json pot;
  pot["annulus"] = {{"center", point(g.geometry().center)}, {"radius", g.geometry().radius}};
  pot["scale"] = g.scale();
  pot["centers"] = json::array();
  for (const auto& c : g.centers()) pot["centers"].push_back(point(c));
  pot["coefficients"] = point(g.coefficients());
  j["potential"] = pot;
  j["warnings"] = r.warnings;
  return j;
}

struct ApproxArgs {
  std::string target = "const";
  int k = 0;
  int centers = 32;
  double radius = 1.0;
  std::string center;
  double reg = 1e-10;
};

inline int run_approx(const RunConfig& cfg, const ApproxArgs& a, std::ostream& out) {
  const FracParams p(cfg.d, cfg.s);
  const ScalarField target = make_target(a.target, cfg.d);
  Point c(static_cast<std::size_t>(cfg.d), 0.0);
  if (!a.center.empty()) c = io::parse_points(a.center, cfg.d, "--center").front();
  const Ball region{c, a.radius};
  const FitReport rep = fit_dictionary(target, region, a.k, a.centers, p, a.reg, cfg.quad);
  json j = header("approx", cfg);
  j["target"] = a.target;
  j["fit"] = fit_json(rep);
  write_json(cfg, "approx.json", j);

  const ScalarField fit = rep.potential.potential_field(cfg.quad);
  const auto pts = ball_grid(region, FitOptions{}.points_per_axis);
  std::ofstream f(output_path(cfg, "approx.csv"));
  auto hdr = io::coordinate_header(cfg.d);
  for (const char* h : {"target", "fit", "error"}) hdr.emplace_back(h);
  io::CsvWriter w(f, hdr);
  for (const auto& x : pts) {
    const double t = target(x), v = fit(x);
    auto r = x;
    r.insert(r.end(), {t, v, t - v});
    w.row(r);
  }
  out << "approx: " << rep.centers_used << " centers, C^" << a.k << " error "
      << io::format_number(rep.achieved_ck_error) << ", C^0 error " << io::format_number(rep.achieved_c0_error)
      << " -> " << cfg.out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ReflectArgs {
  std::string a = "0.5";
  std::string check = "isometry";
  std::string field = "gaussian";
  int trials = 100;
};

inline int run_reflect(const RunConfig& cfg, const ReflectArgs& args, std::ostream& out) {
  const FracParams p = FracParams::operator_only(cfg.d, cfg.s);
  const ReflectionMap R(io::parse_points(args.a, cfg.d, "--a").front());
  if (args.trials < 1) throw domain_error("--trials must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  auto draw = [&] {
    Point x(static_cast<std::size_t>(cfg.d));
    for (double& v : x) v = unif(rng);
    return x;
  };
  json j = header("reflect", cfg);
  j["a"] = point(R.a());
  j["check"] = args.check;
  j["trials"] = args.trials;
  j["jacobian_sign"] = jacobian_sign(R);
  double max_res = 0.0, max_err = 0.0;
  if (args.check == "isometry" || args.check == "involution") {
    for (int t = 0; t < args.trials; ++t) {
      const Point x = draw(), y = draw();
      const double r = args.check == "isometry" ? std::abs(distance(R(x), R(y)) - distance(x, y))
                                                : distance(R(R(x)), x);
      max_res = std::max(max_res, r);
    }
  } else if (args.check == "commutation") {
    const ScalarField u = make_field(args.field, cfg.d, cfg.s);
    std::vector<Point> xs;
    for (int t = 0; t < args.trials; ++t) {
      Point x = draw();
      for (double& v : x) v *= 0.5;
      xs.push_back(std::move(x));
    }
    std::vector<CommutationResult> res(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { res[i] = commutation_residual(u, R, xs[i], p, cfg.quad); });
    for (const auto& r : res) {
      max_res = std::max(max_res, r.residual);
      max_err = std::max(max_err, r.error_estimate);
    }
    j["field"] = args.field;
    j["max_error_estimate"] = number(max_err);
  } else {
    throw domain_error("--check must be isometry, involution or commutation");
  }
  j["max_residual"] = number(max_res);
  write_json(cfg, "reflect.json", j);
  out << "reflect: " << args.check << " over " << args.trials << " trial(s), max residual "
      << io::format_number(max_res) << " -> " << cfg.out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

inline json obstruction_json(const ObstructionReport& r) {
  json j;
  j["x0"] = point(r.x0);
  j["status"] = r.status;
  j["r0"] = r.r0;
  j["r1"] = r.r1;
  j["fit_error_c2"] = number(r.fit_error_c2);
  j["fit_error_c0"] = number(r.fit_error_c0);
  j["bound_value"] = number(r.bound_value);
  j["rigorous_bound_value"] = number(r.rigorous_bound_value);
  j["measured_pv"] = number(r.measured_pv);
  j["measured_error"] = number(r.measured_error);
  j["i1"] = number(r.i1);
  j["i2"] = number(r.i2);
  j["g_at_x0"] = number(r.g_at_x0);
  j["condition_estimate"] = number(r.condition_estimate);
  j["centers_used"] = r.centers_used;
  j["u_x0"] = number(r.u_x0);
  j["u_0"] = number(r.u_0);
  j["necessary_residual"] = number(r.necessary_residual);
  j["declared_in_J"] = r.declared_in_J;
  j["bound_holds"] = r.bound_holds();
  j["warnings"] = r.warnings;
  return j;
}

struct ObstructArgs {
  std::string candidate = "polybump:4";
  std::string reaction = "affine:1,1";
  std::string x0;
  int scan = 0;
  int centers = 32;
  double reg = 1e-10;
  int csv_smoothness = 0;
};

inline ReactionFunction make_reaction(const std::string& spec) {
  if (auto ab = starts(spec, "affine:"); !ab.empty()) {
    const auto v = io::parse_list(ab, "affine");
    if (v.size() != 2) throw domain_error("affine reaction needs two coefficients a,b");
    return ReactionFunction::affine(v[0], v[1]);
  }
  if (auto path = starts(spec, "expr-table:"); !path.empty()) {
    const auto t = io::read_csv_file(path);
    if (t.header.size() != 2) throw domain_error("expr-table: expected two columns t,f");
    std::vector<std::pair<double, double>> samples;
    for (const auto& r : t.rows) samples.emplace_back(r[0], r[1]);
    return ReactionFunction::table(std::move(samples));
  }
  throw domain_error(fraclab::detail::concat("unknown reaction '", spec, "'"));
}

inline int run_obstruct(const RunConfig& cfg, const ObstructArgs& a, std::ostream& out) {
  const FracParams p(cfg.d, cfg.s);
  const ScalarField u = make_field(a.candidate, cfg.d, cfg.s, a.csv_smoothness);
  const ReactionFunction f = make_reaction(a.reaction);
  if (a.x0.empty() == (a.scan == 0)) throw domain_error("give exactly one of --x0 and --scan");
  std::vector<Point> pts =
      a.scan > 0 ? radial_scan_points(cfg.d, a.scan) : io::parse_points(a.x0, cfg.d, "--x0");
  ObstructionOptions opt;
  opt.reg = a.reg;
  std::vector<ObstructionReport> reps(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { reps[i] = obstruction_chain(u, f, pts[i], a.centers, p, cfg.quad, opt); });

  json j = header("obstruct", cfg);
  j["candidate"] = a.candidate;
  j["reaction"] = f.label();
  j["reports"] = json::array();
  for (const auto& r : reps) j["reports"].push_back(obstruction_json(r));
  write_json(cfg, "obstruct.json", j);

  std::ofstream csv(output_path(cfg, "obstruct.csv"));
  auto hdr = io::coordinate_header(cfg.d);
  for (const char* h : {"necessary_residual", "measured_pv", "measured_error", "bound_value"}) hdr.emplace_back(h);
  io::CsvWriter w(csv, hdr);
  double worst = 0.0;
  for (const auto& r : reps) {
    auto row = r.x0;
    row.insert(row.end(), {r.necessary_residual, r.measured_pv, r.measured_error, r.bound_value});
    w.row(row);
    worst = std::max(worst, std::abs(r.necessary_residual));
  }
  out << "obstruct: " << reps.size() << " point(s), max |f(u(x0)) - f(u(0))| = " << io::format_number(worst) << " -> "
      << cfg.out_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  double error_estimate = 0.0;
  bool passed = false;
};

/// Runs the identity suite at (d, s). Points come from cfg.seed.
inline std::vector<Check> verify_suite(const RunConfig& cfg) {
  const FracParams p(cfg.d, cfg.s);
  const int d = cfg.d;
  const QuadratureSpec& q = cfg.quad;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto draw = [&](double radius) {
    Point x(static_cast<std::size_t>(d));
    do {
      for (double& v : x) v = unif(rng);
    } while (norm(x) > 1.0);
    for (double& v : x) v *= radius;
    return x;
  };
  std::vector<Check> out;
  auto add = [&](std::string name, double residual, double tol, double err = 0.0) {
    out.push_back({std::move(name), residual, tol, err, residual <= tol});
  };
  const ScalarField gauss = fields::gaussian(d);

  {  // spectral vs PV
    std::vector<Point> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(draw(1.0));
    const SpectralResult spec = spectral_eval(gauss, default_spectral_grid(d), cfg.s);
    std::vector<PvResult> pv(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { pv[i] = pv_eval(gauss, xs[i], p, q); });
    double worst = 0.0, err = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      worst = std::max(worst, std::abs(spec.at(xs[i]) - pv[i].value) / std::abs(pv[i].value));
      err = std::max(err, pv[i].error_estimate);
    }
    add("spectral_vs_pv", worst, 1e-3, err);
  }
  {  // Fourier identity on a fixed four-bump dictionary
    const auto centers = dictionary_centers(d, 4);
    const DictionaryPotential g(p, AnnulusGeometry::unit(d), centers, {1.0, -0.5, 0.25, 1.0}, 0.1);
    const IdentityPair at_center = fourier_identity_eval(g, centers[0], q);
    add("fourier_identity_center", std::abs(at_center.lhs - at_center.rhs) / std::abs(at_center.rhs), 1e-2,
        at_center.error_estimate);
    std::vector<Point> xs{Point(static_cast<std::size_t>(d), 0.0), draw(1.0), unit_vector(d, 0)};
    if (d >= 3) xs.resize(1);  // each d = 3 point costs tens of seconds
    std::vector<IdentityPair> ids(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { ids[i] = fourier_identity_eval(g, xs[i], q); });
    double worst = 0.0, err = 0.0;
    for (const auto& id : ids) {
      worst = std::max(worst, std::abs(id.lhs));
      err = std::max(err, id.error_estimate);
    }
    add("fourier_identity_outside_support", worst, 1e-3, err);
  }
  {  // representation formula, both inner routes
    const Point x = draw(0.5);
    RepresentationOptions spec_opt;
    QuadratureSpec rq = q;
    if (d >= 2) {
      rq.angular_nodes = 8;
      rq.radial_order = 8;
    }
    const RepresentationResult rs = representation_check(gauss, x, p, rq, spec_opt);
    add("representation_spectral", rs.residual, 1e-2, rs.error_estimate);
    if (d == 1) {
      RepresentationOptions pv_opt;
      pv_opt.inner = InnerOperator::PrincipalValue;
      const RepresentationResult rp = representation_check(gauss, x, p, rq, pv_opt);
      add("representation_pv", rp.residual, 1e-2, rp.error_estimate);
    }
  }
  {  // commutation with reflections
    std::vector<std::pair<Point, Point>> cases;
    for (int i = 0; i < 3; ++i) {
      Point a = draw(1.0);
      if (norm(a) < 0.05) a[0] += 0.1;
      cases.emplace_back(std::move(a), draw(1.0));
    }
    std::vector<CommutationResult> res(cases.size());
    parallel_for(cases.size(), [&](std::size_t i) {
      res[i] = commutation_residual(gauss, ReflectionMap(cases[i].first), cases[i].second, p, q);
    });
    double worst = 0.0, err = 0.0;
    for (const auto& r : res) {
      worst = std::max(worst, r.residual);
      err = std::max(err, r.error_estimate);
    }
    add("commutation", worst, 1e-3, err);
  }
  {  // Getoor solution
    const double cg = getoor_constant(p, q);
    add("getoor_calibration", std::abs(cg / getoor_constant_closed_form(p) - 1.0), 1e-2);
    const ScalarField u = fields::getoor_profile(d, cfg.s, cg);
    std::vector<Point> xs;
    for (int i = 0; i < 3; ++i) xs.push_back(draw(0.8));
    std::vector<PvResult> res(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { res[i] = pv_eval(u, xs[i], p, q); });
    double worst = 0.0, err = 0.0;
    for (const auto& r : res) {
      worst = std::max(worst, std::abs(r.value - 1.0));
      err = std::max(err, r.error_estimate);
    }
    add("getoor_solution", worst, 1e-2, err);
  }
  {  // monomial recovery
    double worst = 0.0;
    std::uniform_real_distribution<double> far(2.0, 3.0);
    for (int t = 0; t < 10; ++t) {
      const Point y = draw(1.0);
      Point x = draw(1.0);
      x[0] += t % 2 ? far(rng) : -far(rng);
      for (int i = 0; i < d; ++i) {
        worst = std::max(worst, std::abs(monomial_recovery(x, i)(y) - y[static_cast<std::size_t>(i)]));
        for (int k = 0; k < d; ++k)
          worst = std::max(worst, std::abs(monomial_recovery(x, i, k)(y) - y[static_cast<std::size_t>(i)] *
                                                                                  y[static_cast<std::size_t>(k)]));
      }
    }
    add("monomial_recovery", worst, 1e-10);
  }
  {  // obstruction bound and constant exclusion
    ObstructionOptions opt;
    opt.reg = 0.0;
    Point x0(static_cast<std::size_t>(d), 0.0);
    x0[0] = 0.5;
    const auto rep =
        obstruction_chain(fields::poly_bump(d, 4.0), ReactionFunction::affine(1.0, 1.0), x0, 16, p, q, opt);
    const double excess = rep.completed() ? std::abs(rep.measured_pv) - rep.bound_value - rep.measured_error
                                          : std::numeric_limits<double>::infinity();
    add("obstruction_bound", std::max(0.0, excess), 0.0, rep.measured_error);
    const auto [t0, t1] = constant_exclusion_check(1.0, p, q);
    const double closed = pv_constant(p) * sphere_measure(d) / (2.0 * cfg.s);
    add("constant_exclusion_origin", std::abs(t0.value / closed - 1.0), 1e-8, t0.error_estimate);
    add("constant_exclusion_nonconstant", t1.value / t0.value > 1.1 ? 0.0 : 1.0, 0.0, t1.error_estimate);
  }
  return out;
}

inline int run_verify(const RunConfig& cfg, std::ostream& out) {
  const FracParams p(cfg.d, cfg.s);
  const auto checks = verify_suite(cfg);
  json j = header("verify", cfg);
  j["c_pv"] = pv_constant(p);
  j["c_fourier"] = fourier_constant(p, cfg.d - 2.0 * cfg.s);
  j["checks"] = json::array();
  int failed = 0;
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"residual", number(c.residual)},
                           {"tolerance", number(c.tolerance)},
                           {"error_estimate", number(c.error_estimate)},
                           {"passed", c.passed}});
    failed += c.passed ? 0 : 1;
  }
  j["passed"] = failed == 0;
  write_json(cfg, "verify.json", j);
  out << "verify: " << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size()
      << " checks passed -> " << cfg.out_dir << '\n';
  return failed == 0 ? 0 : 1;
}

}  // namespace detail

/// Parses argv and runs one subcommand. Exit codes: 0 success, 1 verification or
/// numerical failure, 2 configuration error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"fraclab: fractional Laplacian evaluation and s-harmonic approximation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value configuration file; flags override it");
  RunConfig cfg;
  app.add_option("--d", cfg.d, "dimension")->capture_default_str();
  app.add_option("--s", cfg.s, "fractional order in (0,1)")->capture_default_str();
  app.add_option("--seed", cfg.seed, "seed for sampled points")->capture_default_str();
  app.add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  app.add_option("--format", cfg.format, "row format for eval/potential")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--rho", cfg.quad.rho, "near-field radius cap")->capture_default_str();
  app.add_option("--outer-radius", cfg.quad.outer_radius, "truncation radius (0 = from field metadata)");
  app.add_option("--radial-order", cfg.quad.radial_order, "Gauss nodes per radial panel")->capture_default_str();
  app.add_option("--panels-per-decade", cfg.quad.panels_per_decade)->capture_default_str();
  app.add_option("--angular-nodes", cfg.quad.angular_nodes)->capture_default_str();
  app.add_option("--max-refinements", cfg.quad.max_refinements)->capture_default_str();

  detail::EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "(-Δ)^s of a field at points")->fallthrough();
  eval->add_option("--field", ea.field, "gaussian|getoor|indicator|bump|polybump:p|csv:PATH")->capture_default_str();
  eval->add_option("--points", ea.points, "CSV file or inline 'x1,x2;y1,y2'")->capture_default_str();
  eval->add_option("--method", ea.method, "pv|spectral|both")->capture_default_str();
  eval->add_option("--tol", ea.tol, "relative tolerance for the refinement loop");
  eval->add_option("--grid-n", ea.grid_n, "spectral nodes per axis");
  eval->add_option("--box", ea.box, "spectral box length");

  detail::PotentialArgs pa;
  auto* pot = app.add_subcommand("potential", "Riesz potential of a bump dictionary")->fallthrough();
  pot->add_option("--centers", pa.centers, "bump centers 'x1,x2;y1,y2'")->capture_default_str();
  pot->add_option("--coeffs", pa.coeffs, "coefficients 'c1,c2,...'")->capture_default_str();
  pot->add_option("--scale", pa.scale, "bump radius")->capture_default_str();
  pot->add_option("--radius", pa.radius, "annulus B_4r \\ B_3r about the origin")->capture_default_str();
  pot->add_option("--points", pa.points, "CSV file or inline points")->capture_default_str();
  pot->add_flag("--direct", pa.direct, "direct convolution quadrature instead of the radial table");

  detail::ApproxArgs aa;
  auto* approx = app.add_subcommand("approx", "fit a dictionary potential in C^k of a ball")->fallthrough();
  approx->add_option("--target", aa.target, "const|const:c|coord:i|poly:c0,c1,...|csv:PATH")->capture_default_str();
  approx->add_option("--k", aa.k, "derivative order")->capture_default_str();
  approx->add_option("--centers", aa.centers, "number of bumps")->capture_default_str();
  approx->add_option("--radius", aa.radius, "ball radius r")->capture_default_str();
  approx->add_option("--center", aa.center, "ball center a (comma separated)");
  approx->add_option("--reg", aa.reg, "relative ridge parameter")->capture_default_str();

  detail::ReflectArgs ra;
  auto* refl = app.add_subcommand("reflect", "checks of the reflection R_a")->fallthrough();
  refl->add_option("--a", ra.a, "point a (comma separated)")->capture_default_str();
  refl->add_option("--check", ra.check, "isometry|involution|commutation")->capture_default_str();
  refl->add_option("--field", ra.field, "field for the commutation check")->capture_default_str();
  refl->add_option("--trials", ra.trials)->capture_default_str();

  detail::ObstructArgs oa;
  auto* obs = app.add_subcommand("obstruct", "obstruction chain for a candidate solution")->fallthrough();
  obs->add_option("--candidate", oa.candidate, "polybump:p|csv:PATH")->capture_default_str();
  obs->add_option("--reaction", oa.reaction, "affine:a,b|expr-table:PATH")->capture_default_str();
  obs->add_option("--x0", oa.x0, "points 'x1,x2;y1,y2' in the punctured unit ball");
  obs->add_option("--scan", oa.scan, "scan N points along e1");
  obs->add_option("--centers", oa.centers, "dictionary size")->capture_default_str();
  obs->add_option("--reg", oa.reg, "relative ridge parameter")->capture_default_str();
  obs->add_option("--csv-smoothness", oa.csv_smoothness, "declared smoothness of a csv candidate");

  auto* ver = app.add_subcommand("verify", "run the identity suite")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    cfg.quad.validate();
    if (eval->parsed()) return detail::run_eval(cfg, ea, out);
    if (pot->parsed()) return detail::run_potential(cfg, pa, out);
    if (approx->parsed()) return detail::run_approx(cfg, aa, out);
    if (refl->parsed()) return detail::run_reflect(cfg, ra, out);
    if (obs->parsed()) return detail::run_obstruct(cfg, oa, out);
    if (ver->parsed()) return detail::run_verify(cfg, out);
  } catch (const domain_error& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const precondition_error& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace fraclab::cli
