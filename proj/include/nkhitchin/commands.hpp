#pragma once

// End-to-end commands. Each returns its manifest and exit code; the CLI only
// parses flags and writes files, so tests drive exactly what users run.

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nkhitchin/background.hpp"
#include "nkhitchin/hitchin.hpp"
#include "nkhitchin/io.hpp"
#include "nkhitchin/oracles.hpp"

namespace nkh::cmd {

enum ExitCode { kOk = 0, kNumericFailure = 1, kUsageError = 2 };

struct Outcome {
  int exit_code = kOk;
  RunManifest manifest;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline json check_json(const std::string& name, double value, double bound) {
  return {{"name", name}, {"value", value}, {"bound", bound}, {"passed", value <= bound}};
}

inline json roots_json(const LegendreScan& s) {
  return {{"variant", to_string(s.variant)}, {"functional", to_string(s.functional)}, {"roots", s.roots}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// verify-oracles

struct VerifyOptions {
  double corrupt_lambda = 1.0;  ///< test hook: scale lambda on both oracle curves
};

inline Outcome verify_oracles(const VerifyOptions& o = {}) {
  detail::Stopwatch clock;
  Outcome out;
  auto& m = out.manifest;
  m.command = "verify-oracles";
  m.params = {{"corrupt_lambda", o.corrupt_lambda}};

  json checks = json::array();
  json scans = json::object();
  for (OracleCurve c : {sine_cone(), homogeneous_s3s3()}) {
    const std::string name = c.name;
    if (o.corrupt_lambda != 1.0) c = with_scaled_lambda(c, o.corrupt_lambda);
    const auto r = residual_scan(c, 100);
    const auto el = el_residuals(c, 100, 1e-4);
    checks.push_back(detail::check_json(name + ".nk_rhs", r.rhs_max, 1e-8));
    if (c.derivative)
      checks.push_back(
          detail::check_json(name + ".nk_rhs_analytic", residual_scan(c, 100, DerivativeMode::Analytic).rhs_max, 1e-12));
    checks.push_back(detail::check_json(name + ".conserved", r.conserved_max, 1e-10));
    checks.push_back(detail::check_json(name + ".frame", r.frame_defect_max, 1e-10));
    checks.push_back(detail::check_json(name + ".w_ode", r.w_ode_max, 1e-6));
    checks.push_back(detail::check_json(name + ".el_lambda", el.lambda, 1e-6));
    checks.push_back(detail::check_json(name + ".el_u0", el.u0, 1e-6));
    checks.push_back(detail::check_json(name + ".el_u1", el.u1, 1e-6));
    checks.push_back(detail::check_json(name + ".el_u2", el.u2, 1e-6));
    checks.push_back(detail::check_json(name + ".aux_identity", el.aux, 1e-6));
    scans[name] = {{"printed_lambda_equation_residual", r.printed_lambda_max}, {"t_worst", r.t_worst}};
  }

  // The scanner itself is checked against the closed-form Legendre spectrum
  // l(l+1) = Lambda^2/12: odd l for xi(pi/2) = 0, even l for chi(pi/2) = 0.
  const auto chi_scan = legendre_scan(LegendreVariant::AsMatrix, LegendreFunctional::ChiZero, 0.5, 13.0, 60);
  const auto xi_scan = legendre_scan(LegendreVariant::AsMatrix, LegendreFunctional::XiZero, 0.5, 13.0, 60);
  auto root_error = [](const LegendreScan& s, std::vector<double> expected) {
    if (s.roots.size() != expected.size()) return 1.0;
    double e = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) e = std::max(e, std::abs(s.roots[i] - expected[i]));
    return e;
  };
  checks.push_back(detail::check_json("legendre.chi_roots_vs_closed_form", root_error(chi_scan, {std::sqrt(72.0)}), 1e-6));
  checks.push_back(detail::check_json("legendre.xi_roots_vs_closed_form", root_error(xi_scan, {std::sqrt(24.0), 12.0}), 1e-6));
  checks.push_back(detail::check_json("sine_cone.sqrt72_sin^-6", sine_cone_sqrt72_residual(-6), 1e-10));

  const auto tb = taylor_consistency_check(Variant::B, V1Coefficient::Tabulated);
  const auto rb = taylor_consistency_check(Variant::B, V1Coefficient::Repaired);
  const auto ra = taylor_consistency_check(Variant::A);
  const auto found = tb.mismatched_coefficients();
  const std::set<std::string> found_set(found.begin(), found.end());
  const bool documented = found_set == std::set<std::string>{"mu t^3", "v1 t^4"};
  checks.push_back({{"name", "taylor.psi_b_printed_mismatches"}, {"value", found}, {"passed", documented}});
  checks.push_back({{"name", "taylor.psi_b_repaired"}, {"value", rb.mismatches.size()}, {"passed", rb.passed()}});
  checks.push_back({{"name", "taylor.psi_a"}, {"value", ra.mismatches.size()}, {"passed", ra.passed()}});

  json mismatches = json::array();
  for (const auto& mm : tb.mismatches)
    mismatches.push_back({{"check", mm.check}, {"coefficient", mm.coefficient}, {"param_roots", mm.param_roots}});

  bool all = true;
  for (const auto& c : checks) all = all && c.at("passed").get<bool>();
  m.results = {{"passed", all},
               {"checks", checks},
               {"psi_b_printed_mismatches", mismatches},
               {"legendre_matrix_roots", {detail::roots_json(chi_scan), detail::roots_json(xi_scan)}}};
  m.diagnostics = {{"oracles", scans},
                   {"sine_cone_sqrt72_sin^+6_residual", sine_cone_sqrt72_residual(6)},
                   {"taylor_comparisons", {{"psi_b", rb.comparisons}, {"psi_a", ra.comparisons}}}};
  out.exit_code = all ? kOk : kNumericFailure;
  m.seconds = clock.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// half

struct HalfParams {
  HalfFamily family = HalfFamily::b(1.0);
  double eps = 1e-2;
  double tol = 1e-10;
};

inline json half_results(const HalfSolution& h) {
  const auto& s = h.state_at_star;
  const auto& f = h.frame_at_star;
  return {{"t_star", h.t_star},
          {"beta", {f.w.a1, f.w.a2}},
          {"state_at_star",
           {{"lambda", s.lambda}, {"u", {s.u.a0, s.u.a1, s.u.a2}}, {"v", {s.v.a0, s.v.a1, s.v.a2}}}},
          {"frame_at_star", {{"mu", f.mu}, {"w", {f.w.a0, f.w.a1, f.w.a2}}}},
          {"doubling", to_string(classify_background_doubling(h, 1e-6))}};
}

inline json half_diagnostics(const HalfSolution& h) {
  return {{"conserved_max", h.conserved_max},
          {"frame_defect_max", h.frame_defect_max},
          {"launch_certificate", certificate_json(h.certificate)},
          {"launch_constraint_defect", h.launch_constraint_defect},
          {"steps", h.trajectory.stats().accepted},
          {"rejected", h.trajectory.stats().rejected},
          {"extended_series", h.extended_series.has_value()}};
}

/// Integrates one half; `csv` receives the trajectory when given.
inline Outcome half(const HalfParams& p, std::ostream* csv = nullptr) {
  detail::Stopwatch clock;
  Outcome out;
  auto& m = out.manifest;
  m.command = "half";
  m.params = family_json(p.family);
  m.params["eps"] = p.eps;
  m.params["tol"] = p.tol;
  try {
    HalfOptions opt;
    opt.eps = p.eps;
    opt.tol = p.tol;
    const HalfSolution h = integrate_half(p.family, opt);
    m.results = half_results(h);
    m.diagnostics = half_diagnostics(h);
    if (csv) write_background_csv(*csv, h.trajectory);
  } catch (const NumericError& e) {
    m.diagnostics["error"] = error_json(e);
    out.exit_code = kNumericFailure;
  }
  m.seconds = clock.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// find-bstar

struct BstarParams {
  double lo = 0.05;
  double hi = 0.999;
  int n = 200;
  double tol_b = 1e-8;
  double eps = 1e-2;
  double tol = 1e-10;
};

/// Sign checks at b*: w1 > 0 on an interior grid of (eps, T*) and w2(T*) > 0.
inline json bstar_verification(const HalfSolution& h, int n_points = 50) {
  const double t0 = h.trajectory.t_begin(), t1 = h.t_star;
  const double delta = 0.02 * (t1 - t0);
  double w1_min = std::numeric_limits<double>::infinity();
  for (double t : interior_grid(t0, t1 - delta, n_points))
    w1_min = std::min(w1_min, derived_frame(BackgroundState::from_vector(t, h.trajectory(t))).w.a1);
  const auto& s = h.state_at_star;
  return {{"w1_min_interior", w1_min},
          {"w1_positive_interior", w1_min > 0.0},
          {"w2_star", h.frame_at_star.w.a2},
          {"w2_positive", h.frame_at_star.w.a2 > 0.0},
          {"u1_star", s.u.a1},
          {"v0_star", s.v.a0},
          {"v2_star", s.v.a2}};
}

inline Outcome find_bstar(const BstarParams& p) {
  detail::Stopwatch clock;
  Outcome out;
  auto& m = out.manifest;
  m.command = "find-bstar";
  m.params = {{"grid", {p.lo, p.hi, p.n}}, {"tol", p.tol_b}, {"eps", p.eps}, {"integrator_tol", p.tol}};
  HalfOptions opt;
  opt.eps = p.eps;
  opt.tol = p.tol;
  try {
    const BstarResult r = nkh::find_bstar(p.lo, p.hi, p.n, p.tol_b, opt);
    const HalfSolution h = integrate_half(HalfFamily::b(r.b_star), opt);
    m.results = {{"b_star", r.b_star},
                 {"w1_at_bstar", h.frame_at_star.w.a1},
                 {"w2_at_bstar", h.frame_at_star.w.a2},
                 {"t_star", h.t_star},
                 {"doubling", to_string(classify_background_doubling(h, 1e-6))},
                 {"verification", bstar_verification(h)}};
    m.diagnostics = half_diagnostics(h);
    m.diagnostics["grid"] = pairs_json(r.grid);
    m.diagnostics["bisection_steps"] = r.bisection_steps;
  } catch (const NumericError& e) {
    m.diagnostics["error"] = error_json(e);
    out.exit_code = kNumericFailure;
  }
  m.seconds = clock.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// shoot

struct ShootParams {
  HalfFamily family = HalfFamily::b(1.0);
  double Lambda = 1.0;
  double eps = 1e-2;
  double tol = 1e-10;
};

inline Outcome shoot(const ShootParams& p, std::ostream* eigen_csv = nullptr) {
  detail::Stopwatch clock;
  Outcome out;
  auto& m = out.manifest;
  m.command = "shoot";
  m.params = family_json(p.family);
  m.params["lambda"] = p.Lambda;
  m.params["eps"] = p.eps;
  m.params["tol"] = p.tol;
  try {
    HalfOptions hopt;
    hopt.eps = p.eps;
    hopt.tol = p.tol;
    const HalfSolution h = integrate_half(p.family, hopt);
    ShootOptions sopt;
    sopt.tol = p.tol;
    sopt.keep_trajectory = eigen_csv != nullptr;
    const ShootReport r = nkh::shoot(h, p.Lambda, sopt);
    m.results = shoot_json(r);
    m.results["portrait"] = portrait_json(portrait_row(r, 1e-6));
    m.diagnostics = half_diagnostics(h);
    m.diagnostics["constraint_max"] = r.max_constraint_residual;
    if (eigen_csv) write_eigen_csv(*eigen_csv, r.samples);
  } catch (const NumericError& e) {
    m.diagnostics["error"] = error_json(e);
    out.exit_code = kNumericFailure;
  }
  m.seconds = clock.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// index-report

struct IndexParams {
  double tol = 1e-10;           ///< integrator tolerance
  double tol_b = 1e-8;          ///< b* bisection
  double tol_L = 1e-8;          ///< Lambda* bisection
  double bracket_delta = 1e-6;  ///< upper Lambda bracket is sqrt(72) - delta
  double eps = 1e-2;
};

inline Outcome index_report(const IndexParams& p) {
  detail::Stopwatch clock;
  Outcome out;
  auto& m = out.manifest;
  m.command = "index-report";
  m.params = {{"tol", p.tol},
              {"tol_b", p.tol_b},
              {"tol_lambda", p.tol_L},
              {"eps", p.eps},
              {"bstar_grid", {0.05, 0.999, 200}},
              {"lambda_bracket", {0.5, std::sqrt(72.0) - p.bracket_delta}},
              {"betti", {{"b2", 0}, {"b3", 2}}}};
  std::string stage = "find_bstar";
  try {
    HalfOptions hopt;
    hopt.eps = p.eps;
    hopt.tol = p.tol;
    const BstarResult b = nkh::find_bstar(0.05, 0.999, 200, p.tol_b, hopt);
    m.results["b_star"] = b.b_star;
    m.diagnostics["bstar_grid"] = pairs_json(b.grid);

    stage = "integrate_half";
    const HalfSolution h = integrate_half(HalfFamily::b(b.b_star), hopt);
    m.results["t_star"] = h.t_star;
    m.results["beta"] = {h.frame_at_star.w.a1, h.frame_at_star.w.a2};
    m.diagnostics["half"] = half_diagnostics(h);

    stage = "sign_portrait";
    ShootOptions sopt;
    sopt.tol = p.tol;
    const std::vector<double> grid{1, 2, 3, 4, 5, 6, 7, 8};
    const auto rows = sign_portrait(h, grid, 1e-6, sopt);
    json portrait = json::array();
    bool portrait_ok = true;
    for (const auto& r : rows) {
      portrait.push_back(portrait_json(r));
      portrait_ok = portrait_ok && r.all_ok();
    }
    m.results["portrait_ok"] = portrait_ok;
    m.diagnostics["portrait"] = portrait;

    stage = "find_lambda_star";
    const auto ls = find_lambda_star(h, 0.5, std::sqrt(72.0) - p.bracket_delta, p.tol_L, sopt);
    const ShootReport at_star = nkh::shoot(h, ls.lambda_star, sopt);
    const double nu = ls.lambda_star * ls.lambda_star / 12.0;
    m.results["lambda_star"] = ls.lambda_star;
    m.results["chi_normalized_at_lambda_star"] = ls.chi_normalized;
    m.results["nu_star"] = nu;
    m.results["classification_at_lambda_star"] = to_string(at_star.classification);
    m.diagnostics["lambda_grid"] = pairs_json(ls.grid);
    m.diagnostics["lambda_bisection_steps"] = ls.bisection_steps;
    m.diagnostics["constraint_max"] = at_star.max_constraint_residual;

    stage = "index_bounds";
    // Conservative: only Lambda* in (0, sqrt 72) is used, i.e. nu* in (0, 6).
    const std::vector<NuEntry> conservative{NuEntry::interval(0.0, 6.0)};
    const std::vector<NuEntry> exact{NuEntry::exact(nu)};
    const IndexBounds cb = index_bounds(conservative, 0, 2);
    const IndexBounds eb = index_bounds(exact, 0, 2);
    m.results["conservative"] = {{"hitchin_lb", cb.hitchin_lb}, {"einstein_lb", cb.einstein_lb}};
    m.results["exact"] = {{"hitchin_lb", eb.hitchin_lb}, {"einstein_lb", eb.einstein_lb}};
    m.results["hitchin_lb"] = cb.hitchin_lb;
    m.results["einstein_lb"] = cb.einstein_lb;
    const bool reproduced = cb.hitchin_lb == 1 && cb.einstein_lb == 4 && portrait_ok;
    m.results["reproduced"] = reproduced;
    if (!reproduced) out.exit_code = kNumericFailure;
  } catch (const NumericError& e) {
    m.diagnostics["error"] = error_json(e);
    m.diagnostics["failed_stage"] = stage;
    out.exit_code = kNumericFailure;
  }
  m.seconds = clock.seconds();
  return out;
}

// ---------------------------------------------------------------------------
// legendre-scan

struct LegendreParams {
  std::optional<LegendreVariant> variant;  ///< both when empty
  double lo = 0.5;
  double hi = 13.0;
  int n = 60;
};

inline Outcome legendre_scan(const LegendreParams& p) {
  detail::Stopwatch clock;
  Outcome out;
  auto& m = out.manifest;
  m.command = "legendre-scan";
  m.params = {{"variant", p.variant ? to_string(*p.variant) : "both"}, {"range", {p.lo, p.hi}}, {"n", p.n}};
  std::vector<LegendreVariant> variants;
  if (p.variant)
    variants.push_back(*p.variant);
  else
    variants = {LegendreVariant::AsPrinted, LegendreVariant::AsMatrix};

  json scans = json::array();
  json validated = nullptr;
  json reproduces_12 = json::array();
  for (auto v : variants) {
    for (auto f : {LegendreFunctional::ChiZero, LegendreFunctional::XiZero}) {
      const auto s = nkh::legendre_scan(v, f, p.lo, p.hi, p.n);
      json j = detail::roots_json(s);
      const bool two_six = contains_root(s, 2.0, 1e-6) && contains_root(s, 6.0, 1e-6);
      const bool twelve = contains_root(s, 12.0, 1e-6);
      j["contains_2_and_6"] = two_six;
      j["contains_12"] = twelve;
      j["grid"] = pairs_json(s.grid);
      scans.push_back(j);
      if (two_six && validated.is_null()) validated = {{"variant", to_string(v)}, {"functional", to_string(f)}};
      if (twelve) reproduces_12.push_back({{"variant", to_string(v)}, {"functional", to_string(f)}});
    }
  }
  m.results = {{"scans", scans},
               {"validated", validated},
               {"reproduces_2_and_6", !validated.is_null()},
               {"reproduces_12", reproduces_12},
               {"bounded_solution_rule", "xi = P_l(cos t) with l(l+1) = Lambda^2/12 for the matrix sign"}};
  m.diagnostics = {{"launch_eps", 1e-3}, {"integrator_tol", 1e-13}, {"endpoint", "pi/2"}};
  m.seconds = clock.seconds();
  return out;
}

}  // namespace nkh::cmd
