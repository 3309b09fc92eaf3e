#pragma once

// Nearly Kaehler halves Psi_a (singular orbit S^2) and Psi_b (singular orbit
// S^3): Taylor data at the singular orbit, integration up to the orbit of
// maximal volume, the beta-curve and its last axis crossing b*.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nkhitchin/errors.hpp"
#include "nkhitchin/minkowski.hpp"
#include "nkhitchin/ode.hpp"
#include "nkhitchin/parallel.hpp"
#include "nkhitchin/series.hpp"
#include "nkhitchin/singular.hpp"

namespace nkh {

enum class Variant { A, B };

inline std::string to_string(Variant v) { return v == Variant::A ? "A" : "B"; }

struct HalfFamily {
  Variant variant = Variant::B;
  double param = 1.0;

  static HalfFamily a(double value) { return {Variant::A, value}; }
  static HalfFamily b(double value) { return {Variant::B, value}; }
};

inline void require_valid(const HalfFamily& f) {
  if (!(f.param > 0.0) || !std::isfinite(f.param))
    throw std::invalid_argument("family parameter must be positive, got " + std::to_string(f.param));
}

// ---------------------------------------------------------------------------
// Taylor data

/// Which t^4 coefficient of v1 to use in Psi_b. The tabulated value 2/5 is
/// only compatible with the ODE at b^2 = 5/16.
enum class V1Coefficient { Repaired, Tabulated };

inline double psi_b_v1_t4(double b, V1Coefficient c) {
  return c == V1Coefficient::Repaired ? (12.0 - 32.0 * b * b) / 5.0 : 0.4;
}

struct BackgroundSeries {
  Series lambda;
  std::array<Series, 3> u;
  std::array<Series, 3> v;

  std::array<Series, 7> components() const { return {lambda, u[0], u[1], u[2], v[0], v[1], v[2]}; }
};

inline BackgroundSeries psi_b_series(double b, V1Coefficient v1 = V1Coefficient::Repaired) {
  const double b2 = b * b, b3 = b2 * b;
  BackgroundSeries s;
  s.lambda = Series(0, {b, 0.0, -0.9 * (b2 - 1.0) / b}, 4);
  s.u = {Series(1, {2.0 * b2, 0.0, -(17.0 * b2 + 3.0) / 5.0}, 5),
         Series(1, {2.0 * b, 0.0, -(23.0 * b2 - 3.0) / (5.0 * b)}, 5),
         Series(1, {-2.0 * b2, 0.0, (17.0 * b2 - 12.0) / 5.0}, 5)};
  s.v = {Series(0, {-2.0 / 3.0 * b3, 0.0, 4.0 * b3}, 4),
         Series(2, {4.0 * b2, 0.0, psi_b_v1_t4(b, v1)}, 6),
         Series(0, {2.0 / 3.0 * b3, 0.0, -b * (4.0 * b2 - 3.0)}, 4)};
  return s;
}

inline BackgroundSeries psi_a_series(double a) {
  const double a2 = a * a, r3 = std::sqrt(3.0);
  BackgroundSeries s;
  s.lambda = Series(1, {1.5, 0.0, -(2.0 * a2 + 3.0) / (12.0 * a2)}, 5);
  s.u = {Series(0, {a2, 0.0, -3.0 * a2}, 4),
         Series(0, {a2, 0.0, -1.5 * (2.0 * a2 - 1.0)}, 4),
         Series(2, {-1.5 * r3 * a, 0.0, r3 * (16.0 * a2 - 3.0) / (12.0 * a)}, 6)};
  s.v = {Series(2, {3.0 * a2, 0.0, -(0.25 + 14.0 / 3.0 * a2)}, 6),
         Series(2, {3.0 * a2, 0.0, 2.0 - 14.0 / 3.0 * a2}, 6),
         Series(2, {1.5 * r3 * a, 0.0, -r3 * (34.0 * a2 - 3.0) / (12.0 * a)}, 6)};
  return s;
}

inline BackgroundSeries half_series(const HalfFamily& f, V1Coefficient v1 = V1Coefficient::Repaired) {
  require_valid(f);
  return f.variant == Variant::A ? psi_a_series(f.param) : psi_b_series(f.param, v1);
}

/// Tabulated expansion of mu. Only used as a cross-check; the library always
/// derives mu from u.
inline Series tabulated_mu_series(const HalfFamily& f) {
  const double p = f.param;
  if (f.variant == Variant::B) return Series(1, {2.0 * p, 0.0, 1.0 / (10.0 * p)}, 5);
  const double r3 = std::sqrt(3.0);
  return Series(1, {r3 * p, 0.0, r3 / (9.0 * p) * (3.0 - 7.0 * p * p)}, 5);
}

/// Tabulated expansion of w, for cross-checks against derived_frame.
inline std::array<Series, 3> tabulated_w_series(const HalfFamily& f) {
  const double p = f.param, p2 = p * p;
  if (f.variant == Variant::B)
    return {Series(-1, {p / 3.0, 0.0, -(16.0 * p2 - 29.0) / (15.0 * p)}, 3), Series(1, {1.0}, 3),
            Series(-1, {-p / 3.0, 0.0, (32.0 * p2 - 13.0) / (30.0 * p)}, 3)};
  const double r3 = std::sqrt(3.0);
  return {Series(-1, {r3 / 3.0 * p, 0.0, -r3 / (54.0 * p) * (64.0 * p2 - 39.0)}, 3),
          Series(-1, {r3 / 3.0 * p, 0.0, -2.0 * r3 / (27.0 * p) * (16.0 * p2 - 3.0)}, 3),
          Series(1, {0.5, 0.0, (9.0 - 76.0 * p2) / (54.0 * p2)}, 5)};
}

inline BackgroundState evaluate(const BackgroundSeries& s, double t) {
  return {t, s.lambda.eval(t), {s.u[0].eval(t), s.u[1].eval(t), s.u[2].eval(t)},
          {s.v[0].eval(t), s.v[1].eval(t), s.v[2].eval(t)}};
}

inline BackgroundState taylor_psi_a(double a, double t) { return evaluate(psi_a_series(a), t); }
inline BackgroundState taylor_psi_b(double b, double t) { return evaluate(psi_b_series(b), t); }

// ---------------------------------------------------------------------------
// Order-by-order consistency of the Taylor data

struct CoefficientMismatch {
  std::string check;        ///< equation or constraint that exposed it
  std::string coefficient;  ///< e.g. "v1 t^4"
  std::vector<double> residuals;  ///< tabulated minus implied, one per sample parameter
  std::vector<double> param_roots;  ///< parameters in the scan range where the residual vanishes
};

struct TaylorConsistencyReport {
  Variant variant = Variant::B;
  V1Coefficient v1 = V1Coefficient::Repaired;
  std::vector<double> params;
  std::vector<std::string> checks;
  int comparisons = 0;  ///< coefficient comparisons made per parameter
  std::vector<CoefficientMismatch> mismatches;

  bool passed() const { return mismatches.empty(); }

  /// Distinct coefficients involved in mismatches, in order of discovery.
  std::vector<std::string> mismatched_coefficients() const {
    std::vector<std::string> out;
    for (const auto& m : mismatches)
      if (std::find(out.begin(), out.end(), m.coefficient) == out.end()) out.push_back(m.coefficient);
    return out;
  }

  bool check_clean(const std::string& name) const {
    return std::none_of(mismatches.begin(), mismatches.end(),
                        [&](const CoefficientMismatch& m) { return m.check == name; });
  }
};

namespace detail {

struct RawComparison {
  std::string check;
  std::string coefficient;
  double residual = 0.0;
  double scale = 1.0;
};

inline Series minkowski_square(const std::array<Series, 3>& a) {
  return (-1.0) * a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
}

/// Compares the known coefficients of `tabulated` with those implied by `implied`.
inline void compare_series(const std::string& check, const std::string& name, const Series& tabulated,
                           const Series& implied, std::vector<RawComparison>& out) {
  const int hi = std::min(tabulated.order(), implied.order());
  const int lo = std::min(tabulated.low(), implied.low());
  for (int k = lo; k < hi; ++k) {
    const double a = tabulated.coeff(k), b = implied.coeff(k);
    out.push_back({check, name + " t^" + std::to_string(k), a - b, std::max({1.0, std::abs(a), std::abs(b)})});
  }
}

/// The coefficient of t^k in `x` implied by x' = rhs, for k >= 1.
inline void compare_derivative(const std::string& check, const std::string& name, const Series& x,
                               const Series& rhs, std::vector<RawComparison>& out) {
  const int hi = std::min(x.order(), rhs.order() + 1);
  for (int k = std::max(1, x.low()); k < hi; ++k) {
    const double a = x.coeff(k), b = rhs.coeff(k - 1) / k;
    out.push_back({check, name + " t^" + std::to_string(k), a - b, std::max({1.0, std::abs(a), std::abs(b)})});
  }
  // Below the lowest power of x the right-hand side must vanish too.
  // A t^-1 term on the right would force a logarithm.
  for (int k = rhs.low(); k < std::min(std::max(1, x.low()) - 1, rhs.order()); ++k) {
    const double r = k == -1 ? rhs.coeff(k) : -rhs.coeff(k) / (k + 1);
    out.push_back({check, name + " t^" + std::to_string(k + 1), r, 1.0});
  }
}

inline std::vector<RawComparison> series_comparisons(const BackgroundSeries& s, const Series* tabulated_mu) {
  const Series& l = s.lambda;
  const Series inv_l = l.inverse();
  const Series musq = minkowski_square(s.u);
  const Series mu = musq.sqrt();
  std::vector<RawComparison> out;

  compare_derivative("du0", "u0", s.u[0], -3.0 * s.v[0] * inv_l, out);
  compare_derivative("du1", "u1", s.u[1], (2.0 * l * l - 3.0 * s.v[1]) * inv_l, out);
  compare_derivative("du2", "u2", s.u[2], -3.0 * s.v[2] * inv_l, out);
  compare_derivative("dv0", "v0", s.v[0], 4.0 * l * s.u[0], out);
  compare_derivative("dv1", "v1", s.v[1], 4.0 * l * s.u[1], out);
  compare_derivative("dv2", "v2", s.v[2], 4.0 * l * s.u[2] - 3.0 * s.u[2] * inv_l, out);
  const Series inv_musq = musq.inverse();
  compare_derivative("lambda", "lambda", l,
                     3.0 * s.v[2] * inv_l * inv_musq * mu - 2.0 * l * l * s.u[1] * inv_musq, out);
  compare_series("u2=-lambda*mu", "u2", s.u[2], (-1.0) * l * mu, out);
  compare_series("I4", "v1", s.v[1], musq, out);
  if (tabulated_mu != nullptr) compare_series("mu", "mu", *tabulated_mu, mu, out);
  return out;
}

inline std::vector<RawComparison> consistency_comparisons(const HalfFamily& f, V1Coefficient v1) {
  if (v1 == V1Coefficient::Tabulated) {
    const Series mu = tabulated_mu_series(f);
    return series_comparisons(half_series(f, v1), &mu);
  }
  return series_comparisons(half_series(f, v1), nullptr);
}

/// Roots of a scalar function of the family parameter on a log-spaced grid.
inline std::vector<double> scan_roots(const std::function<double(double)>& g, double lo, double hi, int n) {
  std::vector<double> roots;
  auto at = [&](int i) { return lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)); };
  double pa = at(0), ga = g(pa);
  for (int i = 1; i < n; ++i) {
    const double pb = at(i), gb = g(pb);
    if ((ga < 0.0) != (gb < 0.0)) {
      double x0 = pa, x1 = pb, g0 = ga;
      for (int it = 0; it < 80 && x1 - x0 > 1e-13 * x1; ++it) {
        const double xm = 0.5 * (x0 + x1), gm = g(xm);
        if ((gm < 0.0) == (g0 < 0.0)) {
          x0 = xm;
          g0 = gm;
        } else {
          x1 = xm;
        }
      }
      roots.push_back(0.5 * (x0 + x1));
    }
    pa = pb;
    ga = gb;
  }
  return roots;
}

}  // namespace detail

/// Substitutes the Taylor data into the reduced system, the lambda evolution,
/// u2 = -lambda*mu (mu from u) and I4 = 0, comparing every coefficient that the
/// truncation orders determine. Residuals are evaluated at several parameter
/// values; a coefficient counts as consistent when all of them vanish.
inline TaylorConsistencyReport taylor_consistency_check(Variant variant,
                                                        V1Coefficient v1 = V1Coefficient::Repaired,
                                                        double tol = 1e-9) {
  TaylorConsistencyReport rep;
  rep.variant = variant;
  rep.v1 = v1;
  rep.params = variant == Variant::B ? std::vector<double>{0.3, 0.5, 0.8, 1.0, 1.3, 2.0}
                                     : std::vector<double>{0.4, 0.7, 1.0, 1.5, 2.0};

  std::vector<std::vector<detail::RawComparison>> rows;
  for (double p : rep.params) rows.push_back(detail::consistency_comparisons({variant, p}, v1));
  rep.comparisons = static_cast<int>(rows.front().size());
  for (const auto& c : rows.front())
    if (std::find(rep.checks.begin(), rep.checks.end(), c.check) == rep.checks.end()) rep.checks.push_back(c.check);

  for (std::size_t j = 0; j < rows.front().size(); ++j) {
    bool bad = false;
    CoefficientMismatch m;
    m.check = rows.front()[j].check;
    m.coefficient = rows.front()[j].coefficient;
    for (const auto& row : rows) {
      m.residuals.push_back(row[j].residual);
      bad = bad || std::abs(row[j].residual) > tol * row[j].scale;
    }
    if (!bad) continue;
    auto g = [&](double p) { return detail::consistency_comparisons({variant, p}, v1)[j].residual; };
    m.param_roots = detail::scan_roots(g, 0.05, 3.0, 120);
    rep.mismatches.push_back(std::move(m));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Higher-order Taylor data

namespace detail {

inline Series with_next_coefficient(const Series& s, double c) {
  std::vector<double> coeffs;
  for (int k = s.low(); k < s.order(); ++k) coeffs.push_back(s.coeff(k));
  coeffs.push_back(c);
  return Series(s.low(), std::move(coeffs), s.order() + 1);
}

inline Series& component(BackgroundSeries& s, int i) {
  if (i == 0) return s.lambda;
  return i <= 3 ? s.u[static_cast<std::size_t>(i - 1)] : s.v[static_cast<std::size_t>(i - 4)];
}

inline Eigen::VectorXd comparison_residuals(const BackgroundSeries& s) {
  const auto cmp = series_comparisons(s, nullptr);
  Eigen::VectorXd r(static_cast<Eigen::Index>(cmp.size()));
  for (std::size_t k = 0; k < cmp.size(); ++k) r[static_cast<Eigen::Index>(k)] = cmp[k].residual;
  return r;
}

}  // namespace detail

/// Extends Taylor data order by order until every component is known through
/// t^(target - 1). Each round appends one unknown coefficient per component,
/// keeps those that the reduced system, the lambda evolution and the algebraic
/// constraints pin down, and solves for them by least squares. Throws
/// ValidationFailed if the data cannot be extended consistently.
inline BackgroundSeries extend_series(BackgroundSeries s, int target, double tol = 1e-9) {
  constexpr int kMaxLookahead = 3;
  for (int round = 0; round < 8 * target + 64; ++round) {
    std::vector<int> open;
    for (int i = 0; i < 7; ++i)
      if (detail::component(s, i).order() < target) open.push_back(i);
    if (open.empty()) return s;
    // Components already at the target still take part as lookahead unknowns.
    std::vector<int> unknown;
    for (int i = 0; i < 7; ++i)
      if (detail::component(s, i).order() < target + kMaxLookahead) unknown.push_back(i);

    bool progressed = false;
    // Some coefficients are pinned only by comparisons that also involve the
    // next power of another component, so unknowns for up to kMaxLookahead
    // successive powers are carried and only the leading ones are committed.
    for (int depth = 1; depth <= kMaxLookahead && !progressed; ++depth) {
      const auto m = static_cast<Eigen::Index>(unknown.size());
      const Eigen::Index n = m * depth;
      auto trial = [&](const Eigen::VectorXd& c) {
        BackgroundSeries t = s;
        for (Eigen::Index k = 0; k < m; ++k) {
          Series& comp = detail::component(t, unknown[static_cast<std::size_t>(k)]);
          for (int d = 0; d < depth; ++d) comp = detail::with_next_coefficient(comp, c[k * depth + d]);
        }
        return t;
      };
      // The unknowns enter the residuals polynomially with a dominant linear
      // part, so two Gauss-Newton steps from zero suffice.
      Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd jac;
      for (int it = 0; it < 2; ++it) {
        const Eigen::VectorXd r0 = detail::comparison_residuals(trial(c));
        jac.resize(r0.size(), n);
        for (Eigen::Index k = 0; k < n; ++k) {
          Eigen::VectorXd cp = c;
          cp[k] += 1.0;
          jac.col(k) = detail::comparison_residuals(trial(cp)) - r0;
        }
        c -= jac.completeOrthogonalDecomposition().solve(r0);
      }
      // A leading unknown with weight in the Jacobian null space is free.
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      const double smax = sv.size() > 0 ? sv[0] : 0.0;
      BackgroundSeries next = s;
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index row = k * depth;
        double leak = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          const double sj = j < sv.size() ? sv[j] : 0.0;
          if (sj <= 1e-10 * std::max(1.0, smax)) leak += svd.matrixV()(row, j) * svd.matrixV()(row, j);
        }
        const int i = unknown[static_cast<std::size_t>(k)];
        if (leak > 1e-12 || std::find(open.begin(), open.end(), i) == open.end()) continue;
        Series& comp = detail::component(next, i);
        comp = detail::with_next_coefficient(comp, c[row]);
        progressed = true;
      }
      if (!progressed) continue;
      const Eigen::VectorXd r = detail::comparison_residuals(next);
      if (r.size() > 0 && r.cwiseAbs().maxCoeff() > tol)
        throw NumericError(ErrorKind::ValidationFailed,
                           "Taylor data admit no consistent extension (residual " +
                               std::to_string(r.cwiseAbs().maxCoeff()) + ")");
      s = next;
    }
    if (!progressed)
      throw NumericError(ErrorKind::ValidationFailed, "Taylor data cannot be extended: no coefficient is determined");
  }
  throw NumericError(ErrorKind::ValidationFailed, "Taylor extension did not reach the requested order");
}

// ---------------------------------------------------------------------------
// Constraint projection

/// Moves a state onto I1 = I2 = I3 = I4 = 0 by Gauss-Newton steps of minimal
/// weighted norm, each component weighted by its own magnitude. Truncated
/// Taylor data sit O(eps^4) off the constraint surface; this removes that
/// part of the launch error without touching the flow.
inline BackgroundState project_onto_constraints(const BackgroundState& s, int iterations = 6) {
  BackgroundVector y = s.to_vector();
  const double ymax = *std::max_element(y.begin(), y.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  Eigen::Matrix<double, 7, 1> wts;
  for (int i = 0; i < 7; ++i) wts[i] = std::abs(y[static_cast<std::size_t>(i)]) + 1e-3 * std::abs(ymax);

  auto residual = [&](const BackgroundVector& z) {
    const auto c = conserved(BackgroundState::from_vector(s.t, z));
    return Eigen::Vector4d(c.I1, c.I2, c.I3, c.I4);
  };
  for (int it = 0; it < iterations; ++it) {
    const Eigen::Vector4d r = residual(y);
    if (r.cwiseAbs().maxCoeff() == 0.0) break;
    Eigen::Matrix<double, 4, 7> jac;
    for (int i = 0; i < 7; ++i) {
      // The constraints are quadratic, so central differences are exact up to rounding.
      const double h = 1e-4 * wts[i];
      BackgroundVector yp = y, ym = y;
      yp[static_cast<std::size_t>(i)] += h;
      ym[static_cast<std::size_t>(i)] -= h;
      jac.col(i) = (residual(yp) - residual(ym)) / (2.0 * h);
    }
    const Eigen::Matrix<double, 4, 7> jw = jac * wts.asDiagonal();
    const Eigen::Matrix<double, 7, 1> step = wts.asDiagonal() * jw.completeOrthogonalDecomposition().solve(-r);
    for (int i = 0; i < 7; ++i) y[static_cast<std::size_t>(i)] += step[i];
  }
  return BackgroundState::from_vector(s.t, y);
}

// ---------------------------------------------------------------------------
// Half integration

struct HalfOptions {
  double eps = 1e-2;
  double tol = 1e-10;
  double horizon = 4.0;
  bool validate = true;
  double t_check = 0.5;
  double validation_tol = 1e-13;
  V1Coefficient v1 = V1Coefficient::Repaired;
  bool project = true;  ///< project the series launch onto the constraint surface
};

struct HalfSolution {
  HalfFamily family;
  Trajectory<7> trajectory;
  double t_star = 0.0;
  BackgroundState state_at_star;
  DerivedFrame frame_at_star;
  double conserved_max = 0.0;
  double frame_defect_max = 0.0;
  std::optional<LaunchCertificate> certificate;
  double launch_constraint_defect = 0.0;  ///< max |I_k| of the raw series launch
  /// Taylor data continued to kLaunchSeriesOrder; empty when the supplied
  /// coefficients admit no consistent continuation.
  std::optional<BackgroundSeries> extended_series;
  double eps = 0.0;
  double tol = 0.0;
};

inline const std::string kVolumeEvent = "volume_slope";
inline constexpr int kLaunchSeriesOrder = 12;

inline EventSpec<7> volume_event() {
  return {kVolumeEvent,
          [](double t, const State<7>& y) { return volume_slope(BackgroundState::from_vector(t, y)); }, -1};
}

inline HalfSolution integrate_half(const HalfFamily& family, const HalfOptions& opt = {}) {
  require_valid(family);
  if (!(opt.eps > 0.0 && opt.eps <= 0.1)) throw std::invalid_argument("eps must lie in (0, 0.1]");

  const BackgroundSeries series = half_series(family, opt.v1);
  const auto comps = series.components();
  std::optional<LaunchValidation<7>> val;
  if (opt.validate) val = LaunchValidation<7>{nk_rhs_vector, opt.t_check, opt.validation_tol, 3.0};
  const LaunchResult<7> launch = singular_launch<7>(comps, opt.eps, val);
  const BackgroundState raw = BackgroundState::from_vector(opt.eps, launch.y);
  const BackgroundVector y0 = opt.project ? project_onto_constraints(raw).to_vector() : launch.y;

  const std::array<EventSpec<7>, 1> events{volume_event()};
  HalfSolution out;
  out.family = family;
  out.eps = opt.eps;
  out.tol = opt.tol;
  out.certificate = launch.certificate;
  out.launch_constraint_defect = conserved(raw).max_abs();
  try {
    out.extended_series = extend_series(series, kLaunchSeriesOrder);
  } catch (const NumericError&) {
    out.extended_series.reset();
  }
  out.trajectory = integrate<7>(nk_rhs_vector, y0, opt.eps, opt.horizon, IntegratorOptions::with_tol(opt.tol),
                                events, kVolumeEvent);
  out.t_star = out.trajectory.t_end();
  out.state_at_star = BackgroundState::from_vector(out.t_star, out.trajectory.back());
  out.frame_at_star = derived_frame(out.state_at_star);
  for (std::size_t k = 0; k < out.trajectory.size(); ++k) {
    const auto s = BackgroundState::from_vector(out.trajectory.times()[k], out.trajectory.states()[k]);
    out.conserved_max = std::max(out.conserved_max, conserved(s).max_abs());
    out.frame_defect_max = std::max(out.frame_defect_max, frame_defect(derived_frame(s)));
  }
  return out;
}

struct BetaPoint {
  double w1 = 0.0;
  double w2 = 0.0;
};

inline BetaPoint beta_point(const HalfSolution& half) {
  return {half.frame_at_star.w.a1, half.frame_at_star.w.a2};
}

inline BetaPoint beta_point(const HalfFamily& family, const HalfOptions& opt = {}) {
  return beta_point(integrate_half(family, opt));
}

struct BstarResult {
  double b_star = 0.0;
  double w1_at_bstar = 0.0;
  std::vector<std::pair<double, double>> grid;  ///< (b, w1(T_b)), descending in b
  int bisection_steps = 0;
};

/// Last crossing of w1(T_b) = 0 below b = 1. The grid descends from `hi`;
/// the first bracketed sign change met is refined by bisection.
inline BstarResult find_bstar(double lo, double hi, int n, double tol_b, const HalfOptions& opt = {},
                              unsigned workers = worker_count()) {
  if (!(0.0 < lo && lo < hi && hi <= 1.0) || n < 2)
    throw std::invalid_argument("find_bstar: need 0 < lo < hi <= 1 and n >= 2");
  HalfOptions scan = opt;
  scan.validate = false;
  auto w1_of = [&](double b) { return beta_point(HalfFamily::b(b), scan).w1; };

  BstarResult res;
  std::vector<double> bs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) bs[static_cast<std::size_t>(i)] = hi - (hi - lo) * i / (n - 1);
  const auto w1s = parallel_map<double>(bs.size(), [&](std::size_t i) { return w1_of(bs[i]); }, workers);
  for (std::size_t i = 0; i < bs.size(); ++i) res.grid.emplace_back(bs[i], w1s[i]);

  std::optional<std::size_t> bracket;
  for (std::size_t i = 0; i + 1 < bs.size(); ++i) {
    if ((w1s[i] > 0.0) != (w1s[i + 1] > 0.0)) {
      bracket = i;
      break;
    }
  }
  if (!bracket) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "w1(T_b) keeps one sign on [" << lo << ", " << hi << "]:";
    for (const auto& [b, w] : res.grid) msg << " (" << b << ", " << w << ")";
    throw NumericError(ErrorKind::NoSignChange, msg.str());
  }

  double b_hi = bs[*bracket], g_hi = w1s[*bracket];
  double b_lo = bs[*bracket + 1];
  while (b_hi - b_lo > tol_b) {
    const double bm = 0.5 * (b_lo + b_hi);
    const double gm = w1_of(bm);
    ++res.bisection_steps;
    if ((gm > 0.0) == (g_hi > 0.0)) {
      b_hi = bm;
      g_hi = gm;
    } else {
      b_lo = bm;
    }
  }
  res.b_star = 0.5 * (b_lo + b_hi);
  res.w1_at_bstar = beta_point(HalfFamily::b(res.b_star), opt).w1;
  return res;
}

enum class BackgroundDoubling { CP3, S2xS4, S3xS3_tau2, S3xS3_tau1, NoDouble };

inline std::string to_string(BackgroundDoubling d) {
  switch (d) {
    case BackgroundDoubling::CP3: return "CP3";
    case BackgroundDoubling::S2xS4: return "S2xS4";
    case BackgroundDoubling::S3xS3_tau2: return "S3xS3_tau2";
    case BackgroundDoubling::S3xS3_tau1: return "S3xS3_tau1";
    case BackgroundDoubling::NoDouble: return "NoDouble";
  }
  return "NoDouble";
}

inline BackgroundDoubling classify_background_doubling(const HalfSolution& half, double tol) {
  const auto& w = half.frame_at_star.w;
  const double scale = std::max(1.0, max_abs(w));
  const bool a = half.family.variant == Variant::A;
  if (std::abs(w.a1) <= tol * scale) return a ? BackgroundDoubling::CP3 : BackgroundDoubling::S3xS3_tau2;
  if (std::abs(w.a2) <= tol * scale) return a ? BackgroundDoubling::S2xS4 : BackgroundDoubling::S3xS3_tau1;
  return BackgroundDoubling::NoDouble;
}

inline BackgroundDoubling classify_background_doubling(const HalfFamily& family, double tol,
                                                       const HalfOptions& opt = {}) {
  return classify_background_doubling(integrate_half(family, opt), tol);
}

}  // namespace nkh
