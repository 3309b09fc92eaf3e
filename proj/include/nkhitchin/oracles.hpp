#pragma once

// Closed-form solutions and independent residual checks.
//
// Two exact solutions of the background system are known: the sine cone and
// the homogeneous S^3 x S^3. Every check here differentiates states by finite
// differences, so nothing below trusts nk_rhs to verify nk_rhs.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nkhitchin/background.hpp"
#include "nkhitchin/hitchin.hpp"
#include "nkhitchin/minkowski.hpp"
#include "nkhitchin/ode.hpp"

namespace nkh {

// ---------------------------------------------------------------------------
// Oracle curves

inline BackgroundState sine_cone_state(double t) {
  if (!(t > 0.0 && t < std::numbers::pi)) throw std::invalid_argument("sine cone: t must lie in (0, pi)");
  const double s = std::sin(t), c = std::cos(t);
  const double s2 = s * s, s3 = s2 * s;
  return {t, s, {0.0, s2 * c, -s3}, {0.0, s3 * s, s3 * c}};
}

inline BackgroundState homogeneous_s3s3_state(double t) {
  const double r3 = std::sqrt(3.0);
  if (!(t > 0.0 && t < std::numbers::pi / r3))
    throw std::invalid_argument("homogeneous S3xS3: t must lie in (0, pi/sqrt(3))");
  const double s = std::sin(r3 * t), c = std::cos(r3 * t);
  const double s2t = std::sin(2.0 * r3 * t);
  return {t,
          1.0,
          {r3 / 3.0 * s2t, r3 / 3.0 * s2t, -2.0 * r3 / 3.0 * s},
          {2.0 / 3.0 * (2.0 * s * s - 1.0), 4.0 / 3.0 * s * s, 2.0 / 3.0 * c}};
}

/// Closed-form t-derivatives of the two curves above.
inline BackgroundDerivative sine_cone_derivative(double t) {
  const double s = std::sin(t), c = std::cos(t);
  const double s2 = s * s;
  return {t, c, {0.0, 2.0 * s * c * c - s2 * s, -3.0 * s2 * c}, {0.0, 4.0 * s2 * s * c, 3.0 * s2 * c * c - s2 * s2}};
}

inline BackgroundDerivative homogeneous_s3s3_derivative(double t) {
  const double r3 = std::sqrt(3.0);
  const double s = std::sin(r3 * t), c = std::cos(r3 * t);
  const double c2t = std::cos(2.0 * r3 * t);
  return {t, 0.0, {2.0 * c2t, 2.0 * c2t, -2.0 * c}, {8.0 * r3 / 3.0 * s * c, 8.0 * r3 / 3.0 * s * c, -2.0 * r3 / 3.0 * s}};
}

/// Maximal-volume time of the homogeneous solution.
inline double homogeneous_t_star() { return std::numbers::pi * std::sqrt(3.0) / 6.0; }

struct OracleCurve {
  std::string name;
  std::function<BackgroundState(double)> eval;
  std::function<BackgroundDerivative(double)> derivative;  ///< closed form; empty for modified curves
  double t_lo = 0.0;  ///< open domain (t_lo, t_hi)
  double t_hi = 0.0;
};

inline OracleCurve sine_cone() {
  return {"SineCone", sine_cone_state, sine_cone_derivative, 0.0, std::numbers::pi};
}

inline OracleCurve homogeneous_s3s3() {
  return {"HomogeneousS3S3", homogeneous_s3s3_state, homogeneous_s3s3_derivative, 0.0,
          std::numbers::pi / std::sqrt(3.0)};
}

/// Negative control: the same curve with lambda scaled by `factor`.
inline OracleCurve with_scaled_lambda(OracleCurve c, double factor) {
  auto inner = c.eval;
  c.name += "[lambda x" + std::to_string(factor) + "]";
  c.eval = [inner, factor](double t) {
    BackgroundState s = inner(t);
    s.lambda *= factor;
    return s;
  };
  c.derivative = nullptr;
  return c;
}

/// n points strictly inside (lo, hi), equally spaced, endpoints excluded.
inline std::vector<double> interior_grid(double lo, double hi, int n) {
  if (n < 1) throw std::invalid_argument("interior_grid: n must be positive");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = lo + (hi - lo) * (k + 1) / (n + 1);
  return g;
}

// ---------------------------------------------------------------------------
// Finite differences

using StateCurve = std::function<BackgroundState(double)>;

namespace detail {

/// Five-point first and second derivatives of every component.
struct CurveJet {
  BackgroundState s;
  BackgroundVector d1{};
  BackgroundVector d2{};
};

inline CurveJet jet(const StateCurve& f, double t, double h) {
  const auto ym2 = f(t - 2 * h).to_vector(), ym1 = f(t - h).to_vector();
  const auto yp1 = f(t + h).to_vector(), yp2 = f(t + 2 * h).to_vector();
  CurveJet j;
  j.s = f(t);
  const auto y0 = j.s.to_vector();
  for (std::size_t i = 0; i < 7; ++i) {
    j.d1[i] = (ym2[i] - 8.0 * ym1[i] + 8.0 * yp1[i] - yp2[i]) / (12.0 * h);
    j.d2[i] = (-ym2[i] + 16.0 * ym1[i] - 30.0 * y0[i] + 16.0 * yp1[i] - yp2[i]) / (12.0 * h * h);
  }
  return j;
}

inline MinkowskiVec3 w_of(const StateCurve& f, double t) { return derived_frame(f(t)).w; }

}  // namespace detail

/// Dense-output view of a background trajectory as a state curve.
inline StateCurve as_curve(const Trajectory<7>& tr) {
  return [&tr](double t) { return BackgroundState::from_vector(t, tr(t)); };
}

// ---------------------------------------------------------------------------
// Residual scans

struct ResidualScan {
  std::string oracle;
  int n_points = 0;
  double rhs_max = 0.0;        ///< max |d/dt (finite difference) - nk_rhs|
  double conserved_max = 0.0;  ///< max |I_k|
  double frame_defect_max = 0.0;
  double w_ode_max = 0.0;       ///< max w_ode_residual, h = 1e-4, 0.05 away from the ends
  double printed_lambda_max = 0.0;  ///< diagnostic only
  double t_worst = 0.0;
};

enum class DerivativeMode { Analytic, FiniteDifference };

/// Max over an interior grid of |d/dt - nk_rhs|, plus the pointwise
/// invariants. Analytic mode needs a closed-form derivative on the curve.
inline ResidualScan residual_scan(const OracleCurve& c, int n_points,
                                  DerivativeMode mode = DerivativeMode::FiniteDifference, double h = 1e-6) {
  if (n_points < 2) throw std::invalid_argument("residual_scan: need at least two points");
  if (mode == DerivativeMode::Analytic && !c.derivative)
    throw std::invalid_argument("residual_scan: " + c.name + " has no closed-form derivative");
  ResidualScan r;
  r.oracle = c.name;
  r.n_points = n_points;
  // Stay 3h away from the ends so every stencil point is in the domain.
  const double lo = c.t_lo + 3e-4, hi = c.t_hi - 3e-4;
  for (double t : interior_grid(lo, hi, n_points)) {
    auto j = detail::jet(c.eval, t, h);
    if (mode == DerivativeMode::Analytic) j.d1 = c.derivative(t).to_vector();
    const auto f = nk_rhs(j.s).to_vector();
    double res = 0.0;
    for (std::size_t i = 0; i < 7; ++i) res = std::max(res, std::abs(j.d1[i] - f[i]));
    if (res > r.rhs_max) {
      r.rhs_max = res;
      r.t_worst = t;
    }
    r.conserved_max = std::max(r.conserved_max, conserved(j.s).max_abs());
    r.frame_defect_max = std::max(r.frame_defect_max, frame_defect(derived_frame(j.s)));
    r.printed_lambda_max =
        std::max(r.printed_lambda_max, std::abs(printed_lambda_equation_residual(j.s, j.d1[0], j.d1[3])));
  }
  // w blows up like 1/t at a collapsing orbit, so its difference quotient is
  // taken away from the ends.
  const double hw = 1e-4;
  for (double t : interior_grid(c.t_lo + 0.05, c.t_hi - 0.05, n_points)) {
    const MinkowskiVec3 dw = (detail::w_of(c.eval, t - 2 * hw) - 8.0 * detail::w_of(c.eval, t - hw) +
                              8.0 * detail::w_of(c.eval, t + hw) - detail::w_of(c.eval, t + 2 * hw)) /
                             (12.0 * hw);
    r.w_ode_max = std::max(r.w_ode_max, w_ode_residual(c.eval(t), dw));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Euler-Lagrange equations of the reduced Hitchin functional (theta = 0)

struct ElResiduals {
  double lambda = 0.0;
  double u0 = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double aux = 0.0;  ///< |u'|^2 = 2 lambda u1' + 12 |u|^2 - 9 u2^2 / lambda^2

  double max() const { return std::max({lambda, u0, u1, u2, aux}); }
};

/// Residual of the auxiliary identity for a numerically differentiated u.
inline double aux_identity_check(const BackgroundState& s, MinkowskiVec3 du) {
  const double l = s.lambda;
  return std::abs(minkowski_inner(du, du) - 2.0 * l * du.a1 - 12.0 * minkowski_inner(s.u, s.u) +
                  9.0 * s.u.a2 * s.u.a2 / (l * l));
}

/// Max over `ts` of each Euler-Lagrange residual, differentiating `f` with step h.
inline ElResiduals el_residuals(const StateCurve& f, std::span<const double> ts, double h) {
  ElResiduals r;
  for (double t : ts) {
    const auto j = detail::jet(f, t, h);
    const double l = j.s.lambda, dl = j.d1[0];
    const MinkowskiVec3 u = j.s.u;
    const MinkowskiVec3 du{j.d1[1], j.d1[2], j.d1[3]};
    const MinkowskiVec3 ddu{j.d2[1], j.d2[2], j.d2[3]};
    // d/dt (lambda u_i') = lambda' u_i' + lambda u_i''
    const MinkowskiVec3 flux = dl * du + l * ddu;
    const double uu = minkowski_inner(u, u);
    r.lambda = std::max(r.lambda, std::abs(12.0 * l * l + minkowski_inner(du, du) - 8.0 * l * du.a1 -
                                           9.0 * u.a2 * u.a2 / (l * l) - 12.0 * uu));
    r.u0 = std::max(r.u0, std::abs(flux.a0 + 12.0 * l * u.a0));
    r.u1 = std::max(r.u1, std::abs(flux.a1 + 12.0 * l * u.a1 - 4.0 * l * dl));
    r.u2 = std::max(r.u2, std::abs(flux.a2 + 12.0 * l * u.a2 - 9.0 * u.a2 / l));
    r.aux = std::max(r.aux, aux_identity_check(j.s, du));
  }
  return r;
}

inline ElResiduals el_residuals(const OracleCurve& c, int n_points = 100, double h = 1e-4) {
  const auto ts = interior_grid(c.t_lo + 0.05, c.t_hi - 0.05, n_points);
  return el_residuals(c.eval, ts, h);
}

/// Along a solved half, on interior points of (t_begin, t_end).
inline ElResiduals el_residuals(const Trajectory<7>& tr, int n_points = 100, double h = 1e-3) {
  const double margin = 4.0 * h;
  const auto ts = interior_grid(tr.t_begin() + margin, tr.t_end() - margin, n_points);
  return el_residuals(as_curve(tr), ts, h);
}

// ---------------------------------------------------------------------------
// Sine-cone eigen problem

/// Sign of the lower-left entry of the reduced 2x2 system.
enum class LegendreVariant { AsPrinted, AsMatrix };
/// Endpoint condition at t = pi/2.
enum class LegendreFunctional { ChiZero, XiZero };

inline std::string to_string(LegendreVariant v) { return v == LegendreVariant::AsPrinted ? "printed" : "matrix"; }
inline std::string to_string(LegendreFunctional f) { return f == LegendreFunctional::ChiZero ? "chi" : "xi"; }

/// xi' = Lambda chi / (4 sin t), chi' = s Lambda sin t xi / 3.
inline State<2> legendre_rhs(double t, const State<2>& y, double Lambda, double sign) {
  const double s = std::sin(t);
  return {Lambda * y[1] / (4.0 * s), sign * Lambda * s * y[0] / 3.0};
}

/// Bounded branch at t = 0. With k = s Lambda^2 / 12 the reduced system is
/// (sin t xi')' = k sin t xi, so xi = 1 + k t^2/4 + k(3k+2) t^4/192 + O(t^6).
inline State<2> legendre_launch(double Lambda, double sign, double eps) {
  const double k = sign * Lambda * Lambda / 12.0;
  const double e2 = eps * eps;
  const double xi = 1.0 + k * e2 / 4.0 + k * (3.0 * k + 2.0) * e2 * e2 / 192.0;
  const double dxi = k * eps / 2.0 + k * (3.0 * k + 2.0) * e2 * eps / 48.0;
  return {xi, 4.0 * std::sin(eps) * dxi / Lambda};
}

inline double legendre_sign(LegendreVariant v) { return v == LegendreVariant::AsPrinted ? 1.0 : -1.0; }

/// chi(pi/2) or xi(pi/2) for the bounded solution with xi(0) = 1.
inline double legendre_endpoint(LegendreVariant v, LegendreFunctional f, double Lambda, double eps = 1e-3,
                                double tol = 1e-13) {
  if (!(Lambda > 0.0)) throw std::invalid_argument("legendre_endpoint: Lambda must be positive");
  const double sign = legendre_sign(v);
  auto rhs = [Lambda, sign](double t, const State<2>& y) { return legendre_rhs(t, y, Lambda, sign); };
  const auto tr = integrate<2>(rhs, legendre_launch(Lambda, sign, eps), eps, std::numbers::pi / 2.0,
                               IntegratorOptions::with_tol(tol));
  return f == LegendreFunctional::ChiZero ? tr.back()[1] : tr.back()[0];
}

struct LegendreScan {
  LegendreVariant variant = LegendreVariant::AsMatrix;
  LegendreFunctional functional = LegendreFunctional::ChiZero;
  std::vector<double> roots;
  std::vector<std::pair<double, double>> grid;  ///< (Lambda, endpoint value)
};

inline LegendreScan legendre_scan(LegendreVariant v, LegendreFunctional f, double lo, double hi, int n,
                                  double tol_L = 1e-11) {
  if (!(0.0 < lo && lo < hi && hi <= 14.0) || n < 2)
    throw std::invalid_argument("legendre_scan: need 0 < lo < hi <= 14 and n >= 2");
  LegendreScan s;
  s.variant = v;
  s.functional = f;
  auto g = [&](double L) { return legendre_endpoint(v, f, L); };
  for (int i = 0; i < n; ++i) {
    const double L = lo + (hi - lo) * i / (n - 1);
    s.grid.emplace_back(L, g(L));
  }
  for (std::size_t i = 0; i + 1 < s.grid.size(); ++i) {
    auto [a, ga] = s.grid[i];
    auto [b, gb] = s.grid[i + 1];
    if (ga == 0.0) {
      s.roots.push_back(a);
      continue;
    }
    if ((ga > 0.0) == (gb > 0.0)) continue;
    while (b - a > tol_L) {
      const double m = 0.5 * (a + b);
      const double gm = g(m);
      if ((gm > 0.0) == (ga > 0.0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    s.roots.push_back(0.5 * (a + b));
  }
  return s;
}

/// All four (variant, functional) combinations over one range.
inline std::vector<LegendreScan> legendre_scan_all(double lo, double hi, int n) {
  std::vector<LegendreScan> out;
  for (auto v : {LegendreVariant::AsPrinted, LegendreVariant::AsMatrix})
    for (auto f : {LegendreFunctional::ChiZero, LegendreFunctional::XiZero}) out.push_back(legendre_scan(v, f, lo, hi, n));
  return out;
}

inline bool contains_root(const LegendreScan& s, double target, double tol) {
  for (double r : s.roots)
    if (std::abs(r - target) <= tol) return true;
  return false;
}

/// At Lambda = sqrt(72) on the sine cone, (h1, f2) = C (1, -sqrt 2) sin^p t
/// with xi = chi = 0. Returns the max relative residual of the eigen system
/// and both constraints for exponent p over an interior grid.
inline double sine_cone_sqrt72_residual(int p, int n_points = 50) {
  const double Lambda = std::sqrt(72.0);
  double worst = 0.0;
  for (double t : interior_grid(0.1, std::numbers::pi - 0.1, n_points)) {
    const BackgroundState bg = sine_cone_state(t);
    const DerivedFrame fr = derived_frame(bg);
    const double s = std::sin(t), c = std::cos(t);
    const double h1 = std::pow(s, p);
    const double dh1 = p * std::pow(s, p - 1) * c;
    const EigenState H{0.0, 0.0, h1, -std::sqrt(2.0) * h1};
    const EigenState d = eigen_rhs(bg, fr, Lambda, H);
    const auto cr = constraint_residuals(bg, fr, Lambda, H);
    const double n = std::abs(h1) + std::abs(dh1);
    worst = std::max({worst, std::abs(d.xi) / n, std::abs(d.chi) / n, std::abs(d.h1 - dh1) / n,
                      std::abs(d.f2 + std::sqrt(2.0) * dh1) / n, std::abs(cr.Re) / n, std::abs(cr.Rf) / n});
  }
  return worst;
}

}  // namespace nkh
