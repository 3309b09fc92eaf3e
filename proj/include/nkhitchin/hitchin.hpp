#pragma once

// Linear Hitchin-index system over a nearly Kaehler half.
//
// H = (xi, chi, h1, f2) with xi = mu h0 and chi = lambda mu g0 obeys H' = A(t) H
// together with two algebraic constraints R_e = R_f = 0 that the flow
// preserves. Smooth solutions are launched from the kernel of the singular
// part of A at t = 0 and shot to the maximal-volume orbit T*.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nkhitchin/background.hpp"
#include "nkhitchin/errors.hpp"
#include "nkhitchin/minkowski.hpp"
#include "nkhitchin/ode.hpp"
#include "nkhitchin/parallel.hpp"
#include "nkhitchin/series.hpp"
#include "nkhitchin/singular.hpp"

namespace nkh {

struct EigenState {
  double xi = 0.0;
  double chi = 0.0;
  double h1 = 0.0;
  double f2 = 0.0;

  std::array<double, 4> to_array() const { return {xi, chi, h1, f2}; }
  static EigenState from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

  double norm() const { return std::sqrt(xi * xi + chi * chi + h1 * h1 + f2 * f2); }
  EigenState scaled(double c) const { return {c * xi, c * chi, c * h1, c * f2}; }
};

inline EigenState eigen_rhs(const BackgroundState& bg, const DerivedFrame& fr, double Lambda, const EigenState& H) {
  const double l = bg.lambda, mu = fr.mu;
  const double w1 = fr.w.a1, w2 = fr.w.a2;
  return {Lambda / (4.0 * l) * H.chi - 6.0 * l * w1 * H.h1,
          -Lambda * l / 3.0 * H.xi - 6.0 * mu * w2 * H.f2,
          -2.0 * l * w1 / (mu * mu) * H.xi - 6.0 * l * fr.x.a1 / mu * H.h1,
          -3.0 * w2 / (l * l * mu) * H.chi - 6.0 * fr.y.a2 / l * H.f2};
}

struct ConstraintResiduals {
  double Re = 0.0;
  double Rf = 0.0;
};

inline ConstraintResiduals constraint_residuals(const BackgroundState& bg, const DerivedFrame& fr, double Lambda,
                                                const EigenState& H) {
  const double l = bg.lambda, mu = fr.mu;
  return {3.0 * fr.w.a2 / (l * mu) * H.xi + 3.0 * H.h1 + Lambda / 4.0 * H.f2,
          2.0 * fr.w.a1 / (mu * mu) * H.chi - 2.0 * H.f2 - Lambda / 3.0 * H.h1};
}

// ---------------------------------------------------------------------------
// Launch at the singular orbit

/// Powers of t factored out of (xi, chi, h1, f2) so that the rescaled system
/// has a simple pole at t = 0.
inline std::array<int, 4> eigen_scalings(Variant v) {
  return v == Variant::B ? std::array<int, 4>{2, 1, 2, 0} : std::array<int, 4>{1, 3, 0, 2};
}

/// Kernel vector of the singular part, normalised to leading coefficient A = 1.
inline Eigen::Vector4d eigen_kernel(const HalfFamily& f, double Lambda) {
  const double p = f.param;
  if (f.variant == Variant::B) return {Lambda, 8.0 * p, -Lambda / (10.0 * p), 2.0 / p};
  const double r3 = std::sqrt(3.0);
  return {6.0, -Lambda, -2.0 * r3 / (3.0 * p), r3 * Lambda / (27.0 * p)};
}

/// Closed-form singular part of the rescaled system.
inline Eigen::Matrix4d eigen_singular_matrix(const HalfFamily& f, double Lambda) {
  const double p = f.param;
  Eigen::Matrix4d m;
  if (f.variant == Variant::B) {
    m << -2.0, Lambda / (4.0 * p), 0.0, 0.0,  //
        0.0, -1.0, 0.0, 4.0 * p * p,          //
        -1.0 / (2.0 * p), 0.0, -5.0, 0.0,     //
        0.0, 1.0 / (2.0 * p * p), 0.0, -2.0;
  } else {
    const double r3 = std::sqrt(3.0);
    m << -1.0, 0.0, -3.0 * r3 * p, 0.0,            //
        -Lambda / 2.0, -3.0, 0.0, 0.0,              //
        -r3 / (3.0 * p), 0.0, -3.0, 0.0,            //
        0.0, -2.0 * r3 / (9.0 * p), 0.0, -6.0;
  }
  return m;
}

/// Leading-order launch: kernel vector times the powers t^s.
inline EigenState eigen_launch(const HalfFamily& f, double Lambda, double eps) {
  require_valid(f);
  if (!(Lambda > 0.0)) throw std::invalid_argument("eigen_launch: Lambda must be positive");
  if (!(eps > 0.0 && eps <= 0.1)) throw std::invalid_argument("eigen_launch: eps must lie in (0, 0.1]");
  const auto s = eigen_scalings(f.variant);
  const Eigen::Vector4d k = eigen_kernel(f, Lambda);
  std::array<double, 4> h{};
  for (int i = 0; i < 4; ++i) h[static_cast<std::size_t>(i)] = k[i] * std::pow(eps, s[static_cast<std::size_t>(i)]);
  return EigenState::from_array(h);
}

/// Laurent series of the rescaled coefficient matrix, built from Taylor data
/// of the background. Entry (i, j) is A_ij t^(s_j - s_i) - delta_ij s_i / t.
inline std::array<std::array<Series, 4>, 4> rescaled_eigen_matrix(const HalfFamily& f, const BackgroundSeries& bs,
                                                                  double Lambda) {
  const Series& l = bs.lambda;
  const Series inv_l = l.inverse();
  const Series musq = detail::minkowski_square(bs.u);
  const Series mu = musq.sqrt();
  const Series inv_musq = musq.inverse();
  const auto& u = bs.u;
  const auto& v = bs.v;
  const Series scale = inv_l * inv_musq;
  const Series w1 = (u[0] * v[2] - u[2] * v[0]) * scale;
  const Series w2 = (u[1] * v[0] - v[1] * u[0]) * scale;
  const int ord = std::max({l.order(), mu.order(), w1.order(), w2.order()}) + 8;
  const Series zero(0, {}, ord);

  std::array<std::array<Series, 4>, 4> a;
  for (auto& row : a) row.fill(zero);
  a[0][1] = (Lambda / 4.0) * inv_l;
  a[0][2] = -6.0 * l * w1;
  a[1][0] = (-Lambda / 3.0) * l;
  a[1][3] = -6.0 * mu * w2;
  a[2][0] = -2.0 * l * w1 * inv_musq;
  a[2][2] = -6.0 * l * u[1] * inv_musq;
  a[3][1] = -3.0 * w2 * inv_l * inv_l * mu * inv_musq;
  a[3][3] = -6.0 * v[2] * inv_l * inv_l * mu * inv_musq;

  const auto s = eigen_scalings(f.variant);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const int shift = s[static_cast<std::size_t>(j)] - s[static_cast<std::size_t>(i)];
      Series& e = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      e = e * Series::monomial(shift, shift + ord);
      if (i == j) e = e + (-static_cast<double>(s[static_cast<std::size_t>(i)])) * Series::monomial(-1, ord);
    }
  }
  return a;
}

/// Coefficient matrices [A_{-1}, A_0, A_1, ...] of the rescaled system, as
/// far as the background data determine them.
inline std::vector<Eigen::MatrixXd> rescaled_eigen_terms(const HalfFamily& f, const BackgroundSeries& bs,
                                                         double Lambda) {
  const auto a = rescaled_eigen_matrix(f, bs, Lambda);
  int hi = 1 << 20;
  for (const auto& row : a)
    for (const auto& e : row) {
      hi = std::min(hi, e.order());
      for (int k = e.low(); k < std::min(-1, e.order()); ++k)
        if (std::abs(e.coeff(k)) > 1e-9 * std::max(1.0, e.max_abs_coeff()))
          throw NumericError(ErrorKind::ComplexSpectrum, "rescaled eigen system is not regular singular");
    }
  std::vector<Eigen::MatrixXd> terms;
  for (int k = -1; k < hi; ++k) {
    Eigen::MatrixXd m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].coeff(k);
    terms.push_back(std::move(m));
  }
  return terms;
}

struct EigenSeriesLaunch {
  EigenState state;
  int order = 0;  ///< number of correction terms beyond the kernel vector
};

/// Higher-order launch: Frobenius series of the rescaled system started at the
/// kernel vector, evaluated at eps and scaled back.
inline EigenSeriesLaunch eigen_series_launch(const HalfFamily& f, double Lambda, double eps,
                                             const BackgroundSeries& bs, int max_order = 16) {
  require_valid(f);
  const auto terms = rescaled_eigen_terms(f, bs, Lambda);
  const auto coeffs = frobenius_coefficients(terms, eigen_kernel(f, Lambda), max_order);
  const auto s = eigen_scalings(f.variant);
  Eigen::Vector4d bar = Eigen::Vector4d::Zero();
  for (std::size_t k = coeffs.size(); k-- > 0;) bar = bar * eps + coeffs[k];
  std::array<double, 4> h{};
  for (int i = 0; i < 4; ++i) h[static_cast<std::size_t>(i)] = bar[i] * std::pow(eps, s[static_cast<std::size_t>(i)]);
  return {EigenState::from_array(h), static_cast<int>(coeffs.size()) - 1};
}

// ---------------------------------------------------------------------------
// Shooting

enum class Matching { Tau2Double, Tau2DoubleAlt, Tau1Double, NoMatch, Degenerate };

inline std::string to_string(Matching m) {
  switch (m) {
    case Matching::Tau2Double: return "Tau2Double";
    case Matching::Tau2DoubleAlt: return "Tau2DoubleAlt";
    case Matching::Tau1Double: return "Tau1Double";
    case Matching::NoMatch: return "NoMatch";
    case Matching::Degenerate: return "Degenerate";
  }
  return "NoMatch";
}

enum class EigenLaunchKind { Leading, Series };

struct ShootOptions {
  double tol = 1e-10;
  EigenLaunchKind launch = EigenLaunchKind::Series;
  int series_order = 16;
  double launch_scale = 1.0;
  std::optional<EigenState> launch_state;  ///< replaces the computed launch (linearity checks)
  double classify_tol = 1e-6;
  bool keep_trajectory = false;
};

struct EigenSample {
  double t = 0.0;
  EigenState H;
  double Re = 0.0;
  double Rf = 0.0;
};

struct ShootReport {
  HalfFamily family;
  double Lambda = 0.0;
  double t_star = 0.0;
  double xi_star = 0.0, chi_star = 0.0, h1_star = 0.0, f2_star = 0.0;
  double norm_star = 0.0;
  double max_constraint_residual = 0.0;  ///< max over nodes of max(|R_e|, |R_f|) / |H|
  double launch_constraint_residual = 0.0;
  double dh1_star = 0.0;  ///< dh1/dt at T*
  // Background at T*.
  double w1_star = 0.0, w2_star = 0.0, lambda_bg_star = 0.0, mu_star = 0.0;
  std::size_t steps = 0;
  Matching classification = Matching::NoMatch;
  std::vector<EigenSample> samples;

  EigenState H_star() const { return {xi_star, chi_star, h1_star, f2_star}; }
};

/// Thresholded matching test at T*. Which pair of conditions applies depends
/// on the involution under which the background doubles.
inline Matching classify_matching(const ShootReport& r, double tol) {
  const double n = std::max(r.norm_star, std::numeric_limits<double>::min());
  auto small = [&](double x) { return std::abs(x) <= tol * n; };
  if (r.norm_star == 0.0 || (small(r.xi_star) && small(r.chi_star) && small(r.h1_star) && small(r.f2_star)))
    return Matching::Degenerate;
  const double wscale = std::max({1.0, std::abs(r.w1_star), std::abs(r.w2_star)});
  if (std::abs(r.w1_star) <= tol * wscale) {
    if (small(r.chi_star)) return Matching::Tau2Double;
    if (small(r.xi_star) && small(r.h1_star) && small(r.f2_star)) return Matching::Tau2DoubleAlt;
  } else if (std::abs(r.w2_star) <= tol * wscale) {
    if (small(r.xi_star) || (small(r.chi_star) && small(r.h1_star) && small(r.f2_star))) return Matching::Tau1Double;
  }
  return Matching::NoMatch;
}

using CoupledState = State<11>;

namespace detail {

inline BackgroundState coupled_background(double t, const CoupledState& y) {
  return {t, y[0], {y[1], y[2], y[3]}, {y[4], y[5], y[6]}};
}

inline EigenState coupled_eigen(const CoupledState& y) { return {y[7], y[8], y[9], y[10]}; }

inline double eigen_max_norm(const CoupledState& y) {
  return std::max({std::abs(y[7]), std::abs(y[8]), std::abs(y[9]), std::abs(y[10])});
}

}  // namespace detail

inline CoupledState coupled_rhs(double t, const CoupledState& y, double Lambda) {
  const BackgroundState bg = detail::coupled_background(t, y);
  const DerivedFrame fr = derived_frame(bg);
  const BackgroundDerivative d = nk_rhs(bg);
  const EigenState dh = eigen_rhs(bg, fr, Lambda, detail::coupled_eigen(y));
  return {d.lambda, d.u.a0, d.u.a1, d.u.a2, d.v.a0, d.v.a1, d.v.a2, dh.xi, dh.chi, dh.h1, dh.f2};
}

/// Launch state of the eigen block at t = half.eps.
inline EigenState shoot_launch(const HalfSolution& half, double Lambda, const ShootOptions& opt) {
  if (opt.launch_state) return opt.launch_state->scaled(opt.launch_scale);
  const EigenState h = opt.launch == EigenLaunchKind::Leading
                           ? eigen_launch(half.family, Lambda, half.eps)
                           : eigen_series_launch(half.family, Lambda, half.eps,
                                                 half.extended_series.value_or(half_series(half.family)),
                                                 opt.series_order)
                                 .state;
  return h.scaled(opt.launch_scale);
}

/// Co-integrates background and eigen block from the launch of `half` to the
/// orbit of maximal volume. The eigen block is weighted by its own max-norm,
/// so the step sequence, and hence the endpoint map, is exactly linear in the
/// launch.
inline ShootReport shoot(const HalfSolution& half, double Lambda, const ShootOptions& opt = {}) {
  if (!(Lambda > 0.0)) throw std::invalid_argument("shoot: Lambda must be positive");
  const EigenState h0 = shoot_launch(half, Lambda, opt);
  // The eigen constraints amplify background launch error by 1/t^2, so the
  // background restarts from the continued Taylor data when they exist.
  const BackgroundVector b0 =
      half.extended_series
          ? project_onto_constraints(evaluate(*half.extended_series, half.trajectory.t_begin())).to_vector()
          : half.trajectory.states().front();
  const CoupledState y0{b0[0], b0[1], b0[2], b0[3], b0[4], b0[5], b0[6], h0.xi, h0.chi, h0.h1, h0.f2};
  const double t0 = half.trajectory.t_begin();

  const double tol = opt.tol;
  const ErrorScale<11> weights = [tol](const CoupledState& a, const CoupledState& b, CoupledState& sc) {
    for (std::size_t i = 0; i < 7; ++i) sc[i] = tol + tol * std::max(std::abs(a[i]), std::abs(b[i]));
    const double n = std::max(detail::eigen_max_norm(a), detail::eigen_max_norm(b));
    for (std::size_t i = 7; i < 11; ++i) sc[i] = tol * n;
  };
  const std::array<EventSpec<11>, 1> events{EventSpec<11>{
      kVolumeEvent,
      [](double t, const CoupledState& y) { return volume_slope(detail::coupled_background(t, y)); }, -1}};
  auto rhs = [Lambda](double t, const CoupledState& y) { return coupled_rhs(t, y, Lambda); };
  const auto tr = integrate<11>(rhs, y0, t0, std::max(half.t_star * 1.5, half.t_star + 0.5),
                                IntegratorOptions::with_tol(tol), events, kVolumeEvent, weights);

  ShootReport r;
  r.family = half.family;
  r.Lambda = Lambda;
  r.t_star = tr.t_end();
  r.steps = tr.stats().accepted;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto bg = detail::coupled_background(tr.times()[k], tr.states()[k]);
    const auto fr = derived_frame(bg);
    const auto H = detail::coupled_eigen(tr.states()[k]);
    const auto c = constraint_residuals(bg, fr, Lambda, H);
    const double n = H.norm();
    const double res = n > 0.0 ? std::max(std::abs(c.Re), std::abs(c.Rf)) / n : 0.0;
    if (k == 0) r.launch_constraint_residual = res;
    r.max_constraint_residual = std::max(r.max_constraint_residual, res);
    if (opt.keep_trajectory) r.samples.push_back({bg.t, H, c.Re, c.Rf});
  }
  const auto bg = detail::coupled_background(r.t_star, tr.back());
  const auto fr = derived_frame(bg);
  const auto H = detail::coupled_eigen(tr.back());
  r.xi_star = H.xi;
  r.chi_star = H.chi;
  r.h1_star = H.h1;
  r.f2_star = H.f2;
  r.norm_star = H.norm();
  r.dh1_star = eigen_rhs(bg, fr, Lambda, H).h1;
  r.w1_star = fr.w.a1;
  r.w2_star = fr.w.a2;
  r.lambda_bg_star = bg.lambda;
  r.mu_star = fr.mu;
  r.classification = classify_matching(r, opt.classify_tol);
  return r;
}

struct LambdaStarResult {
  double lambda_star = 0.0;
  double chi_normalized = 0.0;  ///< chi(T*, Lambda*) / |H(T*)|
  std::vector<std::pair<double, double>> grid;  ///< (Lambda, chi*/|H*|)
  int bisection_steps = 0;
};

/// Root of Lambda -> chi(T*, Lambda) in (lo, hi) with chi(lo) > 0 > chi(hi).
inline LambdaStarResult find_lambda_star(const HalfSolution& half, double lo, double hi, double tol_L,
                                         const ShootOptions& opt = {}, int grid_n = 16,
                                         unsigned workers = worker_count()) {
  if (!(0.0 < lo && lo < hi)) throw std::invalid_argument("find_lambda_star: need 0 < lo < hi");
  auto chi_of = [&](double L) {
    const auto r = shoot(half, L, opt);
    return r.chi_star / r.norm_star;
  };
  LambdaStarResult res;
  std::vector<double> Ls(static_cast<std::size_t>(grid_n));
  for (int i = 0; i < grid_n; ++i) Ls[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (grid_n - 1);
  const auto chis = parallel_map<double>(Ls.size(), [&](std::size_t i) { return chi_of(Ls[i]); }, workers);
  for (std::size_t i = 0; i < Ls.size(); ++i) res.grid.emplace_back(Ls[i], chis[i]);

  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg.precision(6);
    msg << why << ":";
    for (const auto& [L, c] : res.grid) msg << " (" << L << ", " << c << ")";
    throw NumericError(ErrorKind::NoSignChange, msg.str());
  };
  if (!(chis.front() > 0.0)) fail("chi(T*) is not positive at the lower bracket end");
  if (!(chis.back() < 0.0)) fail("chi(T*) is not negative at the upper bracket end");

  std::size_t i = 0;
  while (chis[i + 1] > 0.0) ++i;
  double a = Ls[i], b = Ls[i + 1];
  while (b - a > tol_L) {
    const double m = 0.5 * (a + b);
    ++res.bisection_steps;
    if (chi_of(m) > 0.0)
      a = m;
    else
      b = m;
  }
  res.lambda_star = 0.5 * (a + b);
  res.chi_normalized = chi_of(res.lambda_star);
  return res;
}

// ---------------------------------------------------------------------------
// Sign relations at T*

struct PortraitRow {
  double Lambda = 0.0;
  double xi = 0.0, chi = 0.0, h1 = 0.0, f2 = 0.0;
  double norm = 0.0;
  double opposite_product = 0.0;  ///< h1 * f2
  double relation_xi_h1 = 0.0;      ///< |(w2/(lambda mu)) xi - (Lambda^2/72 - 1) h1| / |H|
  double relation_f2 = 0.0;       ///< |f2 + (Lambda/6) h1| / |H|
  bool opposite_ok = false;
  bool relation_xi_h1_ok = false;
  bool relation_f2_ok = false;
  bool xi_positive_ok = false;  ///< xi > 0 when Lambda < sqrt(72); vacuous otherwise

  bool all_ok() const { return opposite_ok && relation_xi_h1_ok && relation_f2_ok && xi_positive_ok; }
};

inline PortraitRow portrait_row(const ShootReport& r, double tol) {
  PortraitRow row;
  row.Lambda = r.Lambda;
  row.xi = r.xi_star;
  row.chi = r.chi_star;
  row.h1 = r.h1_star;
  row.f2 = r.f2_star;
  row.norm = r.norm_star;
  row.opposite_product = r.h1_star * r.f2_star;
  const double L = r.Lambda;
  row.relation_xi_h1 = std::abs(r.w2_star / (r.lambda_bg_star * r.mu_star) * r.xi_star - (L * L / 72.0 - 1.0) * r.h1_star) /
                     r.norm_star;
  row.relation_f2 = std::abs(r.f2_star + L / 6.0 * r.h1_star) / r.norm_star;
  row.opposite_ok = row.opposite_product <= 0.0;
  row.relation_xi_h1_ok = row.relation_xi_h1 <= tol;
  row.relation_f2_ok = row.relation_f2 <= tol;
  row.xi_positive_ok = L >= std::sqrt(72.0) || r.xi_star > 0.0;
  return row;
}

inline std::vector<PortraitRow> sign_portrait(const HalfSolution& half, std::span<const double> grid,
                                              double tol = 1e-6, const ShootOptions& opt = {},
                                              unsigned workers = worker_count()) {
  for (double L : grid)
    if (!(L > 0.0 && L <= 12.0)) throw std::invalid_argument("sign_portrait: grid must lie in (0, 12]");
  return parallel_map<PortraitRow>(
      grid.size(), [&](std::size_t i) { return portrait_row(shoot(half, grid[i], opt), tol); }, workers);
}

// ---------------------------------------------------------------------------
// Index bounds

/// An eigenvalue nu of the Laplacian, or an open interval known to contain it.
struct NuEntry {
  double lo = 0.0;
  double hi = 0.0;
  int multiplicity = 1;

  static NuEntry exact(double nu, int m = 1) { return {nu, nu, m}; }
  static NuEntry interval(double lo, double hi, int m = 1) { return {lo, hi, m}; }
};

struct IndexBounds {
  int hitchin_lb = 0;
  int einstein_lb = 0;
};

/// Band weight of the Einstein co-index formula: 3 on (0,2), 2 on [2,6), 1 on [6,12).
inline int einstein_weight(double nu) {
  if (nu < 2.0) return 3;
  if (nu < 6.0) return 2;
  return 1;
}

/// Smallest band weight over the open interval (lo, hi), or at lo when lo == hi.
inline int einstein_weight_min(double lo, double hi) {
  if (lo == hi) return einstein_weight(lo);
  // Bands are half-open on the right, so the infimum over (lo, hi) is attained just below hi.
  return einstein_weight(std::nextafter(hi, lo));
}

inline IndexBounds index_bounds(std::span<const NuEntry> nus, int b2, int b3) {
  IndexBounds out;
  out.einstein_lb = b2 + b3;
  for (const auto& e : nus) {
    const bool ok = e.lo == e.hi ? (e.lo > 0.0 && e.lo < 12.0) : (e.lo >= 0.0 && e.lo < e.hi && e.hi <= 12.0);
    if (!ok)
      throw NumericError(ErrorKind::NuOutOfRange,
                         "nu in [" + std::to_string(e.lo) + ", " + std::to_string(e.hi) + "] not inside (0, 12)");
    if (e.multiplicity < 1) throw std::invalid_argument("index_bounds: multiplicity must be at least 1");
    out.hitchin_lb += e.multiplicity;
    out.einstein_lb += einstein_weight_min(e.lo, e.hi) * e.multiplicity;
  }
  return out;
}

}  // namespace nkh
