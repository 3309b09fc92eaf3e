#pragma once

// Launching ODEs with a regular singular point at t = 0:
//
//   y' = (A_{-1} / t + A_0 + A_1 t + ...) y.
//
// Smooth solutions start in the non-negative eigenspace of A_{-1}. The
// helpers here analyse A_{-1}, build the power series of the smooth
// solution, and evaluate/validate truncated series launches.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nkhitchin/errors.hpp"
#include "nkhitchin/ode.hpp"
#include "nkhitchin/series.hpp"

namespace nkh {

struct SingularSpectrum {
  int dimension = 0;
  std::vector<double> eigenvalues;             ///< ascending
  std::optional<Eigen::VectorXd> kernel_vector; ///< unit length, first nonzero entry positive
  int negative_count = 0;
};

inline SingularSpectrum frozen_singular_spectrum(const Eigen::MatrixXd& a_minus1, double zero_tol = 1e-9) {
  if (!a_minus1.allFinite()) throw NumericError(ErrorKind::ComplexSpectrum, "non-finite singular matrix");
  const Eigen::Index k = a_minus1.rows();
  const double scale = std::max(1.0, a_minus1.norm());

  Eigen::EigenSolver<Eigen::MatrixXd> es(a_minus1, false);
  SingularSpectrum out;
  out.dimension = static_cast<int>(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto ev = es.eigenvalues()[i];
    if (std::abs(ev.imag()) > zero_tol * scale)
      throw NumericError(ErrorKind::ComplexSpectrum,
                         "eigenvalue " + std::to_string(ev.real()) + " + " + std::to_string(ev.imag()) + "i");
    out.eigenvalues.push_back(ev.real());
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  out.negative_count = static_cast<int>(
      std::count_if(out.eigenvalues.begin(), out.eigenvalues.end(), [&](double e) { return e < -zero_tol * scale; }));

  const bool has_zero = std::any_of(out.eigenvalues.begin(), out.eigenvalues.end(),
                                    [&](double e) { return std::abs(e) <= zero_tol * scale; });
  if (has_zero) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a_minus1, Eigen::ComputeFullV);
    Eigen::VectorXd v = svd.matrixV().col(k - 1);
    v.normalize();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0) v = -v;
        break;
      }
    }
    out.kernel_vector = v;
  }
  return out;
}

/// Power-series coefficients c_0..c_K of the smooth solution started at c_0:
/// (k - A_{-1}) c_k = sum_{j<k} A_{k-1-j} c_j. `terms[0]` is A_{-1},
/// `terms[m + 1]` is A_m; K is bounded by the number of regular terms given.
inline std::vector<Eigen::VectorXd> frobenius_coefficients(std::span<const Eigen::MatrixXd> terms,
                                                           const Eigen::VectorXd& c0, int max_order) {
  const Eigen::Index n = c0.size();
  const int available = static_cast<int>(terms.size()) - 1;
  const int K = std::min(max_order, available);
  std::vector<Eigen::VectorXd> c{c0};
  for (int k = 1; k <= K; ++k) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < k; ++j) rhs += terms[static_cast<std::size_t>(k - j)] * c[static_cast<std::size_t>(j)];
    const Eigen::MatrixXd m = static_cast<double>(k) * Eigen::MatrixXd::Identity(n, n) - terms[0];
    c.push_back(m.fullPivLu().solve(rhs));
  }
  return c;
}

struct LaunchCertificate {
  double eps = 0.0;
  double t_check = 0.0;
  double discrepancy_coarse = 0.0;  ///< |Y_eps - Y_{eps/2}| at t_check
  double discrepancy_fine = 0.0;    ///< |Y_{eps/2} - Y_{eps/4}| at t_check
  double factor = 0.0;
  bool passed = false;
  std::vector<double> component_coarse;  ///< per-component versions of the two discrepancies
  std::vector<double> component_fine;
};

template <std::size_t N>
struct LaunchResult {
  State<N> y{};
  std::optional<LaunchCertificate> certificate;
};

template <std::size_t N>
State<N> evaluate_series(std::span<const Series> series, double t) {
  State<N> y{};
  for (std::size_t i = 0; i < N; ++i) y[i] = series[i].eval(t);
  return y;
}

/// Settings for the Richardson check of a series launch.
template <std::size_t N>
struct LaunchValidation {
  std::function<State<N>(double, const State<N>&)> rhs;
  double t_check = 0.5;
  double tol = 1e-13;
  double min_factor = 3.0;
};

template <std::size_t N>
double max_abs_diff(const State<N>& a, const State<N>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < N; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Evaluates the truncated series at eps. With validation, also integrates
/// launches from eps, eps/2 and eps/4 to t_check and requires the launch
/// discrepancy to shrink by at least `min_factor` when eps halves.
template <std::size_t N>
LaunchResult<N> singular_launch(std::span<const Series> series, double eps,
                                const std::optional<LaunchValidation<N>>& validation = std::nullopt) {
  if (!(eps > 0.0)) throw std::invalid_argument("singular_launch: eps must be positive");
  LaunchResult<N> out;
  out.y = evaluate_series<N>(series, eps);
  if (!validation) return out;

  const auto& val = *validation;
  auto run = [&](double e) {
    const auto tr = integrate<N>(val.rhs, evaluate_series<N>(series, e), e, val.t_check,
                                 IntegratorOptions::with_tol(val.tol));
    return tr.back();
  };
  const State<N> y1 = run(eps);
  const State<N> y2 = run(eps / 2);
  const State<N> y4 = run(eps / 4);

  LaunchCertificate cert;
  cert.eps = eps;
  cert.t_check = val.t_check;
  cert.discrepancy_coarse = max_abs_diff<N>(y1, y2);
  cert.discrepancy_fine = max_abs_diff<N>(y2, y4);
  cert.factor = cert.discrepancy_coarse / cert.discrepancy_fine;
  for (std::size_t i = 0; i < N; ++i) {
    cert.component_coarse.push_back(std::abs(y1[i] - y2[i]));
    cert.component_fine.push_back(std::abs(y2[i] - y4[i]));
  }
  cert.passed = cert.factor >= val.min_factor;
  out.certificate = cert;
  if (!cert.passed)
    throw NumericError(ErrorKind::ValidationFailed,
                       "launch discrepancy shrinks by " + std::to_string(cert.factor) + " (coarse " +
                           std::to_string(cert.discrepancy_coarse) + ", fine " +
                           std::to_string(cert.discrepancy_fine) + ")");
  return out;
}

}  // namespace nkh
