#pragma once

// Frame algebra of SU(2)xSU(2)-invariant nearly Kaehler structures.
//
// A background state (lambda, u, v) lives in R x R^{1,2} x R^{1,2}. The
// orthonormal frame (w, x, y) and the orbit scale mu are derived from it
// algebraically; mu is never an independent variable.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "nkhitchin/errors.hpp"

namespace nkh {

/// A point of R^{1,2}; index 0 is timelike, signature (-,+,+).
struct MinkowskiVec3 {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? a0 : (i == 1 ? a1 : a2); }

  friend constexpr MinkowskiVec3 operator+(MinkowskiVec3 p, MinkowskiVec3 q) {
    return {p.a0 + q.a0, p.a1 + q.a1, p.a2 + q.a2};
  }
  friend constexpr MinkowskiVec3 operator-(MinkowskiVec3 p, MinkowskiVec3 q) {
    return {p.a0 - q.a0, p.a1 - q.a1, p.a2 - q.a2};
  }
  friend constexpr MinkowskiVec3 operator*(double s, MinkowskiVec3 p) {
    return {s * p.a0, s * p.a1, s * p.a2};
  }
  friend constexpr MinkowskiVec3 operator/(MinkowskiVec3 p, double s) {
    return {p.a0 / s, p.a1 / s, p.a2 / s};
  }
};

constexpr double minkowski_inner(MinkowskiVec3 p, MinkowskiVec3 q) {
  return -p.a0 * q.a0 + p.a1 * q.a1 + p.a2 * q.a2;
}

inline double max_abs(MinkowskiVec3 p) {
  return std::max({std::abs(p.a0), std::abs(p.a1), std::abs(p.a2)});
}

/// Layout used by the integrators: (lambda, u0, u1, u2, v0, v1, v2).
using BackgroundVector = std::array<double, 7>;

struct BackgroundState {
  double t = 0.0;
  double lambda = 0.0;
  MinkowskiVec3 u;
  MinkowskiVec3 v;

  BackgroundVector to_vector() const { return {lambda, u.a0, u.a1, u.a2, v.a0, v.a1, v.a2}; }

  static BackgroundState from_vector(double t, const BackgroundVector& y) {
    return {t, y[0], {y[1], y[2], y[3]}, {y[4], y[5], y[6]}};
  }
};

/// d/dt of a background state; `t` is unused.
using BackgroundDerivative = BackgroundState;

struct DerivedFrame {
  double mu = 0.0;
  MinkowskiVec3 w;
  MinkowskiVec3 x;
  MinkowskiVec3 y;
};

struct ConservedQuadruple {
  double I1 = 0.0;
  double I2 = 0.0;
  double I3 = 0.0;
  double I4 = 0.0;

  double max_abs() const {
    return std::max({std::abs(I1), std::abs(I2), std::abs(I3), std::abs(I4)});
  }
};

inline DerivedFrame derived_frame(const BackgroundState& s) {
  const auto& u = s.u;
  const auto& v = s.v;
  const double musq = minkowski_inner(u, u);
  if (!(musq > 0.0))
    throw NumericError(ErrorKind::NonPositiveMuSq,
                       "inner(u,u) = " + std::to_string(musq) + " at t = " + std::to_string(s.t));
  const double mu = std::sqrt(musq);
  const double scale = s.lambda * musq;
  DerivedFrame f;
  f.mu = mu;
  f.w = {(u.a1 * v.a2 - v.a1 * u.a2) / scale, (u.a0 * v.a2 - u.a2 * v.a0) / scale,
         (u.a1 * v.a0 - v.a1 * u.a0) / scale};
  f.x = u / mu;
  f.y = v / (s.lambda * mu);
  return f;
}

inline ConservedQuadruple conserved(const BackgroundState& s) {
  const double uu = minkowski_inner(s.u, s.u);
  const double l2 = s.lambda * s.lambda;
  return {minkowski_inner(s.u, s.v), l2 * uu - s.u.a2 * s.u.a2, l2 * uu - minkowski_inner(s.v, s.v),
          s.v.a1 - uu};
}

/// Right-hand side of the reduced nearly Kaehler system. lambda evolves by
/// d(lambda)/dt = 3 y2 - 2 lambda^2 x1 / mu.
inline BackgroundDerivative nk_rhs(const BackgroundState& s) {
  const DerivedFrame f = derived_frame(s);
  const double l = s.lambda;
  BackgroundDerivative d;
  d.t = s.t;
  d.lambda = 3.0 * f.y.a2 - 2.0 * l * l * f.x.a1 / f.mu;
  d.u = {-3.0 * s.v.a0 / l, (2.0 * l * l - 3.0 * s.v.a1) / l, -3.0 * s.v.a2 / l};
  d.v = {4.0 * l * s.u.a0, 4.0 * l * s.u.a1, 4.0 * l * s.u.a2 - 3.0 * s.u.a2 / l};
  return d;
}

inline BackgroundVector nk_rhs_vector(double t, const BackgroundVector& y) {
  return nk_rhs(BackgroundState::from_vector(t, y)).to_vector();
}

/// d/dt (lambda mu^2); the principal orbit has zero mean curvature where it vanishes.
inline double volume_slope(const BackgroundState& s) {
  const DerivedFrame f = derived_frame(s);
  return 3.0 * f.mu * s.v.a2 / s.lambda + 2.0 * s.lambda * s.lambda * s.u.a1;
}

/// Evolution of the first frame column: w_i' = -2 (lambda x_i / mu) w1 - 3 (y_i / lambda) w2.
inline MinkowskiVec3 w_ode_rhs(const BackgroundState& s) {
  const DerivedFrame f = derived_frame(s);
  const double cx = -2.0 * s.lambda * f.w.a1 / f.mu;
  const double cy = -3.0 * f.w.a2 / s.lambda;
  return cx * f.x + cy * f.y;
}

/// Max-norm mismatch between a numerically differentiated w and its evolution equation.
inline double w_ode_residual(const BackgroundState& s, MinkowskiVec3 dw_numeric) {
  return max_abs(dw_numeric - w_ode_rhs(s));
}

/// Residual of lambda |u|^2 d(lambda^2)/dt - d(u2^2)/dt + lambda^4 u1, given the
/// time derivatives of lambda and u2. Diagnostic only; never used for evolution.
inline double printed_lambda_equation_residual(const BackgroundState& s, double dlambda, double du2) {
  const double uu = minkowski_inner(s.u, s.u);
  const double l = s.lambda;
  return l * uu * 2.0 * l * dlambda - 2.0 * s.u.a2 * du2 + l * l * l * l * s.u.a1;
}

/// Frame orthonormality defect: max of |<w,w>+1|, |<w,x>|, |<w,y>|.
inline double frame_defect(const DerivedFrame& f) {
  return std::max({std::abs(minkowski_inner(f.w, f.w) + 1.0), std::abs(minkowski_inner(f.w, f.x)),
                   std::abs(minkowski_inner(f.w, f.y))});
}

}  // namespace nkh
