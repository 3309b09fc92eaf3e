#pragma once

// Truncated Laurent series in one variable with explicit big-O bookkeeping.
//
// A Series holds the known terms c_low t^low + ... + c_{order-1} t^{order-1}
// and remembers that everything from t^order on is unknown. Arithmetic
// propagates the unknown tail conservatively, so a coefficient reported as
// known really is determined by the inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nkh {

class Series {
 public:
  Series() = default;

  /// Terms c[0] t^low + c[1] t^(low+1) + ..., known up to (excluding) t^order.
  Series(int low, std::vector<double> coeffs, int order)
      : low_(low), coeffs_(std::move(coeffs)), order_(order) {
    coeffs_.resize(static_cast<std::size_t>(std::max(0, order_ - low_)), 0.0);
  }

  /// An exact constant (infinite precision, capped at `order`).
  static Series constant(double value, int order) { return Series(0, {value}, order); }

  /// The monomial t^power, exact up to `order`.
  static Series monomial(int power, int order) {
    std::vector<double> c(static_cast<std::size_t>(std::max(0, order - power)), 0.0);
    if (!c.empty()) c[0] = 1.0;
    return Series(power, std::move(c), order);
  }

  int low() const { return low_; }
  int order() const { return order_; }
  int known_terms() const { return order_ - low_; }

  /// Coefficient of t^k; zero below `low`, throws at or above `order`.
  double coeff(int k) const {
    if (k >= order_) throw std::out_of_range("Series::coeff beyond known order");
    if (k < low_) return 0.0;
    return coeffs_[static_cast<std::size_t>(k - low_)];
  }

  bool knows(int k) const { return k < order_; }

  double eval(double t) const {
    double s = 0.0;
    for (int k = order_ - 1; k >= low_; --k) s = s * t + coeffs_[static_cast<std::size_t>(k - low_)];
    return s * std::pow(t, low_);
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Drops leading coefficients that vanish to `rel_tol` of the largest known coefficient.
  Series trimmed(double rel_tol = 1e-12) const {
    const double scale = max_abs_coeff();
    std::size_t k = 0;
    while (k < coeffs_.size() && std::abs(coeffs_[k]) <= rel_tol * scale) ++k;
    if (k == coeffs_.size()) return Series(order_, {}, order_);
    return Series(low_ + static_cast<int>(k),
                  std::vector<double>(coeffs_.begin() + static_cast<std::ptrdiff_t>(k), coeffs_.end()),
                  order_);
  }

  Series derivative() const {
    std::vector<double> c(coeffs_.size());
    for (std::size_t i = 0; i < coeffs_.size(); ++i) c[i] = coeffs_[i] * (low_ + static_cast<int>(i));
    return Series(low_ - 1, std::move(c), order_ - 1);
  }

  Series operator-() const {
    Series r = *this;
    for (double& c : r.coeffs_) c = -c;
    return r;
  }

  friend Series operator+(const Series& a, const Series& b) {
    const int order = std::min(a.order_, b.order_);
    const int low = std::min(a.low_, b.low_);
    std::vector<double> c(static_cast<std::size_t>(std::max(0, order - low)), 0.0);
    for (int k = low; k < order; ++k) c[static_cast<std::size_t>(k - low)] = a.coeff(k) + b.coeff(k);
    return Series(low, std::move(c), order);
  }
  friend Series operator-(const Series& a, const Series& b) { return a + (-b); }

  friend Series operator*(const Series& a, const Series& b) {
    const int low = a.low_ + b.low_;
    const int order = std::min(a.order_ + b.low_, b.order_ + a.low_);
    std::vector<double> c(static_cast<std::size_t>(std::max(0, order - low)), 0.0);
    for (int i = a.low_; i < a.order_; ++i)
      for (int j = b.low_; j < b.order_ && i + j < order; ++j)
        c[static_cast<std::size_t>(i + j - low)] += a.coeff(i) * b.coeff(j);
    return Series(low, std::move(c), order);
  }

  friend Series operator*(double s, const Series& a) {
    Series r = a;
    for (double& c : r.coeffs_) c *= s;
    return r;
  }
  friend Series operator*(const Series& a, double s) { return s * a; }
  friend Series operator+(const Series& a, double s) { return a + constant(s, a.order_); }
  friend Series operator+(double s, const Series& a) { return a + s; }
  friend Series operator-(const Series& a, double s) { return a + (-s); }
  friend Series operator-(double s, const Series& a) { return (-a) + s; }

  /// Multiplicative inverse; the leading (trimmed) coefficient must be nonzero.
  Series inverse() const {
    const Series a = trimmed();
    if (a.known_terms() <= 0) throw std::domain_error("Series::inverse of an unresolved series");
    const std::size_t n = static_cast<std::size_t>(a.known_terms());
    std::vector<double> r(n, 0.0);
    r[0] = 1.0 / a.coeffs_[0];
    for (std::size_t k = 1; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 1; j <= k; ++j) s += a.coeffs_[j] * r[k - j];
      r[k] = -s / a.coeffs_[0];
    }
    return Series(-a.low_, std::move(r), -a.low_ + static_cast<int>(n));
  }

  friend Series operator/(const Series& a, const Series& b) { return a * b.inverse(); }
  friend Series operator/(const Series& a, double s) { return (1.0 / s) * a; }

  /// Square root of a series whose trimmed leading term is c t^(2m) with c > 0.
  Series sqrt() const {
    const Series a = trimmed();
    if (a.known_terms() <= 0 || a.low_ % 2 != 0 || a.coeffs_[0] <= 0.0)
      throw std::domain_error("Series::sqrt needs a positive even-power leading term");
    const std::size_t n = static_cast<std::size_t>(a.known_terms());
    std::vector<double> r(n, 0.0);
    r[0] = std::sqrt(a.coeffs_[0]);
    for (std::size_t k = 1; k < n; ++k) {
      double s = a.coeffs_[k];
      for (std::size_t j = 1; j < k; ++j) s -= r[j] * r[k - j];
      r[k] = s / (2.0 * r[0]);
    }
    return Series(a.low_ / 2, std::move(r), a.low_ / 2 + static_cast<int>(n));
  }

 private:
  int low_ = 0;
  std::vector<double> coeffs_;
  int order_ = 0;
};

}  // namespace nkh
