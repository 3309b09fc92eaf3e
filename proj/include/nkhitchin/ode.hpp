#pragma once

// Dormand-Prince 5(4) integrator with PI step control, fourth-order dense
// output, and event location by bisection on the dense interpolant.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nkhitchin/errors.hpp"

namespace nkh {

template <std::size_t N>
using State = std::array<double, N>;

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;        ///< 0 selects a step automatically.
  double min_step_fraction = 1e-13; ///< step floor as a fraction of |t1 - t0|.
  double event_tol_fraction = 1e-12;
  std::size_t max_steps = 2'000'000;

  static IntegratorOptions with_tol(double tol) {
    IntegratorOptions o;
    o.rtol = tol;
    o.atol = tol;
    return o;
  }
};

/// Per-component error scale sc_i; the step is accepted when rms(err_i / sc_i) <= 1.
template <std::size_t N>
using ErrorScale = std::function<void(const State<N>& y0, const State<N>& y1, State<N>& scale)>;

template <std::size_t N>
struct EventSpec {
  std::string label;
  std::function<double(double, const State<N>&)> fn;
  int direction = 0;  ///< +1 rising only, -1 falling only, 0 both.
};

template <std::size_t N>
struct EventRecord {
  std::string label;
  double t = 0.0;
  State<N> y{};
};

/// One accepted step with its dense-output coefficients.
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<State<N>, 5> rcont{};

  State<N> operator()(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    State<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = rcont[0][i] +
             th * (rcont[1][i] + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
    return y;
  }
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
  double rtol = 0.0;
  double atol = 0.0;
};

/// Immutable record of a solved initial value problem.
template <std::size_t N>
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<double> t, std::vector<State<N>> y, std::vector<DenseStep<N>> steps,
             std::vector<EventRecord<N>> events, IntegratorStats stats)
      : t_(std::move(t)), y_(std::move(y)), steps_(std::move(steps)), events_(std::move(events)), stats_(stats) {}

  const std::vector<double>& times() const { return t_; }
  const std::vector<State<N>>& states() const { return y_; }
  const std::vector<DenseStep<N>>& steps() const { return steps_; }
  const std::vector<EventRecord<N>>& events() const { return events_; }
  const IntegratorStats& stats() const { return stats_; }

  std::size_t size() const { return t_.size(); }
  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }
  const State<N>& back() const { return y_.back(); }

  /// Index of the step whose interval contains t (clamped to the ends).
  std::size_t step_index(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - t_.begin()) - 1));
    return std::min(k, steps_.size() - 1);
  }

  /// Dense-output evaluation; reproduces node states at node times.
  State<N> operator()(double t) const {
    if (steps_.empty()) return y_.front();
    const std::size_t k = step_index(t);
    if (t == t_[k]) return y_[k];
    if (t == t_[k + 1]) return y_[k + 1];
    return steps_[k](t);
  }

  std::optional<EventRecord<N>> first_event(const std::string& label) const {
    for (const auto& e : events_)
      if (e.label == label) return e;
    return std::nullopt;
  }

 private:
  std::vector<double> t_;
  std::vector<State<N>> y_;
  std::vector<DenseStep<N>> steps_;
  std::vector<EventRecord<N>> events_;
  IntegratorStats stats_;
};

namespace detail {

// Dormand-Prince tableau (Hairer, Norsett & Wanner).
inline constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
inline constexpr double a21 = 0.2, a31 = 3.0 / 40.0, a32 = 9.0 / 40.0, a41 = 44.0 / 45.0,
                        a42 = -56.0 / 15.0, a43 = 32.0 / 9.0, a51 = 19372.0 / 6561.0,
                        a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0,
                        a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0, a71 = 35.0 / 384.0,
                        a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

template <std::size_t N>
bool all_finite(const State<N>& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

/// Bisection for a sign change of g on [ta, tb] using the dense interpolant.
template <std::size_t N>
double bisect_event(const DenseStep<N>& step, const std::function<double(double, const State<N>&)>& g,
                    double ta, double ga, double tb, double tol) {
  while (tb - ta > tol) {
    const double tm = 0.5 * (ta + tb);
    const double gm = g(tm, step(tm));
    if (gm == 0.0) return tm;
    if ((gm < 0.0) == (ga < 0.0)) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  return 0.5 * (ta + tb);
}

template <std::size_t N>
bool direction_matches(int direction, double ga, double gb) {
  if (direction > 0) return ga < 0.0 && gb >= 0.0;
  if (direction < 0) return ga > 0.0 && gb <= 0.0;
  return (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0);
}

}  // namespace detail

/// Locates the first sign change of `event` inside one dense step, or nothing.
template <std::size_t N>
std::optional<double> locate_in_step(const DenseStep<N>& step, double ta, const State<N>& ya, double tb,
                                     const State<N>& yb, const EventSpec<N>& event, double tol) {
  const double ga = event.fn(ta, ya);
  const double gb = event.fn(tb, yb);
  if (ga == 0.0) return std::nullopt;  // a zero at the left node belongs to the previous step
  if (!detail::direction_matches<N>(event.direction, ga, gb)) return std::nullopt;
  if (gb == 0.0) return tb;
  return detail::bisect_event(step, event.fn, ta, ga, tb, tol);
}

/// Re-runs event location on the dense output of a stored trajectory. With the
/// same absolute tolerance as the original run this returns identical times.
template <std::size_t N>
std::vector<double> locate_events(const Trajectory<N>& traj, const EventSpec<N>& event, double abs_tol) {
  std::vector<double> out;
  const auto& y = traj.states();
  for (std::size_t k = 0; k < traj.steps().size(); ++k) {
    const auto& st = traj.steps()[k];
    const double tb = st.t0 + st.h;
    if (auto te = locate_in_step(st, st.t0, y[k], tb, st(tb), event, abs_tol)) out.push_back(*te);
  }
  return out;
}

/// Integrates y' = rhs(t, y) from t0 to t1 (t0 < t1).
///
/// Events are checked on accepted steps; when `stop_at` names an event, the
/// trajectory ends at its first occurrence and NoEventFound is raised if it
/// never fires. A null `error_scale` uses atol + rtol * max(|y0|, |y1|).
template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const State<N>& y0, double t0, double t1, const IntegratorOptions& opt,
                        std::span<const EventSpec<N>> events = {},
                        const std::optional<std::string>& stop_at = std::nullopt,
                        const ErrorScale<N>& error_scale = nullptr) {
  using namespace detail;
  if (!(t0 < t1)) throw std::invalid_argument("integrate: need t0 < t1");

  std::vector<double> times;
  std::vector<State<N>> states;
  std::vector<DenseStep<N>> steps;
  std::vector<EventRecord<N>> found;
  IntegratorStats stats;
  stats.rtol = opt.rtol;
  stats.atol = opt.atol;

  auto f = [&](double t, const State<N>& y) {
    ++stats.rhs_evals;
    try {
      return rhs(t, y);
    } catch (const NumericError&) {
      throw;
    } catch (const std::domain_error& e) {
      throw NumericError(ErrorKind::RhsDomainError, e.what());
    }
  };

  State<N> k1 = f(t0, y0);
  if (!all_finite(k1)) throw NumericError(ErrorKind::RhsDomainError, "non-finite rhs at t0");

  const double span = t1 - t0;
  const double h_min = opt.min_step_fraction * span;
  const double ev_tol = opt.event_tol_fraction * span;

  auto scale_of = [&](const State<N>& ya, const State<N>& yb, State<N>& sc) {
    if (error_scale) {
      error_scale(ya, yb, sc);
    } else {
      for (std::size_t i = 0; i < N; ++i)
        sc[i] = opt.atol + opt.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
    }
  };

  double h = opt.initial_step;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic.
    State<N> sc;
    scale_of(y0, y0, sc);
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      dnf += (k1[i] / sc[i]) * (k1[i] / sc[i]);
      dny += (y0[i] / sc[i]) * (y0[i] / sc[i]);
    }
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, span);
    State<N> y1;
    for (std::size_t i = 0; i < N; ++i) y1[i] = y0[i] + h * k1[i];
    State<N> k2 = f(t0 + h, y1);
    double der2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double d = (k2[i] - k1[i]) / sc[i];
      der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3) : std::pow(0.01 / der12, 0.2);
    h = std::min({100.0 * h, h1, span});
  }

  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  double facold = 1e-4;
  bool last_rejected = false;

  double t = t0;
  State<N> y = y0;
  times.push_back(t);
  states.push_back(y);

  std::vector<double> g_prev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].fn(t, y);

  State<N> k2, k3, k4, k5, k6, k7, yt, ynew, sc;
  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps)
      throw NumericError(ErrorKind::StepSizeUnderflow, "step budget exhausted at t = " + std::to_string(t));
    if (h < h_min)
      throw NumericError(ErrorKind::StepSizeUnderflow, "step " + std::to_string(h) + " below floor at t = " +
                                                           std::to_string(t));
    if (t + 1.01 * h >= t1) h = t1 - t;

    bool ok = true;
    try {
      for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
      k2 = f(t + c2 * h, yt);
      for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      k3 = f(t + c3 * h, yt);
      for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      k4 = f(t + c4 * h, yt);
      for (std::size_t i = 0; i < N; ++i)
        yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      k5 = f(t + c5 * h, yt);
      for (std::size_t i = 0; i < N; ++i)
        yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      k6 = f(t + h, yt);
      for (std::size_t i = 0; i < N; ++i)
        ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      k7 = f(t + h, ynew);
      ok = all_finite(ynew) && all_finite(k7);
    } catch (const NumericError& e) {
      // A trial stage outside the valid domain is a too-large step, unless the
      // accepted state itself is already there.
      if (e.kind() != ErrorKind::NonPositiveMuSq && e.kind() != ErrorKind::RhsDomainError) throw;
      ok = false;
    }

    double err = 0.0;
    if (ok) {
      scale_of(y, ynew, sc);
      for (std::size_t i = 0; i < N; ++i) {
        const double ei =
            h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]) / sc[i];
        err += ei * ei;
      }
      err = std::sqrt(err / static_cast<double>(N));
      ok = std::isfinite(err);
    }
    if (!ok) {
      ++stats.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::max(facc2, std::min(facc1, fac / safe));
    double hnew = h / fac;

    if (err > 1.0) {
      ++stats.rejected;
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
      continue;
    }

    facold = std::max(err, 1e-4);
    ++stats.accepted;

    DenseStep<N> step;
    step.t0 = t;
    step.h = h;
    for (std::size_t i = 0; i < N; ++i) {
      const double ydiff = ynew[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      step.rcont[0][i] = y[i];
      step.rcont[1][i] = ydiff;
      step.rcont[2][i] = bspl;
      step.rcont[3][i] = ydiff - h * k7[i] - bspl;
      step.rcont[4][i] =
          h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }

    const double tnew = (t1 - (t + h) < 1e-14 * span) ? t1 : t + h;
    bool stop = false;
    double t_stop = tnew;
    State<N> y_stop = ynew;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double gnew = events[e].fn(tnew, ynew);
      std::optional<double> te;
      if (g_prev[e] != 0.0 && direction_matches<N>(events[e].direction, g_prev[e], gnew))
        te = gnew == 0.0 ? tnew : bisect_event(step, events[e].fn, t, g_prev[e], tnew, ev_tol);
      g_prev[e] = gnew;
      if (!te) continue;
      const State<N> ye = (*te == tnew) ? ynew : step(*te);
      found.push_back({events[e].label, *te, ye});
      if (stop_at && *stop_at == events[e].label && (!stop || *te < t_stop)) {
        stop = true;
        t_stop = *te;
        y_stop = ye;
      }
    }

    steps.push_back(step);
    if (stop) {
      std::erase_if(found, [&](const EventRecord<N>& r) { return r.t > t_stop; });
      times.push_back(t_stop);
      states.push_back(y_stop);
      return Trajectory<N>(std::move(times), std::move(states), std::move(steps), std::move(found), stats);
    }
    times.push_back(tnew);
    states.push_back(ynew);

    if (last_rejected) hnew = std::min(hnew, h);
    last_rejected = false;
    t = tnew;
    y = ynew;
    k1 = k7;
    h = hnew;
  }

  if (stop_at)
    throw NumericError(ErrorKind::NoEventFound, "event '" + *stop_at + "' did not occur before t = " +
                                                    std::to_string(t1));
  return Trajectory<N>(std::move(times), std::move(states), std::move(steps), std::move(found), stats);
}

/// Convenience overload without events.
template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const State<N>& y0, double t0, double t1, double tol) {
  return integrate<N>(std::forward<Rhs>(rhs), y0, t0, t1, IntegratorOptions::with_tol(tol));
}

}  // namespace nkh
