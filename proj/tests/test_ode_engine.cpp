#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nkhitchin/ode.hpp"
#include "nkhitchin/parallel.hpp"
#include "nkhitchin/series.hpp"
#include "nkhitchin/singular.hpp"

namespace {

using nkh::State;

State<2> oscillator(double, const State<2>& y) { return {y[1], -y[0]}; }

TEST(Integrate, HarmonicOscillatorMeetsTolerance) {
  for (double tol : {1e-6, 1e-9, 1e-12}) {
    const auto tr = nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 10.0, tol);
    EXPECT_NEAR(tr.back()[0], std::sin(10.0), 200 * tol) << "tol = " << tol;
    EXPECT_NEAR(tr.back()[1], std::cos(10.0), 200 * tol) << "tol = " << tol;
    EXPECT_DOUBLE_EQ(tr.t_end(), 10.0);
  }
}

TEST(Integrate, TighterToleranceTakesMoreSteps) {
  const auto loose = nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 10.0, 1e-6);
  const auto tight = nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 10.0, 1e-12);
  EXPECT_GT(tight.stats().accepted, 5 * loose.stats().accepted);
}

TEST(Integrate, RejectsReversedInterval) {
  EXPECT_THROW(nkh::integrate<2>(oscillator, {0.0, 1.0}, 1.0, 0.0, 1e-8), std::invalid_argument);
}

TEST(Integrate, IsDeterministic) {
  const auto a = nkh::integrate<2>(oscillator, {0.3, 0.7}, 0.0, 5.0, 1e-10);
  const auto b = nkh::integrate<2>(oscillator, {0.3, 0.7}, 0.0, 5.0, 1e-10);
  EXPECT_EQ(a.times(), b.times());
  EXPECT_EQ(a.states(), b.states());
}

TEST(DenseOutput, ReproducesNodesAndInterpolatesAccurately) {
  const auto tr = nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 6.0, 1e-11);
  for (std::size_t k = 0; k < tr.size(); ++k) EXPECT_EQ(tr(tr.times()[k]), tr.states()[k]);
  for (int i = 1; i < 200; ++i) {
    const double t = 6.0 * i / 200.0;
    EXPECT_NEAR(tr(t)[0], std::sin(t), 1e-9) << "t = " << t;
  }
}

TEST(Events, StopAtFirstFallingZero) {
  // y0 = sin t, y1 = cos t: the first falling zero of cos is pi/2.
  const std::array<nkh::EventSpec<2>, 1> ev{nkh::EventSpec<2>{"cos", [](double, const State<2>& y) { return y[1]; }, -1}};
  const auto tr = nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 10.0, nkh::IntegratorOptions::with_tol(1e-12), ev,
                                    std::string("cos"));
  EXPECT_NEAR(tr.t_end(), std::numbers::pi / 2, 1e-10);
  ASSERT_TRUE(tr.first_event("cos"));
  EXPECT_NEAR(tr.first_event("cos")->t, std::numbers::pi / 2, 1e-10);
}

TEST(Events, DirectionFilterAndRelocation) {
  // Rising zeros of sin only: 2 pi and 4 pi on (0, 13).
  const nkh::EventSpec<2> rising{"sin_up", [](double, const State<2>& y) { return y[0]; }, +1};
  const std::array<nkh::EventSpec<2>, 1> ev{rising};
  const auto opt = nkh::IntegratorOptions::with_tol(1e-12);
  const auto tr = nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 13.0, opt, ev);
  ASSERT_EQ(tr.events().size(), 2u);
  const auto again = nkh::locate_events(tr, rising, opt.event_tol_fraction * 13.0);
  ASSERT_EQ(again.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(again[i], tr.events()[i].t);
}

TEST(Events, MissingStopEventRaises) {
  const std::array<nkh::EventSpec<2>, 1> ev{nkh::EventSpec<2>{"never", [](double, const State<2>&) { return 1.0; }, 0}};
  try {
    nkh::integrate<2>(oscillator, {0.0, 1.0}, 0.0, 1.0, nkh::IntegratorOptions::with_tol(1e-8), ev, std::string("never"));
    FAIL() << "expected NoEventFound";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::NoEventFound);
  }
}

TEST(Integrate, BlowUpIsReportedAsNumericError) {
  // y' = y^2, y(0) = 1 blows up at t = 1.
  auto rhs = [](double, const State<1>& y) { return State<1>{y[0] * y[0]}; };
  EXPECT_THROW(nkh::integrate<1>(rhs, {1.0}, 0.0, 2.0, 1e-10), nkh::NumericError);
}

TEST(Integrate, DomainErrorsAreWrapped) {
  auto rhs = [](double t, const State<1>&) -> State<1> {
    if (t > 0.5) throw std::domain_error("outside");
    return {1.0};
  };
  auto kind_of = [&](double t0) {
    try {
      nkh::integrate<1>(rhs, {0.0}, t0, 1.0, 1e-8);
    } catch (const nkh::NumericError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "expected a NumericError";
    return nkh::ErrorKind::NoEventFound;
  };
  // At the initial point the error is fatal; later, trial stages that leave
  // the domain are rejected until the step floor is reached.
  EXPECT_EQ(kind_of(0.75), nkh::ErrorKind::RhsDomainError);
  EXPECT_EQ(kind_of(0.0), nkh::ErrorKind::StepSizeUnderflow);
}

TEST(Series, ArithmeticInverseAndSqrt) {
  // 1 / (1 - t) = 1 + t + t^2 + ...
  const nkh::Series one_minus_t(0, {1.0, -1.0}, 8);
  const auto inv = one_minus_t.inverse();
  for (int k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(inv.coeff(k), 1.0);
  // sqrt(t^2 (1 + t)^2) = t (1 + t)
  const nkh::Series sq(2, {1.0, 2.0, 1.0}, 9);
  const auto r = sq.sqrt();
  EXPECT_EQ(r.low(), 1);
  EXPECT_DOUBLE_EQ(r.coeff(1), 1.0);
  EXPECT_DOUBLE_EQ(r.coeff(2), 1.0);
  for (int k = 3; k < r.order(); ++k) EXPECT_NEAR(r.coeff(k), 0.0, 1e-15);
  const auto prod = one_minus_t * inv;
  EXPECT_DOUBLE_EQ(prod.coeff(0), 1.0);
  for (int k = 1; k < prod.order(); ++k) EXPECT_NEAR(prod.coeff(k), 0.0, 1e-15);
  EXPECT_THROW(nkh::Series(1, {1.0}, 4).sqrt(), std::domain_error);
  EXPECT_THROW(one_minus_t.coeff(8), std::out_of_range);
}

TEST(Series, DerivativeAndEval) {
  const nkh::Series s(-1, {2.0, 0.0, 3.0}, 2);  // 2/t + 3t
  EXPECT_NEAR(s.eval(0.5), 4.0 + 1.5, 1e-15);
  const auto d = s.derivative();  // -2/t^2 + 3
  EXPECT_NEAR(d.eval(0.5), -8.0 + 3.0, 1e-14);
}

TEST(SingularSpectrum, RealSpectrumWithKernel) {
  Eigen::MatrixXd a(3, 3);
  a << 0, 1, 0, 0, -2, 0, 0, 0, -1;
  const auto s = nkh::frozen_singular_spectrum(a);
  EXPECT_EQ(s.negative_count, 2);
  ASSERT_TRUE(s.kernel_vector);
  EXPECT_NEAR((a * *s.kernel_vector).norm(), 0.0, 1e-12);
  EXPECT_NEAR(s.kernel_vector->norm(), 1.0, 1e-14);
}

TEST(SingularSpectrum, ComplexSpectrumRaises) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, -1, 0;
  try {
    nkh::frozen_singular_spectrum(a);
    FAIL() << "expected ComplexSpectrum";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::ComplexSpectrum);
  }
}

TEST(Frobenius, ReproducesExponentialSeries) {
  // t y' = A_{-1} y + t y with A_{-1} = 0: y = c e^t.
  std::vector<Eigen::MatrixXd> terms{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Identity(1, 1)};
  for (int k = 0; k < 10; ++k) terms.push_back(Eigen::MatrixXd::Zero(1, 1));
  Eigen::VectorXd c0(1);
  c0 << 1.0;
  const auto c = nkh::frobenius_coefficients(terms, c0, 10);
  double fact = 1.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    EXPECT_NEAR(c[k][0], 1.0 / fact, 1e-15) << "k = " << k;
  }
}

// y' = y / (2t) + 1 + t^2 has the smooth solution 2t + 0.4 t^3 and a
// singular mode sqrt(t). Launch errors of order eps^p excite the singular
// mode with amplitude eps^(p - 1/2).
State<1> toy_rhs(double t, const State<1>& y) { return {y[0] / (2.0 * t) + 1.0 + t * t}; }

TEST(SingularLaunch, TruncatedSeriesPassesCertificate) {
  const std::vector<nkh::Series> series{nkh::Series(1, {2.0}, 2)};
  const nkh::LaunchValidation<1> val{toy_rhs, 0.5, 1e-13, 3.0};
  const auto r = nkh::singular_launch<1>(series, 1e-2, val);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(r.certificate->passed);
  EXPECT_NEAR(r.certificate->factor, std::pow(2.0, 2.5), 0.2);
  ASSERT_EQ(r.certificate->component_coarse.size(), 1u);
  EXPECT_DOUBLE_EQ(r.certificate->component_coarse[0], r.certificate->discrepancy_coarse);
}

TEST(SingularLaunch, CorruptedLeadingCoefficientFailsCertificate) {
  const std::vector<nkh::Series> series{nkh::Series(1, {2.1}, 2)};
  const nkh::LaunchValidation<1> val{toy_rhs, 0.5, 1e-13, 3.0};
  try {
    nkh::singular_launch<1>(series, 1e-2, val);
    FAIL() << "expected ValidationFailed";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::ValidationFailed);
  }
}

TEST(SingularLaunch, WithoutValidationOnlyEvaluates) {
  const std::vector<nkh::Series> series{nkh::Series(1, {2.0, 0.0, 0.4}, 4)};
  const auto r = nkh::singular_launch<1>(series, 0.1, std::nullopt);
  EXPECT_FALSE(r.certificate);
  EXPECT_NEAR(r.y[0], 0.2 + 0.4e-3, 1e-15);
  EXPECT_THROW(nkh::singular_launch<1>(series, 0.0, std::nullopt), std::invalid_argument);
}

TEST(ParallelMap, MatchesSerialAndRethrowsLowestIndex) {
  auto sq = [](std::size_t i) { return static_cast<double>(i * i); };
  EXPECT_EQ(nkh::parallel_map<double>(37, sq, 4), nkh::parallel_map<double>(37, sq, 1));
  std::atomic<int> calls{0};
  auto bad = [&](std::size_t i) -> int {
    ++calls;
    if (i == 3 || i == 20) throw std::runtime_error(std::to_string(i));
    return 0;
  };
  try {
    nkh::parallel_map<int>(30, bad, 3);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "3");
  }
  EXPECT_EQ(calls.load(), 30);
}

}  // namespace
