#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "anchors.hpp"
#include "nkhitchin/background.hpp"

namespace {

using nkh::HalfFamily;
using nkh::V1Coefficient;
using nkh::Variant;

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

TEST(TaylorData, LeadingTermsAtSingularOrbit) {
  const auto b = nkh::taylor_psi_b(0.7, 0.0);
  EXPECT_DOUBLE_EQ(b.lambda, 0.7);
  EXPECT_DOUBLE_EQ(b.u.a0, 0.0);
  EXPECT_NEAR(b.v.a0, -2.0 / 3.0 * 0.343, 1e-15);
  const auto a = nkh::taylor_psi_a(0.7, 0.0);
  EXPECT_DOUBLE_EQ(a.lambda, 0.0);
  EXPECT_NEAR(a.u.a0, 0.49, 1e-15);
}

TEST(TaylorData, RejectsNonPositiveParameter) {
  EXPECT_THROW(nkh::half_series(HalfFamily::b(0.0)), std::invalid_argument);
  EXPECT_THROW(nkh::half_series(HalfFamily::a(-1.0)), std::invalid_argument);
  EXPECT_THROW(nkh::half_series(HalfFamily::b(std::nan(""))), std::invalid_argument);
}

TEST(TaylorConsistency, TabulatedPsiBHasExactlyTwoMismatches) {
  const auto rep = nkh::taylor_consistency_check(Variant::B, V1Coefficient::Tabulated);
  EXPECT_EQ(as_set(rep.mismatched_coefficients()), (std::set<std::string>{"mu t^3", "v1 t^4"}));
  // Both residuals vanish only where the repaired and tabulated values agree, b^2 = 5/16.
  for (const auto& m : rep.mismatches) {
    ASSERT_EQ(m.param_roots.size(), 1u) << m.coefficient;
    EXPECT_NEAR(m.param_roots[0], std::sqrt(5.0 / 16.0), 1e-9) << m.coefficient;
  }
}

TEST(TaylorConsistency, RepairedPsiBAndPsiAAreClean) {
  const auto b = nkh::taylor_consistency_check(Variant::B, V1Coefficient::Repaired);
  EXPECT_TRUE(b.passed());
  EXPECT_GT(b.comparisons, 20);
  const auto a = nkh::taylor_consistency_check(Variant::A);
  EXPECT_TRUE(a.passed());
  for (const char* eq : {"du0", "du2", "dv0"}) {
    EXPECT_NE(std::find(a.checks.begin(), a.checks.end(), eq), a.checks.end()) << eq;
    EXPECT_TRUE(a.check_clean(eq)) << eq;
  }
}

TEST(TaylorConsistency, RepairedCoefficientFormula) {
  EXPECT_DOUBLE_EQ(nkh::psi_b_v1_t4(1.0, V1Coefficient::Repaired), -4.0);
  EXPECT_NEAR(nkh::psi_b_v1_t4(std::sqrt(5.0 / 16.0), V1Coefficient::Repaired), 0.4, 1e-14);
}

// The tabulated w expansions agree with the frame derived from the Taylor
// data only at leading order; their O(t) coefficients are inconsistent, so
// the agreement is O(eps^2) relative.
TEST(TaylorData, TabulatedWAgreesWithDerivedFrameToLeadingOrder) {
  for (const auto f : {HalfFamily::b(0.6), HalfFamily::b(1.2), HalfFamily::a(0.8), HalfFamily::a(1.5)}) {
    const auto bs = nkh::half_series(f);
    const auto tw = nkh::tabulated_w_series(f);
    auto rel_err = [&](double t) {
      const auto w = nkh::derived_frame(nkh::evaluate(bs, t)).w;
      const nkh::MinkowskiVec3 tab{tw[0].eval(t), tw[1].eval(t), tw[2].eval(t)};
      return nkh::max_abs(w - tab) / nkh::max_abs(w);
    };
    for (double eps : {1e-2, 5e-3, 2.5e-3}) EXPECT_LT(rel_err(eps), 5.0 * eps * eps) << to_string(f.variant) << f.param;
  }
}

// The tabulated mu t^3 coefficient is one of the two inconsistent entries,
// so the tabulated mu agrees with the derived one to O(eps^2) relative only.
TEST(TaylorData, TabulatedMuAgreesToLeadingOrder) {
  for (const auto f : {HalfFamily::b(0.4), HalfFamily::b(1.0), HalfFamily::a(0.9)}) {
    const auto mu_tab = nkh::tabulated_mu_series(f);
    for (double eps : {1e-2, 5e-3}) {
      const double mu = nkh::derived_frame(nkh::evaluate(nkh::half_series(f), eps)).mu;
      EXPECT_LT(std::abs(mu - mu_tab.eval(eps)) / mu, 2.0 * eps * eps);
    }
  }
}

TEST(ExtendSeries, KeepsDataAndSatisfiesEveryComparison) {
  for (const auto f : {HalfFamily::b(0.37), HalfFamily::b(1.0), HalfFamily::a(0.8)}) {
    const auto base = nkh::half_series(f);
    const auto ext = nkh::extend_series(base, nkh::kLaunchSeriesOrder);
    const auto bc = base.components(), ec = ext.components();
    for (std::size_t i = 0; i < 7; ++i) {
      EXPECT_GE(ec[i].order(), nkh::kLaunchSeriesOrder);
      for (int k = bc[i].low(); k < bc[i].order(); ++k) EXPECT_EQ(ec[i].coeff(k), bc[i].coeff(k));
    }
    EXPECT_LT(nkh::detail::comparison_residuals(ext).cwiseAbs().maxCoeff(), 1e-9);
    // Higher order data sit much closer to the constraint surface.
    EXPECT_LT(nkh::conserved(nkh::evaluate(ext, 0.05)).max_abs(), 1e-11);
  }
}

TEST(ExtendSeries, TabulatedDataCannotBeExtended) {
  try {
    nkh::extend_series(nkh::half_series(HalfFamily::b(1.0), V1Coefficient::Tabulated), 8);
    FAIL() << "expected ValidationFailed";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::ValidationFailed);
  }
}

TEST(ProjectOntoConstraints, RemovesConstraintDefect) {
  const auto raw = nkh::evaluate(nkh::half_series(HalfFamily::b(0.5)), 0.01);
  const auto p = nkh::project_onto_constraints(raw);
  EXPECT_GT(nkh::conserved(raw).max_abs(), 1e-12);
  EXPECT_LT(nkh::conserved(p).max_abs(), 1e-15);
  const auto dr = raw.to_vector(), dp = p.to_vector();
  for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(dr[i], dp[i], 1e-6);
}

TEST(IntegrateHalf, HomogeneousHalfAtBEqualsOne) {
  const auto h = nkh::integrate_half(HalfFamily::b(1.0));
  EXPECT_NEAR(h.t_star, std::numbers::pi * std::sqrt(3.0) / 6.0, 1e-6);
  EXPECT_NEAR(h.frame_at_star.w.a1, std::sqrt(3.0) / 3.0, 1e-6);
  EXPECT_NEAR(h.frame_at_star.w.a2, 0.0, 1e-6);
  EXPECT_LT(h.conserved_max, 1e-9);
  EXPECT_LT(h.frame_defect_max, 1e-9);
  ASSERT_TRUE(h.certificate);
  EXPECT_TRUE(h.certificate->passed);
  EXPECT_TRUE(h.extended_series.has_value());
  EXPECT_EQ(nkh::classify_background_doubling(h, 1e-6), nkh::BackgroundDoubling::S3xS3_tau1);
}

TEST(IntegrateHalf, TracksHomogeneousClosedForm) {
  const auto h = nkh::integrate_half(HalfFamily::b(1.0));
  for (double t : {0.1, 0.4, 0.8}) {
    const auto y = h.trajectory(t);
    const double r3 = std::sqrt(3.0);
    EXPECT_NEAR(y[0], 1.0, 5e-8);
    EXPECT_NEAR(y[3], -2.0 * r3 / 3.0 * std::sin(r3 * t), 5e-8);
  }
}

TEST(IntegrateHalf, FamilyAHalvesAreWellBehaved) {
  for (double a : {0.5, 1.0, 1.5}) {
    const auto h = nkh::integrate_half(HalfFamily::a(a));
    EXPECT_GT(h.t_star, 0.1);
    EXPECT_LT(h.conserved_max, 1e-8) << a;
    ASSERT_TRUE(h.certificate);
    EXPECT_GE(h.certificate->factor, 3.0) << a;
  }
}

TEST(IntegrateHalf, EveryComponentConvergesUnderEpsHalving) {
  for (const auto f : {HalfFamily::b(0.3), HalfFamily::b(0.6), HalfFamily::a(1.0)}) {
    const auto c = *nkh::integrate_half(f).certificate;
    ASSERT_EQ(c.component_coarse.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
      if (c.component_coarse[i] > 1e-12) {
        EXPECT_GE(c.component_coarse[i] / c.component_fine[i], 3.0) << i;
      }
    }
  }
}

TEST(IntegrateHalf, RejectsBadOptions) {
  nkh::HalfOptions o;
  o.eps = 0.5;
  EXPECT_THROW(nkh::integrate_half(HalfFamily::b(1.0), o), std::invalid_argument);
  EXPECT_THROW(nkh::integrate_half(HalfFamily::b(-0.2)), std::invalid_argument);
}

TEST(IntegrateHalf, ConvergesInTolerance) {
  nkh::HalfOptions lo, hi;
  lo.tol = 1e-9;
  hi.tol = 1e-12;
  const auto a = nkh::integrate_half(HalfFamily::b(0.5), lo);
  const auto b = nkh::integrate_half(HalfFamily::b(0.5), hi);
  EXPECT_NEAR(a.t_star, b.t_star, 1e-7);
  EXPECT_NEAR(a.frame_at_star.w.a1, b.frame_at_star.w.a1, 1e-7);
}

// Launch calibration: an error in a leading Taylor coefficient is O(eps) and
// trips the Richardson certificate; a wrong t^4 coefficient is O(eps^4) and
// cannot be detected this way.
TEST(LaunchCalibration, LeadingCorruptionFailsAndQuarticPasses) {
  auto launch = [](nkh::BackgroundSeries s) {
    const nkh::LaunchValidation<7> val{nkh::nk_rhs_vector, 0.5, 1e-13, 3.0};
    return nkh::singular_launch<7>(s.components(), 5e-2, val);
  };
  auto bad = nkh::half_series(HalfFamily::b(0.5));
  bad.v[0] = nkh::Series(0, {bad.v[0].coeff(0) + 0.1, 0.0, bad.v[0].coeff(2)}, 4);
  try {
    launch(bad);
    FAIL() << "expected ValidationFailed";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::ValidationFailed);
  }
  const auto quartic = nkh::half_series(HalfFamily::b(0.5), V1Coefficient::Tabulated);
  EXPECT_TRUE(launch(quartic).certificate->passed);
}

TEST(FindBstar, MatchesAnchorAndSignConditions) {
  const auto r = nkh::find_bstar(0.05, 0.999, 200, 1e-8);
  EXPECT_NEAR(r.b_star, nkh::anchors::kBstar, 2e-8);
  EXPECT_LT(std::abs(r.w1_at_bstar), 1e-7);
  const auto h = nkh::integrate_half(HalfFamily::b(r.b_star));
  EXPECT_NEAR(h.t_star, nkh::anchors::kTstarAtBstar, 1e-6);
  EXPECT_GT(h.frame_at_star.w.a2, 0.0);
  EXPECT_EQ(nkh::classify_background_doubling(h, 1e-6), nkh::BackgroundDoubling::S3xS3_tau2);
}

TEST(FindBstar, StableUnderGridAndThreads) {
  const auto a = nkh::find_bstar(0.05, 0.999, 200, 1e-8, {}, 1);
  const auto b = nkh::find_bstar(0.1, 0.95, 57, 1e-8, {}, 4);
  EXPECT_NEAR(a.b_star, b.b_star, 2e-8);
  const auto c = nkh::find_bstar(0.05, 0.999, 200, 1e-8, {}, 4);
  EXPECT_EQ(a.b_star, c.b_star);
}

TEST(FindBstar, NoSignChangeIsReported) {
  try {
    nkh::find_bstar(0.9, 0.99, 10, 1e-8);
    FAIL() << "expected NoSignChange";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::NoSignChange);
  }
  EXPECT_THROW(nkh::find_bstar(0.5, 0.4, 10, 1e-8), std::invalid_argument);
}

}  // namespace
