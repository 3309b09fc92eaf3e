#include <gtest/gtest.h>

#include <cmath>

#include "anchors.hpp"
#include "nkhitchin/oracles.hpp"

namespace {

TEST(ResidualScan, BothOraclesSolveTheSystem) {
  for (const auto& c : {nkh::sine_cone(), nkh::homogeneous_s3s3()}) {
    const auto fd = nkh::residual_scan(c, 100);
    EXPECT_EQ(fd.n_points, 100);
    EXPECT_LT(fd.rhs_max, 1e-8) << c.name;
    EXPECT_LT(fd.conserved_max, 1e-10) << c.name;
    EXPECT_LT(fd.frame_defect_max, 1e-10) << c.name;
    EXPECT_LT(fd.w_ode_max, 1e-6) << c.name;
    EXPECT_LT(nkh::residual_scan(c, 100, nkh::DerivativeMode::Analytic).rhs_max, 1e-12) << c.name;
  }
}

TEST(ResidualScan, ScaledLambdaIsCaught) {
  for (const auto& c : {nkh::sine_cone(), nkh::homogeneous_s3s3()}) {
    const auto bad = nkh::with_scaled_lambda(c, 1.01);
    EXPECT_FALSE(bad.derivative);
    EXPECT_GT(nkh::residual_scan(bad, 100).rhs_max, 1e-3) << bad.name;
    EXPECT_THROW(nkh::residual_scan(bad, 100, nkh::DerivativeMode::Analytic), std::invalid_argument);
  }
}

TEST(ResidualScan, PrintedLambdaEquationDoesNotHold) {
  // Kept as a diagnostic: the printed form of the lambda equation is not
  // satisfied by either closed form.
  EXPECT_GT(nkh::residual_scan(nkh::sine_cone(), 50).printed_lambda_max, 0.1);
  EXPECT_GT(nkh::residual_scan(nkh::homogeneous_s3s3(), 50).printed_lambda_max, 0.1);
}

TEST(OracleCurves, DomainChecks) {
  EXPECT_THROW(nkh::sine_cone_state(0.0), std::invalid_argument);
  EXPECT_THROW(nkh::homogeneous_s3s3_state(2.0), std::invalid_argument);
  EXPECT_THROW(nkh::interior_grid(0.0, 1.0, 0), std::invalid_argument);
  const auto g = nkh::interior_grid(0.0, 1.0, 3);
  EXPECT_EQ(g, (std::vector<double>{0.25, 0.5, 0.75}));
}

TEST(ElResiduals, VanishOnOracles) {
  for (const auto& c : {nkh::sine_cone(), nkh::homogeneous_s3s3()}) {
    const auto r = nkh::el_residuals(c);
    EXPECT_LT(r.max(), 1e-6) << c.name;
  }
}

TEST(ElResiduals, DetectScaledLambda) {
  EXPECT_GT(nkh::el_residuals(nkh::with_scaled_lambda(nkh::homogeneous_s3s3(), 1.05)).max(), 1e-2);
}

TEST(ElResiduals, VanishOnIntegratedHalves) {
  nkh::HalfOptions o;
  o.tol = 1e-12;
  for (double b : {nkh::anchors::kBstar, 1.0}) {
    const auto h = nkh::integrate_half(nkh::HalfFamily::b(b), o);
    EXPECT_LT(nkh::el_residuals(h.trajectory).max(), 1e-6) << "b = " << b;
  }
}

TEST(AuxIdentity, HoldsOnHomogeneousCurve) {
  for (double t : {0.2, 0.5, 1.0}) {
    const auto s = nkh::homogeneous_s3s3_state(t);
    EXPECT_LT(nkh::aux_identity_check(s, nkh::homogeneous_s3s3_derivative(t).u), 1e-12);
  }
}

TEST(Legendre, MatrixSignMatchesClosedForm) {
  const auto chi = nkh::legendre_scan(nkh::LegendreVariant::AsMatrix, nkh::LegendreFunctional::ChiZero, 0.5, 13.0, 60);
  ASSERT_EQ(chi.roots.size(), 1u);
  EXPECT_NEAR(chi.roots[0], std::sqrt(72.0), 1e-8);
  const auto xi = nkh::legendre_scan(nkh::LegendreVariant::AsMatrix, nkh::LegendreFunctional::XiZero, 0.5, 13.0, 60);
  ASSERT_EQ(xi.roots.size(), 2u);
  EXPECT_NEAR(xi.roots[0], std::sqrt(24.0), 1e-8);
  EXPECT_NEAR(xi.roots[1], 12.0, 1e-8);
}

TEST(Legendre, PrintedSignHasNoEigenvalues) {
  for (auto f : {nkh::LegendreFunctional::ChiZero, nkh::LegendreFunctional::XiZero})
    EXPECT_TRUE(nkh::legendre_scan(nkh::LegendreVariant::AsPrinted, f, 0.5, 13.0, 60).roots.empty());
}

TEST(Legendre, EndpointMatchesLegendrePolynomial) {
  // Lambda^2 / 12 = l (l + 1) with l = 2: xi = P_2(cos t), so xi(pi/2) = -1/2.
  const double L = std::sqrt(72.0);
  EXPECT_NEAR(nkh::legendre_endpoint(nkh::LegendreVariant::AsMatrix, nkh::LegendreFunctional::XiZero, L), -0.5, 1e-9);
  EXPECT_THROW(nkh::legendre_endpoint(nkh::LegendreVariant::AsMatrix, nkh::LegendreFunctional::XiZero, 0.0),
               std::invalid_argument);
}

TEST(Legendre, ScanArgumentChecks) {
  EXPECT_THROW(nkh::legendre_scan(nkh::LegendreVariant::AsMatrix, nkh::LegendreFunctional::ChiZero, 2.0, 1.0, 10),
               std::invalid_argument);
  EXPECT_THROW(nkh::legendre_scan(nkh::LegendreVariant::AsMatrix, nkh::LegendreFunctional::ChiZero, 1.0, 15.0, 10),
               std::invalid_argument);
  EXPECT_EQ(nkh::legendre_scan_all(1.0, 2.0, 4).size(), 4u);
}

TEST(SineCone, ExactSolutionAtSqrt72DecaysLikeInverseSixthPower) {
  EXPECT_LT(nkh::sine_cone_sqrt72_residual(-6), 1e-12);
  EXPECT_GT(nkh::sine_cone_sqrt72_residual(6), 1.0);
}

}  // namespace
