#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nkhitchin/minkowski.hpp"
#include "nkhitchin/oracles.hpp"

namespace {

using nkh::BackgroundState;
using nkh::MinkowskiVec3;

TEST(MinkowskiInner, SignatureIsMinusPlusPlus) {
  EXPECT_DOUBLE_EQ(nkh::minkowski_inner({1, 0, 0}, {1, 0, 0}), -1.0);
  EXPECT_DOUBLE_EQ(nkh::minkowski_inner({0, 1, 0}, {0, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(nkh::minkowski_inner({0, 0, 1}, {0, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(nkh::minkowski_inner({2, 3, 5}, {7, 11, 13}), -14.0 + 33.0 + 65.0);
}

TEST(MinkowskiInner, IsSymmetricAndBilinear) {
  const MinkowskiVec3 p{0.3, -1.2, 2.5}, q{1.7, 0.4, -0.9}, r{-2.0, 0.5, 0.25};
  EXPECT_DOUBLE_EQ(nkh::minkowski_inner(p, q), nkh::minkowski_inner(q, p));
  EXPECT_NEAR(nkh::minkowski_inner(2.0 * p + r, q), 2.0 * nkh::minkowski_inner(p, q) + nkh::minkowski_inner(r, q),
              1e-14);
}

TEST(StateVector, RoundTrips) {
  const BackgroundState s{0.7, 1.1, {0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
  const auto back = BackgroundState::from_vector(s.t, s.to_vector());
  EXPECT_EQ(back.to_vector(), s.to_vector());
  EXPECT_EQ(back.t, s.t);
}

TEST(DerivedFrame, ThrowsWhenUIsNotSpacelike) {
  const BackgroundState s{0.5, 1.0, {1.0, 0.5, 0.0}, {0.0, 0.0, 0.0}};
  try {
    nkh::derived_frame(s);
    FAIL() << "expected NonPositiveMuSq";
  } catch (const nkh::NumericError& e) {
    EXPECT_EQ(e.kind(), nkh::ErrorKind::NonPositiveMuSq);
  }
}

TEST(DerivedFrame, IsOrthonormalOnOracles) {
  for (double t : nkh::interior_grid(0.05, 1.8, 25)) {
    const auto f = nkh::derived_frame(nkh::homogeneous_s3s3_state(t));
    EXPECT_LT(nkh::frame_defect(f), 1e-12) << "t = " << t;
    EXPECT_NEAR(nkh::minkowski_inner(f.x, f.x), 1.0, 1e-13);
  }
  for (double t : nkh::interior_grid(0.05, 3.09, 25))
    EXPECT_LT(nkh::frame_defect(nkh::derived_frame(nkh::sine_cone_state(t))), 1e-12) << "t = " << t;
}

TEST(DerivedFrame, HomogeneousWAtMaximalVolume) {
  const auto f = nkh::derived_frame(nkh::homogeneous_s3s3_state(nkh::homogeneous_t_star()));
  EXPECT_NEAR(f.w.a1, std::sqrt(3.0) / 3.0, 1e-14);
  EXPECT_NEAR(f.w.a2, 0.0, 1e-14);
}

TEST(Conserved, VanishOnBothOracles) {
  for (double t : nkh::interior_grid(0.0, std::numbers::pi, 40))
    EXPECT_LT(nkh::conserved(nkh::sine_cone_state(t)).max_abs(), 1e-13);
  for (double t : nkh::interior_grid(0.0, std::numbers::pi / std::sqrt(3.0), 40))
    EXPECT_LT(nkh::conserved(nkh::homogeneous_s3s3_state(t)).max_abs(), 1e-13);
}

TEST(Conserved, DetectsAPerturbedState) {
  auto s = nkh::homogeneous_s3s3_state(0.4);
  s.v.a1 += 1e-3;
  EXPECT_GT(nkh::conserved(s).max_abs(), 5e-4);
}

TEST(NkRhs, MatchesClosedFormDerivatives) {
  for (double t : nkh::interior_grid(0.0, std::numbers::pi, 30)) {
    const auto d = nkh::nk_rhs(nkh::sine_cone_state(t)).to_vector();
    const auto e = nkh::sine_cone_derivative(t).to_vector();
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(d[i], e[i], 1e-12) << "sine cone, t = " << t << ", i = " << i;
  }
  for (double t : nkh::interior_grid(0.0, std::numbers::pi / std::sqrt(3.0), 30)) {
    const auto d = nkh::nk_rhs(nkh::homogeneous_s3s3_state(t)).to_vector();
    const auto e = nkh::homogeneous_s3s3_derivative(t).to_vector();
    for (std::size_t i = 0; i < 7; ++i) EXPECT_NEAR(d[i], e[i], 1e-12) << "homogeneous, t = " << t << ", i = " << i;
  }
}

TEST(NkRhs, VectorFormAgreesWithStructForm) {
  const auto s = nkh::homogeneous_s3s3_state(0.3);
  EXPECT_EQ(nkh::nk_rhs_vector(s.t, s.to_vector()), nkh::nk_rhs(s).to_vector());
}

TEST(VolumeSlope, VanishesAtHomogeneousMaximum) {
  EXPECT_NEAR(nkh::volume_slope(nkh::homogeneous_s3s3_state(nkh::homogeneous_t_star())), 0.0, 1e-14);
  EXPECT_GT(nkh::volume_slope(nkh::homogeneous_s3s3_state(0.5)), 0.0);
  EXPECT_LT(nkh::volume_slope(nkh::homogeneous_s3s3_state(1.2)), 0.0);
}

TEST(VolumeSlope, IsDerivativeOfLambdaMuSquared) {
  const double t = 0.6, h = 1e-5;
  auto vol = [](double s) {
    const auto st = nkh::homogeneous_s3s3_state(s);
    return st.lambda * nkh::minkowski_inner(st.u, st.u);
  };
  const double fd = (vol(t + h) - vol(t - h)) / (2 * h);
  EXPECT_NEAR(nkh::volume_slope(nkh::homogeneous_s3s3_state(t)), fd, 1e-8);
}

TEST(WOde, ResidualSmallOnSineCone) {
  const double h = 1e-5;
  for (double t : nkh::interior_grid(0.3, 2.8, 10)) {
    const auto wp = nkh::derived_frame(nkh::sine_cone_state(t + h)).w;
    const auto wm = nkh::derived_frame(nkh::sine_cone_state(t - h)).w;
    EXPECT_LT(nkh::w_ode_residual(nkh::sine_cone_state(t), (wp - wm) / (2 * h)), 1e-8) << "t = " << t;
  }
}

}  // namespace
