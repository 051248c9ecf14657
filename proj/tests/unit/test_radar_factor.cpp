#include <gtest/gtest.h>

#include <random>

#include "lrio/radar_factor.hpp"
#include "oracles.hpp"

namespace lrio {
namespace {

using testing::random_vec;

RadarExtrinsics random_extrinsics(std::mt19937_64& rng) {
  RadarExtrinsics e;
  e.radar_from_imu = testing::random_rotation(rng);
  e.lever_arm = random_vec(rng, 2.0);
  return e;
}

TEST(RadarFactor, ResidualMatchesRigidBodyGeometry) {
  std::mt19937_64 rng(31);
  for (int n = 0; n < 500; ++n) {
    const NavState x = testing::random_state(rng);
    const RadarExtrinsics ext = random_extrinsics(rng);
    const Vec3 omega = random_vec(rng, 1.0);
    const Vec3 mu = random_vec(rng, 1.0).normalized();
    const double measured = std::uniform_real_distribution<double>(-20, 20)(rng);
    const RadarRadialSpeedFactor f(0, mu, measured, omega, ext, 0.1, 0.5);

    // World velocity of the radar origin, then into the radar frame.
    const Mat3 R = x.pose.rotation().matrix();
    const Vec3 v_origin = x.velocity + R * (omega - x.bias_gyro).cross(ext.lever_arm);
    const Vec3 v_radar = ext.radar_from_imu.matrix() * R.transpose() * v_origin;
    // A static target seen along mu closes at -mu.v
    const double predicted = -mu.dot(v_radar);
    EXPECT_NEAR(radial_speed_residual(x, f), predicted - measured, 1e-9);
  }
}

TEST(RadarFactor, JacobianMatchesFiniteDifference) {
  std::mt19937_64 rng(32);
  for (int n = 0; n < 500; ++n) {
    const NavState x = testing::random_state(rng);
    const RadarRadialSpeedFactor f(0, random_vec(rng, 1.0).normalized(), 3.0, random_vec(rng, 1.0),
                                   random_extrinsics(rng), 0.1, 0.5);
    const auto N = testing::numeric_jacobian<1>(
        [&](const NavState& s) { return Eigen::Matrix<double, 1, 1>(radial_speed_residual(s, f)); },
        x);
    const Row15 J = radial_speed_jacobians(x, f).full();
    EXPECT_LE(testing::tolerance_excess(J, N, 1e-5, 1e-8), 0.0);
    // position and accel bias do not enter
    EXPECT_TRUE(J.segment<3>(block::kPos).isZero());
    EXPECT_TRUE(J.segment<3>(block::kBiasAccel).isZero());
  }
}

TEST(RadarFactor, HuberCostAndWeightAgree) {
  const double d = 0.5;
  for (double e : {-3.0, -0.5, -0.1, 0.0, 0.2, 0.5, 0.7, 10.0}) {
    const double h = 1e-6;
    // dρ/de = 2 w(e) e
    const double slope = (huber_cost(e + h, d) - huber_cost(e - h, d)) / (2 * h);
    EXPECT_NEAR(slope, 2.0 * robust_weight(e, d) * e, 1e-6);
  }
  EXPECT_DOUBLE_EQ(huber_cost(0.3, d), 0.09);
  EXPECT_DOUBLE_EQ(huber_cost(2.0, d), 2 * 0.5 * 2.0 - 0.25);
}

TEST(RadarFactor, AmbiguityWindow) {
  EXPECT_TRUE(doppler_unambiguous(9.0, 10.0, 0.169));
  EXPECT_FALSE(doppler_unambiguous(9.9, 10.0, 0.169));
  EXPECT_FALSE(doppler_unambiguous(-9.9, 10.0, 0.169));
}

}  // namespace
}  // namespace lrio
