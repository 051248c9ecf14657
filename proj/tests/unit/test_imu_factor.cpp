#include <gtest/gtest.h>

#include <random>

#include "lrio/imu_factor.hpp"
#include "oracles.hpp"

namespace lrio {
namespace {

using testing::random_vec;

// Residual written out from the discrete kinematics, independent of imu_terms.
Vec9 reference_residual(const NavState& i, const NavState& j, const ImuFactor& f) {
  const double dt = f.dt;
  const Mat3 Ri = i.pose.rotation().matrix();
  const Vec3 w = f.measurement.angular_velocity - i.bias_gyro;
  const Vec3 a = f.measurement.linear_acceleration - i.bias_accel;
  const Mat3 dR = exp_rot(w * dt).matrix();
  Vec9 e;
  e.segment<3>(0) =
      log_rot(Rotation::from_matrix(dR.transpose() * Ri.transpose() * j.pose.rotation().matrix()));
  e.segment<3>(3) = Ri.transpose() * (j.pose.translation() - i.pose.translation() - i.velocity * dt -
                                      0.5 * f.gravity * dt * dt) -
                    0.5 * a * dt * dt;
  e.segment<3>(6) = Ri.transpose() * (j.velocity - i.velocity - f.gravity * dt) - a * dt;
  return e;
}

ImuFactor random_factor(std::mt19937_64& rng) {
  ImuFactor f;
  f.node_i = 0;
  f.node_j = 1;
  f.measurement.angular_velocity = random_vec(rng, 2.0);
  f.measurement.linear_acceleration = random_vec(rng, 15.0);
  f.dt = std::uniform_real_distribution<double>(1e-3, 0.05)(rng);
  return f;
}

TEST(ImuFactor, ResidualMatchesKinematics) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 500; ++n) {
    const NavState i = testing::random_state(rng);
    const NavState j = testing::random_state(rng);
    const ImuFactor f = random_factor(rng);
    EXPECT_LT((imu_residual(i, j, f) - reference_residual(i, j, f)).norm(), 1e-9);
  }
}

TEST(ImuFactor, PropagationGivesZeroResidual) {
  std::mt19937_64 rng(22);
  for (int n = 0; n < 200; ++n) {
    const NavState i = testing::random_state(rng);
    const ImuFactor f = random_factor(rng);
    NavState j = propagate(i, f.measurement, f.dt, f.gravity);
    EXPECT_LT(imu_residual(i, j, f).norm(), 1e-10);
    EXPECT_EQ(j.bias_gyro, i.bias_gyro);
  }
}

TEST(ImuFactor, JacobiansMatchFiniteDifference) {
  std::mt19937_64 rng(23);
  for (int n = 0; n < 300; ++n) {
    const NavState i = testing::random_state(rng);
    const ImuFactor f = random_factor(rng);
    const Vec15 d = (Vec15() << random_vec(rng, 0.3), random_vec(rng, 0.5), random_vec(rng, 0.5),
                     random_vec(rng, 0.01), random_vec(rng, 0.1))
                        .finished();
    const NavState j = propagate(i, f.measurement, f.dt, f.gravity).retract(d);
    const ImuJacobians J = imu_jacobians(i, j, f);
    const auto Ni = testing::numeric_jacobian<9>(
        [&](const NavState& x) { return imu_residual(x, j, f); }, i);
    const auto Nj = testing::numeric_jacobian<9>(
        [&](const NavState& x) { return imu_residual(i, x, f); }, j);
    EXPECT_LE(testing::tolerance_excess(J.d_state_i, Ni, 1e-5, 1e-8), 0.0);
    EXPECT_LE(testing::tolerance_excess(J.d_state_j, Nj, 1e-5, 1e-8), 0.0);
  }
}

TEST(ImuFactor, SqrtInformationWhitensDiscreteNoise) {
  ImuFactor f;
  f.dt = 0.0025;
  f.noise.sigma_g = 3e-4;
  f.noise.sigma_a = 4e-3;
  f.noise.sigma_integration = 1e-3;
  // Residual response to one held sample of gyro/accel noise (rad/s, m/s^2)
  // and to an integration-error velocity held over dt.
  const double dt = f.dt;
  Eigen::Matrix<double, 9, 9> G = Eigen::Matrix<double, 9, 9>::Zero();
  G.block<3, 3>(0, 0) = Mat3::Identity() * dt;
  G.block<3, 3>(3, 3) = Mat3::Identity() * 0.5 * dt * dt;
  G.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  G.block<3, 3>(3, 6) = Mat3::Identity() * dt;
  Eigen::Matrix<double, 9, 1> q;
  q << Vec3::Constant(f.noise.sigma_g * f.noise.sigma_g / dt),
      Vec3::Constant(f.noise.sigma_a * f.noise.sigma_a / dt),
      Vec3::Constant(f.noise.sigma_integration * f.noise.sigma_integration / dt);
  const Mat9 cov = G * q.asDiagonal() * G.transpose();
  const Mat9 L = imu_sqrt_information(f);
  EXPECT_TRUE((L * cov * L.transpose()).isIdentity(1e-9));
}

TEST(ImuFactor, BiasWalkWeights) {
  ImuNoise n;
  n.sigma_bg = 2e-5;
  n.sigma_ba = 3e-4;
  const Vec6b w = bias_walk_sqrt_information(n, 0.01);
  EXPECT_NEAR(w[0], 1.0 / (2e-5 * 0.1), 1e-6);
  EXPECT_NEAR(w[5], 1.0 / (3e-4 * 0.1), 1e-6);
  EXPECT_THROW(bias_walk_residual(Vec6b::Zero(), Vec6b::Zero(), 0.0), std::invalid_argument);
  EXPECT_THROW(imu_sqrt_information(ImuFactor{}), std::invalid_argument);
}

}  // namespace
}  // namespace lrio
