#pragma once

#include <cstddef>

#include "lrio/types.hpp"

namespace lrio {

/// Continuous-time IMU noise densities (SI units).
struct ImuNoise {
  double sigma_g = 2e-4;   // gyro white noise, rad/s/sqrt(Hz)
  double sigma_a = 2e-3;   // accel white noise, m/s^2/sqrt(Hz)
  double sigma_bg = 2e-5;  // gyro bias random walk, rad/s^2/sqrt(Hz)
  double sigma_ba = 3e-4;  // accel bias random walk, m/s^3/sqrt(Hz)
  /// Extra position integration noise, m/sqrt(s). Keeps the position/velocity
  /// covariance of a single-sample factor full rank.
  double sigma_integration = 1e-3;
};

/// First-order (Euler) propagation over [t, t + dt) with measurement `m`.
/// Biases are held constant.
NavState propagate(const NavState& state, const ImuMeasurement& m, double dt, const Vec3& gravity);

/// Motion constraint between two consecutive nodes from a single IMU sample.
struct ImuFactor {
  std::size_t node_i = 0;
  std::size_t node_j = 0;
  ImuMeasurement measurement;  // sample stamped at node_i
  double dt = 0.0;             // t_j - t_i, s
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  ImuNoise noise;
};

using Mat9x15 = Eigen::Matrix<double, 9, 15>;

/// Residual stacked as [rotation (3); position (3); velocity (3)], all
/// expressed in the IMU frame of node i:
///   e_R = log(dR^T R_i^T R_j)
///   e_p = R_i^T (p_j - p_i - v_i dt - g dt^2 / 2) - (a - b_a) dt^2 / 2
///   e_v = R_i^T (v_j - v_i - g dt) - (a - b_a) dt
/// with dR = exp((w - b_g) dt). Zero iff state_j == propagate(state_i).
Vec9 imu_residual(const NavState& state_i, const NavState& state_j, const ImuFactor& factor);

struct ImuJacobians {
  Mat9x15 d_state_i;
  Mat9x15 d_state_j;
};

ImuJacobians imu_jacobians(const NavState& state_i, const NavState& state_j,
                           const ImuFactor& factor);

/// Upper-triangular L with L^T L equal to the inverse residual covariance.
Mat9 imu_sqrt_information(const ImuFactor& factor);

using Vec6b = Eigen::Matrix<double, 6, 1>;

/// Bias random-walk residual [b_g,j - b_g,i; b_a,j - b_a,i].
Vec6b bias_walk_residual(const Vec6b& bias_i, const Vec6b& bias_j, double dt);
/// Diagonal whitening 1 / (sigma_b sqrt(dt)) for the residual above.
Vec6b bias_walk_sqrt_information(const ImuNoise& noise, double dt);

inline Vec6b stacked_bias(const NavState& s) {
  Vec6b b;
  b << s.bias_gyro, s.bias_accel;
  return b;
}

}  // namespace lrio
