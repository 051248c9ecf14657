#pragma once

#include <cstddef>

#include "lrio/types.hpp"

namespace lrio {

/// IMU-radar calibration as used by the radial-speed model.
struct RadarExtrinsics {
  Rotation radar_from_imu;           // R R_I
  Vec3 lever_arm = Vec3::Zero();     // I p_IR, radar origin in the IMU frame, m

  static RadarExtrinsics from_rig(const SensorRig& rig);
};

/// Unary radial-speed constraint on one node's rotation, velocity and gyro bias.
///
/// The gyro sample nearest the radar stamp is frozen into the factor; only the
/// gyro bias is estimated.
class RadarRadialSpeedFactor {
 public:
  /// Re-normalizes a bearing that is off-unit by less than 1e-6; throws
  /// std::invalid_argument for larger deviations or a non-positive sigma or
  /// huber_delta.
  RadarRadialSpeedFactor(std::size_t node, const Vec3& bearing, double radial_speed,
                         const Vec3& omega_meas, const RadarExtrinsics& extrinsics, double sigma,
                         double huber_delta);

  std::size_t node() const { return node_; }
  void set_node(std::size_t node) { node_ = node; }
  const Vec3& bearing() const { return bearing_; }
  double radial_speed() const { return radial_speed_; }
  const Vec3& omega_meas() const { return omega_meas_; }
  const RadarExtrinsics& extrinsics() const { return extrinsics_; }
  double sigma() const { return sigma_; }
  double huber_delta() const { return huber_delta_; }

 private:
  std::size_t node_;
  Vec3 bearing_;
  double radial_speed_;
  Vec3 omega_meas_;
  RadarExtrinsics extrinsics_;
  double sigma_;
  double huber_delta_;
};

/// Radar-frame velocity implied by the state:
///   R_RI (R_WI^T v_W + (w_meas - b_g) x p_IR)
Vec3 radar_velocity_from_state(const NavState& state, const Vec3& omega_meas,
                               const RadarExtrinsics& extrinsics);

/// Predicted doppler minus measured: -mu^T v_R - v_r_meas. A target straight
/// ahead of a sensor moving toward it reads negative.
double radial_speed_residual(const NavState& state, const RadarRadialSpeedFactor& factor);

using Row3 = Eigen::RowVector3d;
using Row15 = Eigen::Matrix<double, 1, 15>;

struct RadialSpeedJacobians {
  Row3 d_rotation;   // -mu^T R_RI (R_WI^T v_W)^
  Row3 d_velocity;   // -mu^T R_RI R_WI^T
  Row3 d_bias_gyro;  // -mu^T R_RI (p_IR)^

  /// Full 1x15 row over the state tangent; position and accel-bias blocks are zero.
  Row15 full() const;
};

RadialSpeedJacobians radial_speed_jacobians(const NavState& state,
                                            const RadarRadialSpeedFactor& factor);

/// IRLS weight of the Huber loss: 1 inside |r| <= delta, delta / |r| outside.
double robust_weight(double residual, double huber_delta);

/// Huber cost in the squared-residual convention: r^2 inside, 2 delta |r| - delta^2 outside.
double huber_cost(double residual, double huber_delta);

/// True unless |radial_speed| lies within one resolution bin of max_doppler,
/// where FMCW doppler may have wrapped.
bool doppler_unambiguous(double radial_speed, double max_doppler, double resolution);

}  // namespace lrio
