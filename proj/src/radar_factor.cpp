#include "lrio/radar_factor.hpp"

#include <cmath>
#include <stdexcept>

namespace lrio {

RadarExtrinsics RadarExtrinsics::from_rig(const SensorRig& rig) {
  return {rig.imu_from_radar.rotation().inverse(), rig.imu_from_radar.translation()};
}

RadarRadialSpeedFactor::RadarRadialSpeedFactor(std::size_t node, const Vec3& bearing,
                                               double radial_speed, const Vec3& omega_meas,
                                               const RadarExtrinsics& extrinsics, double sigma,
                                               double huber_delta)
    : node_(node),
      bearing_(bearing),
      radial_speed_(radial_speed),
      omega_meas_(omega_meas),
      extrinsics_(extrinsics),
      sigma_(sigma),
      huber_delta_(huber_delta) {
  const double n = bearing.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) >= 1e-6) {
    throw std::invalid_argument("RadarRadialSpeedFactor: bearing is not unit length");
  }
  bearing_ /= n;
  if (!(sigma > 0.0)) throw std::invalid_argument("RadarRadialSpeedFactor: sigma must be positive");
  if (!(huber_delta > 0.0)) {
    throw std::invalid_argument("RadarRadialSpeedFactor: huber_delta must be positive");
  }
  if (!std::isfinite(radial_speed) || !omega_meas.allFinite()) {
    throw std::invalid_argument("RadarRadialSpeedFactor: non-finite measurement");
  }
}

Vec3 radar_velocity_from_state(const NavState& state, const Vec3& omega_meas,
                               const RadarExtrinsics& ext) {
  const Vec3 body_velocity = state.pose.rotation().inverse() * state.velocity;
  const Vec3 rotational = (omega_meas - state.bias_gyro).cross(ext.lever_arm);
  return ext.radar_from_imu * Vec3(body_velocity + rotational);
}

double radial_speed_residual(const NavState& state, const RadarRadialSpeedFactor& f) {
  const Vec3 v_radar = radar_velocity_from_state(state, f.omega_meas(), f.extrinsics());
  return -f.bearing().dot(v_radar) - f.radial_speed();
}

RadialSpeedJacobians radial_speed_jacobians(const NavState& state,
                                            const RadarRadialSpeedFactor& f) {
  const Row3 mu_R = -f.bearing().transpose() * f.extrinsics().radar_from_imu.matrix();
  const Mat3 R_wi_t = state.pose.rotation().matrix().transpose();
  RadialSpeedJacobians J;
  J.d_rotation = mu_R * wedge(Vec3(R_wi_t * state.velocity));
  J.d_velocity = mu_R * R_wi_t;
  J.d_bias_gyro = mu_R * wedge(f.extrinsics().lever_arm);
  return J;
}

Row15 RadialSpeedJacobians::full() const {
  Row15 row = Row15::Zero();
  row.segment<3>(block::kRot) = d_rotation;
  row.segment<3>(block::kVel) = d_velocity;
  row.segment<3>(block::kBiasGyro) = d_bias_gyro;
  return row;
}

double robust_weight(double residual, double huber_delta) {
  if (!(huber_delta > 0.0)) throw std::invalid_argument("robust_weight: huber_delta must be positive");
  const double a = std::abs(residual);
  return a <= huber_delta ? 1.0 : huber_delta / a;
}

double huber_cost(double residual, double huber_delta) {
  const double a = std::abs(residual);
  return a <= huber_delta ? a * a : 2.0 * huber_delta * a - huber_delta * huber_delta;
}

bool doppler_unambiguous(double radial_speed, double max_doppler, double resolution) {
  return std::abs(radial_speed) < max_doppler - resolution;
}

}  // namespace lrio
