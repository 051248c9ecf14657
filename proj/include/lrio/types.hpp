#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lrio/lie.hpp"

namespace lrio {

/// Integer nanoseconds, used for every timestamp.
using Timestamp = std::int64_t;

inline constexpr double kNsToSec = 1e-9;
inline double to_seconds(Timestamp t) { return static_cast<double>(t) * kNsToSec; }
inline Timestamp from_seconds(double s) { return static_cast<Timestamp>(std::llround(s * 1e9)); }

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

/// Maximum unambiguous radial speed of the default radar chirp, m/s.
inline constexpr double kDefaultMaxDoppler = 43.178;
/// Doppler bin width of the default radar chirp, m/s.
inline constexpr double kDefaultDopplerResolution = 0.169;

struct ImuMeasurement {
  Timestamp t = 0;
  Vec3 angular_velocity = Vec3::Zero();     // rad/s, IMU frame
  Vec3 linear_acceleration = Vec3::Zero();  // m/s^2, IMU frame (specific force)
};

/// One radial-speed return: unit bearing in the radar frame and the measured doppler.
struct RadarDopplerMeasurement {
  Timestamp t = 0;
  Vec3 bearing = Vec3::UnitX();
  double radial_speed = 0.0;  // m/s, negative when closing in on the target
  double sigma = kDefaultDopplerResolution;
};

struct RadarPoint {
  Vec3 position = Vec3::Zero();  // m, radar frame
  double doppler = 0.0;          // m/s
};

struct RadarPointCloud {
  Timestamp t = 0;
  std::vector<RadarPoint> points;
};

/// External LiDAR-odometry pose of the IMU in the world frame.
struct LoPoseMeasurement {
  Timestamp t = 0;
  RigidTransform pose;                     // world <- IMU
  Vec6 sigma = Vec6::Constant(0.1);        // [rot rad x3, trans m x3]
};

/// Extrinsic calibration. Both transforms map sensor coordinates into the IMU frame.
struct SensorRig {
  RigidTransform imu_from_radar;
  RigidTransform imu_from_lidar;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
};

/// Per-node estimate: pose (world <- IMU), world velocity and IMU biases.
///
/// Perturbations are applied on the right with the 15-dim tangent ordered
/// [rotation, position, velocity, gyro bias, accel bias]:
///   R <- R exp(d_rot), p <- p + R d_pos, v <- v + d_vel, b <- b + d_b.
struct NavState {
  RigidTransform pose;
  Vec3 velocity = Vec3::Zero();
  Vec3 bias_gyro = Vec3::Zero();
  Vec3 bias_accel = Vec3::Zero();

  NavState retract(const Vec15& delta) const;
  /// Tangent `d` with reference.retract(d) == *this.
  Vec15 local(const NavState& reference) const;

  bool all_finite() const;
};

/// Offsets of each block inside the 15-dim state tangent.
namespace block {
inline constexpr int kRot = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kBiasGyro = 9;
inline constexpr int kBiasAccel = 12;
}  // namespace block

}  // namespace lrio
