#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lrio/measurement.hpp"
#include "lrio/trajectory.hpp"

namespace lrio {

struct ImuSimSpec {
  double sigma_g = 0.0;   // rad/s/sqrt(Hz)
  double sigma_a = 0.0;   // m/s^2/sqrt(Hz)
  double sigma_bg = 0.0;  // rad/s^2/sqrt(Hz)
  double sigma_ba = 0.0;  // m/s^3/sqrt(Hz)
  Vec3 initial_bias_gyro = Vec3::Zero();
  Vec3 initial_bias_accel = Vec3::Zero();
};

/// Fixed-beam doppler radar: one return per beam per sample.
struct RadarSimSpec {
  bool enabled = true;
  double rate = 60.0;             // Hz
  double sigma_doppler = 0.0;     // m/s, simulated noise
  double reported_sigma = kDefaultDopplerResolution;  // written to the dataset
  std::vector<Vec3> beams;        // radar frame; empty selects default_radar_beams()
  double outlier_fraction = 0.0;
  double outlier_offset = 2.0;    // m/s
};

/// Point-cloud radar observing a static scene plus moving clutter.
struct CloudSimSpec {
  bool enabled = false;
  double rate = 20.0;             // Hz
  int points = 200;
  double azimuth_fov = 1.0;       // rad, half width
  double elevation_fov = 0.3;     // rad, half width
  double min_range = 2.0;         // m
  double max_range = 60.0;        // m
  double sigma_doppler = 0.0;
  double outlier_fraction = 0.0;
  double outlier_offset = 2.0;
};

enum class LoNoiseMode { kConstant, kVelocity };

/// LiDAR-odometry poses with right-multiplied tangent noise. Until `warmup`
/// every axis uses `sigma_else`; afterwards x and y use `sigma_xy`, or
/// sqrt(|v|) in velocity mode.
struct LoSimSpec {
  bool enabled = true;
  double rate = 10.0;       // Hz
  double sigma_xy = 0.0;    // m
  double sigma_else = 0.0;  // m for z, rad for rotation
  double warmup = 0.0;      // s
  LoNoiseMode mode = LoNoiseMode::kConstant;
};

struct SensorNoiseSpec {
  ImuSimSpec imu;
  RadarSimSpec radar;
  CloudSimSpec cloud;
  LoSimSpec lo;
  std::uint64_t seed = 0;
  /// Snap radar and LO stamps to the IMU sample grid (hardware-triggered sensors).
  bool snap_to_imu = true;

  void validate() const;
};

/// Five forward-facing beams within +-10 deg azimuth and +-5 deg elevation.
std::vector<Vec3> default_radar_beams();

/// Default calibration used by the presets: radar 1.2 m ahead of and 0.4 m
/// above the IMU, lidar 0.3 m above it, both axis-aligned.
SensorRig default_sensor_rig();

using Rng = std::mt19937_64;

/// Independent deterministic stream per (seed, sensor).
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Integrating IMU: sample k reports the mean rate and the velocity increment
/// over [t_k, t_k+1) in the body frame at t_k, plus bias and white noise.
/// Returned biases are the true values at each sample.
struct ImuSynthesis {
  std::vector<ImuMeasurement> measurements;
  std::vector<Vec3> bias_gyro;
  std::vector<Vec3> bias_accel;
};
ImuSynthesis synth_imu(const Trajectory& trajectory, const std::vector<TruthSample>& truth,
                       const ImuSimSpec& spec, const Vec3& gravity, Rng& rng);

std::vector<RadarDopplerMeasurement> synth_radar(const Trajectory& trajectory,
                                                 const RadarSimSpec& spec, const SensorRig& rig,
                                                 double imu_rate, bool snap, Rng& rng);

std::vector<RadarPointCloud> synth_radar_clouds(const Trajectory& trajectory,
                                                const CloudSimSpec& spec, const SensorRig& rig,
                                                double imu_rate, bool snap, Rng& rng);

/// pose * exp(eps), eps ~ N(0, diag(sigma^2)), tangent ordered [rot; trans].
RigidTransform inject_pose_noise(const RigidTransform& pose, const Vec6& sigma, Rng& rng);

std::vector<LoPoseMeasurement> synth_lo(const Trajectory& trajectory, const LoSimSpec& spec,
                                        double imu_rate, bool snap, Rng& rng);

struct SimulatedRun {
  std::vector<StateSample> truth;  // at IMU rate, with the true biases
  Dataset data;
};

SimulatedRun simulate(const TrajectorySpec& trajectory, const SensorNoiseSpec& noise,
                      const SensorRig& rig);

}  // namespace lrio
