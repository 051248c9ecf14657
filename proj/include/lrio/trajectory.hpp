#pragma once

#include <array>
#include <vector>

#include "lrio/types.hpp"

namespace lrio {

enum class TrajectoryKind { kFigureEight, kLoopTrack, kWaypointSpline };

/// Planar ground-vehicle path. The vehicle rests for `rest_time`, then ramps
/// its phase rate up over `ramp_time` with a raised cosine and holds it.
///
/// With `scale` <= 0 the path is sized so that the peak yaw rate at full phase
/// rate equals `max_yaw_rate`; otherwise `scale` (m) is used as given.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kFigureEight;
  double duration = 30.0;      // s
  double max_speed = 12.0;     // m/s
  double max_yaw_rate = 0.82;  // rad/s
  double sample_rate = 400.0;  // Hz
  double ramp_time = 3.0;      // s
  double rest_time = 0.0;      // s
  double scale = 0.0;          // m
  double loop_aspect = 0.6;    // minor/major axis of the loop track
  std::vector<Eigen::Vector2d> waypoints;  // closed polygon, waypoint_spline only

  void validate() const;
};

struct TruthSample {
  Timestamp t = 0;
  RigidTransform pose;                     // world <- body
  Vec3 velocity = Vec3::Zero();            // world
  Vec3 angular_velocity = Vec3::Zero();    // body
  Vec3 acceleration = Vec3::Zero();        // world, excludes gravity
};

/// Analytic kinematics of a TrajectorySpec. Starts at the origin heading along +x.
class Trajectory {
 public:
  explicit Trajectory(const TrajectorySpec& spec);

  TruthSample at(double t) const;
  /// Samples at k / sample_rate for k = 0 .. floor(duration * sample_rate).
  std::vector<TruthSample> sample() const;

  const TrajectorySpec& spec() const { return spec_; }
  double scale() const { return scale_; }
  /// Full-rate phase speed, rad/s; one lap is 2 pi.
  double phase_rate() const { return phase_rate_; }
  /// Phase reached at time t.
  double phase(double t) const;

 private:
  struct Curve {
    Eigen::Vector2d c, d1, d2;  // value and derivatives w.r.t. phase, unit scale
  };
  Curve curve(double theta) const;
  void phase_derivatives(double t, double& theta, double& rate, double& accel) const;

  TrajectorySpec spec_;
  double scale_ = 1.0;
  double phase_rate_ = 0.0;
  Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
  Eigen::Matrix2d align_ = Eigen::Matrix2d::Identity();
  double heading0_ = 0.0;
  // Periodic cubic spline through the waypoints: one coefficient set per segment.
  std::vector<std::array<Eigen::Vector2d, 4>> spline_;
};

/// Convenience: Trajectory(s).sample().
std::vector<TruthSample> generate_truth(const TrajectorySpec& spec);

}  // namespace lrio
