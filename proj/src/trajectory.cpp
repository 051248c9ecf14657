#include "lrio/trajectory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace lrio {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

std::vector<Eigen::Vector2d> default_waypoints() {
  return {{0.0, 0.0},   {0.8, -0.1}, {1.4, 0.2},  {1.5, 0.9},
          {0.9, 1.2},   {0.2, 1.0},  {-0.2, 0.5}};
}

}  // namespace

void TrajectorySpec::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("trajectory.duration must be > 0");
  if (!(max_speed >= 0.0)) throw std::invalid_argument("trajectory.max_speed must be >= 0");
  if (!(max_yaw_rate > 0.0)) throw std::invalid_argument("trajectory.max_yaw_rate must be > 0");
  if (!(sample_rate > 0.0)) throw std::invalid_argument("trajectory.sample_rate must be > 0");
  if (!(ramp_time > 0.0)) throw std::invalid_argument("trajectory.ramp_time must be > 0");
  if (!(rest_time >= 0.0)) throw std::invalid_argument("trajectory.rest_time must be >= 0");
  if (!(loop_aspect > 0.0)) throw std::invalid_argument("trajectory.loop_aspect must be > 0");
  if (kind == TrajectoryKind::kWaypointSpline && !waypoints.empty() && waypoints.size() < 3) {
    throw std::invalid_argument("trajectory.waypoints needs at least 3 points");
  }
}

Trajectory::Trajectory(const TrajectorySpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind == TrajectoryKind::kWaypointSpline) {
    const auto pts = spec_.waypoints.empty() ? default_waypoints() : spec_.waypoints;
    const int n = static_cast<int>(pts.size());
    // Periodic uniform cubic spline: M[i-1] + 4 M[i] + M[i+1] = 6 (P[i+1] - 2 P[i] + P[i-1]).
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs(n, 2);
    for (int i = 0; i < n; ++i) {
      A(i, (i + n - 1) % n) += 1.0;
      A(i, i) += 4.0;
      A(i, (i + 1) % n) += 1.0;
      rhs.row(i) = 6.0 * (pts[(i + 1) % n] - 2.0 * pts[i] + pts[(i + n - 1) % n]).transpose();
    }
    const Eigen::MatrixXd M = A.partialPivLu().solve(rhs);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d p0 = pts[i];
      const Eigen::Vector2d p1 = pts[(i + 1) % n];
      const Eigen::Vector2d m0 = M.row(i).transpose();
      const Eigen::Vector2d m1 = M.row((i + 1) % n).transpose();
      spline_.push_back({p0, (p1 - p0) - (2.0 * m0 + m1) / 6.0, m0 / 2.0, (m1 - m0) / 6.0});
    }
  }

  // Path statistics at unit scale.
  double max_d1 = 0.0;
  double max_curvature_rate = 0.0;  // |dpsi/dtheta|
  constexpr int kProbe = 20000;
  for (int i = 0; i < kProbe; ++i) {
    const Curve c = curve(kTwoPi * i / kProbe);
    const double n2 = c.d1.squaredNorm();
    if (!(n2 > 1e-12)) throw std::invalid_argument("trajectory: path has a cusp");
    max_d1 = std::max(max_d1, std::sqrt(n2));
    max_curvature_rate = std::max(max_curvature_rate, std::abs(cross2(c.d1, c.d2)) / n2);
  }

  if (spec_.scale > 0.0) {
    scale_ = spec_.scale;
  } else if (spec_.max_speed > 0.0) {
    // peak yaw rate = max|dpsi/dtheta| * phase_rate, phase_rate = v / (scale max|c'|)
    scale_ = max_curvature_rate * spec_.max_speed / (max_d1 * spec_.max_yaw_rate);
  } else {
    scale_ = 1.0;
  }
  phase_rate_ = spec_.max_speed / (scale_ * max_d1);

  const Curve start = curve(0.0);
  origin_ = start.c;
  heading0_ = std::atan2(start.d1.y(), start.d1.x());
  align_ = Eigen::Rotation2Dd(-heading0_).toRotationMatrix();
}

Trajectory::Curve Trajectory::curve(double theta) const {
  Curve out;
  switch (spec_.kind) {
    case TrajectoryKind::kFigureEight: {
      // Lemniscate of Gerono, crossing the origin at theta = 0.
      const double s = std::sin(theta), c = std::cos(theta);
      const double s2 = std::sin(2.0 * theta), c2 = std::cos(2.0 * theta);
      out.c = {s, 0.5 * s2};
      out.d1 = {c, c2};
      out.d2 = {-s, -2.0 * s2};
      break;
    }
    case TrajectoryKind::kLoopTrack: {
      const double b = spec_.loop_aspect;
      const double s = std::sin(theta), c = std::cos(theta);
      out.c = {c, b * s};
      out.d1 = {-s, b * c};
      out.d2 = {-c, -b * s};
      break;
    }
    case TrajectoryKind::kWaypointSpline: {
      const double n = static_cast<double>(spline_.size());
      double u = std::fmod(theta, kTwoPi) / kTwoPi * n;
      if (u < 0.0) u += n;
      std::size_t seg = static_cast<std::size_t>(u);
      if (seg >= spline_.size()) seg = spline_.size() - 1;
      u -= static_cast<double>(seg);
      const auto& k = spline_[seg];
      const double du = n / kTwoPi;
      out.c = k[0] + u * (k[1] + u * (k[2] + u * k[3]));
      out.d1 = (k[1] + u * (2.0 * k[2] + 3.0 * u * k[3])) * du;
      out.d2 = (2.0 * k[2] + 6.0 * u * k[3]) * du * du;
      break;
    }
  }
  return out;
}

void Trajectory::phase_derivatives(double t, double& theta, double& rate, double& accel) const {
  const double w = phase_rate_;
  const double tr = spec_.ramp_time;
  const double tau = t - spec_.rest_time;
  if (tau <= 0.0) {
    theta = rate = accel = 0.0;
  } else if (tau < tr) {
    const double a = std::numbers::pi * tau / tr;
    theta = w * (0.5 * tau - tr / (2.0 * std::numbers::pi) * std::sin(a));
    rate = w * 0.5 * (1.0 - std::cos(a));
    accel = w * 0.5 * std::numbers::pi / tr * std::sin(a);
  } else {
    theta = w * (0.5 * tr + (tau - tr));
    rate = w;
    accel = 0.0;
  }
}

double Trajectory::phase(double t) const {
  double theta = 0.0, rate = 0.0, accel = 0.0;
  phase_derivatives(t, theta, rate, accel);
  return theta;
}

TruthSample Trajectory::at(double t) const {
  double theta = 0.0, rate = 0.0, accel = 0.0;
  phase_derivatives(t, theta, rate, accel);
  const Curve c = curve(theta);

  const Eigen::Vector2d p = scale_ * align_ * (c.c - origin_);
  const Eigen::Vector2d d1 = scale_ * align_ * c.d1;
  const Eigen::Vector2d d2 = scale_ * align_ * c.d2;
  const Eigen::Vector2d v = d1 * rate;
  const Eigen::Vector2d a = d2 * rate * rate + d1 * accel;
  const double yaw = std::atan2(d1.y(), d1.x());
  const double yaw_rate = cross2(d1, d2) / d1.squaredNorm() * rate;

  TruthSample s;
  s.t = from_seconds(t);
  s.pose = RigidTransform(Rotation::exp(Vec3(0.0, 0.0, yaw)), Vec3(p.x(), p.y(), 0.0));
  s.velocity = Vec3(v.x(), v.y(), 0.0);
  s.angular_velocity = Vec3(0.0, 0.0, yaw_rate);
  s.acceleration = Vec3(a.x(), a.y(), 0.0);
  return s;
}

std::vector<TruthSample> Trajectory::sample() const {
  const auto n = static_cast<std::size_t>(std::floor(spec_.duration * spec_.sample_rate + 1e-9));
  std::vector<TruthSample> out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    out.push_back(at(static_cast<double>(k) / spec_.sample_rate));
  }
  return out;
}

std::vector<TruthSample> generate_truth(const TrajectorySpec& spec) {
  return Trajectory(spec).sample();
}

}  // namespace lrio
