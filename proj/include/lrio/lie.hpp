#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lrio {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Below this angle exp/log and the translation Jacobian use Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;

/// Skew-symmetric matrix such that wedge(x) * y == x.cross(y).
Mat3 wedge(const Vec3& x);

/// Inverse of wedge. Throws std::invalid_argument if the symmetric part of
/// `m` has any entry larger than 1e-9.
Vec3 vee(const Mat3& m);

/// 4x4 matrix form of a rigid-motion tangent [rotation; translation].
Mat4 wedge(const Vec6& xi);
Vec6 vee(const Mat4& m);

/// Element of SO(3), stored as a unit quaternion.
///
/// Every composition renormalizes, so the quaternion stays unit-norm to
/// machine precision over arbitrarily long chains.
class Rotation {
 public:
  Rotation() = default;

  /// Normalizes `q`. Throws std::invalid_argument for a zero or non-finite quaternion.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  /// Throws std::invalid_argument unless `m` is orthonormal with det +1 (tolerance 1e-6).
  static Rotation from_matrix(const Mat3& m);
  static Rotation exp(const Vec3& tau);

  /// Principal logarithm, norm in [0, pi]. At exactly pi the axis sign is
  /// chosen so that its largest-magnitude component is positive.
  Vec3 log() const;

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  const Eigen::Quaterniond& quaternion() const { return q_; }

  Rotation inverse() const;
  Rotation operator*(const Rotation& other) const;
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

 private:
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) {}
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

/// Element of SE(3): x_out = rotation * x_in + translation.
///
/// Tangent vectors are ordered rotation first: xi = [phi; rho].
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Rotation& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform exp(const Vec6& xi);
  Vec6 log() const;

  const Rotation& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat4 matrix() const;

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& other) const;
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }

 private:
  Rotation rotation_;
  Vec3 translation_ = Vec3::Zero();
};

inline Rotation exp_rot(const Vec3& tau) { return Rotation::exp(tau); }
inline Vec3 log_rot(const Rotation& r) { return r.log(); }
inline RigidTransform exp_se3(const Vec6& xi) { return RigidTransform::exp(xi); }
inline Vec6 log_se3(const RigidTransform& t) { return t.log(); }

// SO(3) Jacobians. Right Jacobian: exp(phi + d) ~= exp(phi) * exp(Jr(phi) * d).
Mat3 so3_left_jacobian(const Vec3& phi);
Mat3 so3_left_jacobian_inverse(const Vec3& phi);
Mat3 so3_right_jacobian(const Vec3& phi);
Mat3 so3_right_jacobian_inverse(const Vec3& phi);

// SE(3) Jacobians in the rotation-first ordering.
Mat6 se3_left_jacobian(const Vec6& xi);
Mat6 se3_right_jacobian(const Vec6& xi);
Mat6 se3_right_jacobian_inverse(const Vec6& xi);

}  // namespace lrio
