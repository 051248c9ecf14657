#include "lrio/lie.hpp"

#include <cmath>
#include <stdexcept>

namespace lrio {

namespace {

// Series below this angle for coefficients that cancel catastrophically.
constexpr double kSeriesAngle = 1e-2;

// (1 - cos t) / t^2
double coeff_a(double t) {
  if (t < kSmallAngle) return 0.5;
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// (t - sin t) / t^3
double coeff_b(double t) {
  if (t < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// (1 - (t/2) cot(t/2)) / t^2
double coeff_inv(double t) {
  if (t < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  return 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
}

// (t^2 + 2 cos t - 2) / (2 t^4)
double coeff_q2(double t) {
  if (t < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
  }
  const double t2 = t * t;
  return (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
}

// (2t - 3 sin t + t cos t) / (2 t^5)
double coeff_q3(double t) {
  if (t < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  }
  const double t2 = t * t;
  return (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) / (2.0 * t2 * t2 * t);
}

Mat3 se3_q_block(const Vec3& phi, const Vec3& rho) {
  const double t = phi.norm();
  const Mat3 P = wedge(phi);
  const Mat3 R = wedge(rho);
  const Mat3 PR = P * R;
  const Mat3 RP = R * P;
  const Mat3 PRP = PR * P;
  return 0.5 * R + coeff_b(t) * (PR + RP + PRP) +
         coeff_q2(t) * (P * PR + RP * P - 3.0 * PRP) +
         coeff_q3(t) * (PRP * P + P * PRP);
}

}  // namespace

Mat3 wedge(const Vec3& x) {
  Mat3 m;
  m << 0.0, -x.z(), x.y(),
       x.z(), 0.0, -x.x(),
       -x.y(), x.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  if (sym.cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Mat4 wedge(const Vec6& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = wedge(Vec3(xi.head<3>()));
  m.topRightCorner<3, 1>() = xi.tail<3>();
  return m;
}

Vec6 vee(const Mat4& m) {
  if (m.bottomRows<1>().cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("vee: bottom row of a rigid-motion algebra element must be zero");
  }
  Vec6 xi;
  xi << vee(Mat3(m.topLeftCorner<3, 3>())), m.topRightCorner<3, 1>();
  return xi;
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw std::invalid_argument("Rotation: quaternion must be finite and non-zero");
  }
  return Rotation(Eigen::Quaterniond(q.coeffs() / n));
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite() || (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      m.determinant() <= 0.0) {
    throw std::invalid_argument("Rotation: matrix is not a proper rotation");
  }
  return from_quaternion(Eigen::Quaterniond(m));
}

Rotation Rotation::exp(const Vec3& tau) {
  const double t = tau.norm();
  if (t < kSmallAngle) {
    Eigen::Quaterniond q(1.0 - t * t / 8.0, 0.5 * tau.x(), 0.5 * tau.y(), 0.5 * tau.z());
    return Rotation(q.normalized());
  }
  const double s = std::sin(0.5 * t) / t;
  return Rotation(Eigen::Quaterniond(std::cos(0.5 * t), s * tau.x(), s * tau.y(), s * tau.z()));
}

Vec3 Rotation::log() const {
  double w = q_.w();
  Vec3 v = q_.vec();
  if (w < 0.0) {
    w = -w;
    v = -v;
  }
  const double n = v.norm();
  if (n < kSmallAngle) {
    // atan2(n, w) * 2 / n to second order
    return (2.0 / w) * (1.0 - n * n / (3.0 * w * w)) * v;
  }
  if (w == 0.0) {
    Eigen::Index i = 0;
    v.cwiseAbs().maxCoeff(&i);
    if (v[i] < 0.0) v = -v;
  }
  return (2.0 * std::atan2(n, w) / n) * v;
}

Rotation Rotation::inverse() const { return Rotation(q_.conjugate()); }

Rotation Rotation::operator*(const Rotation& other) const {
  return Rotation((q_ * other.q_).normalized());
}

RigidTransform RigidTransform::exp(const Vec6& xi) {
  const Vec3 phi = xi.head<3>();
  return RigidTransform(Rotation::exp(phi), so3_left_jacobian(phi) * xi.tail<3>());
}

Vec6 RigidTransform::log() const {
  const Vec3 phi = rotation_.log();
  Vec6 xi;
  xi << phi, so3_left_jacobian_inverse(phi) * translation_;
  return xi;
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  const Rotation r_inv = rotation_.inverse();
  return RigidTransform(r_inv, -(r_inv * translation_));
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  return RigidTransform(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

Mat3 so3_left_jacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 P = wedge(phi);
  return Mat3::Identity() + coeff_a(t) * P + coeff_b(t) * P * P;
}

Mat3 so3_left_jacobian_inverse(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 P = wedge(phi);
  return Mat3::Identity() - 0.5 * P + coeff_inv(t) * P * P;
}

Mat3 so3_right_jacobian(const Vec3& phi) { return so3_left_jacobian(-phi); }

Mat3 so3_right_jacobian_inverse(const Vec3& phi) { return so3_left_jacobian_inverse(-phi); }

Mat6 se3_left_jacobian(const Vec6& xi) {
  const Vec3 phi = xi.head<3>();
  const Mat3 J = so3_left_jacobian(phi);
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = J;
  out.bottomRightCorner<3, 3>() = J;
  out.bottomLeftCorner<3, 3>() = se3_q_block(phi, xi.tail<3>());
  return out;
}

Mat6 se3_right_jacobian(const Vec6& xi) { return se3_left_jacobian(-xi); }

Mat6 se3_right_jacobian_inverse(const Vec6& xi) {
  const Vec3 phi = -xi.head<3>();
  const Mat3 Jinv = so3_left_jacobian_inverse(phi);
  const Mat3 Q = se3_q_block(phi, -xi.tail<3>());
  Mat6 out = Mat6::Zero();
  out.topLeftCorner<3, 3>() = Jinv;
  out.bottomRightCorner<3, 3>() = Jinv;
  out.bottomLeftCorner<3, 3>() = -Jinv * Q * Jinv;
  return out;
}

}  // namespace lrio
