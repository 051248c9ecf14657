#include "lrio/imu_factor.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace lrio {

NavState propagate(const NavState& state, const ImuMeasurement& m, double dt, const Vec3& gravity) {
  const Rotation& r = state.pose.rotation();
  const Vec3 acc_world = r * Vec3(m.linear_acceleration - state.bias_accel) + gravity;
  NavState out = state;
  out.pose = RigidTransform(r * Rotation::exp((m.angular_velocity - state.bias_gyro) * dt),
                            state.pose.translation() + state.velocity * dt +
                                0.5 * acc_world * dt * dt);
  out.velocity = state.velocity + acc_world * dt;
  return out;
}

namespace {

struct ImuTerms {
  Vec3 theta;      // (w - b_g) dt
  Rotation dR;     // exp(theta)
  Mat3 Ri_t;       // R_i^T
  Vec3 pos_world;  // p_j - p_i - v_i dt - g dt^2 / 2
  Vec3 vel_world;  // v_j - v_i - g dt
  Vec3 acc;        // a - b_a
};

ImuTerms imu_terms(const NavState& si, const NavState& sj, const ImuFactor& f) {
  ImuTerms t;
  const double dt = f.dt;
  t.theta = (f.measurement.angular_velocity - si.bias_gyro) * dt;
  t.dR = Rotation::exp(t.theta);
  t.Ri_t = si.pose.rotation().matrix().transpose();
  t.pos_world = sj.pose.translation() - si.pose.translation() - si.velocity * dt -
                0.5 * f.gravity * dt * dt;
  t.vel_world = sj.velocity - si.velocity - f.gravity * dt;
  t.acc = f.measurement.linear_acceleration - si.bias_accel;
  return t;
}

}  // namespace

Vec9 imu_residual(const NavState& si, const NavState& sj, const ImuFactor& f) {
  const ImuTerms t = imu_terms(si, sj, f);
  const double dt = f.dt;
  Vec9 e;
  e.segment<3>(0) = (t.dR.inverse() * si.pose.rotation().inverse() * sj.pose.rotation()).log();
  e.segment<3>(3) = t.Ri_t * t.pos_world - 0.5 * t.acc * dt * dt;
  e.segment<3>(6) = t.Ri_t * t.vel_world - t.acc * dt;
  return e;
}

ImuJacobians imu_jacobians(const NavState& si, const NavState& sj, const ImuFactor& f) {
  const ImuTerms t = imu_terms(si, sj, f);
  const double dt = f.dt;
  const Rotation E = t.dR.inverse() * si.pose.rotation().inverse() * sj.pose.rotation();
  const Vec3 e_rot = E.log();
  const Mat3 Jr_inv = so3_right_jacobian_inverse(e_rot);
  const Mat3 Rj_t_Ri = sj.pose.rotation().matrix().transpose() * si.pose.rotation().matrix();

  ImuJacobians J;
  J.d_state_i.setZero();
  J.d_state_j.setZero();

  using namespace block;
  // rotation residual
  J.d_state_i.block<3, 3>(0, kRot) = -Jr_inv * Rj_t_Ri;
  J.d_state_i.block<3, 3>(0, kBiasGyro) =
      Jr_inv * E.matrix().transpose() * so3_right_jacobian(t.theta) * dt;
  J.d_state_j.block<3, 3>(0, kRot) = Jr_inv;

  // position residual
  J.d_state_i.block<3, 3>(3, kRot) = wedge(Vec3(t.Ri_t * t.pos_world));
  J.d_state_i.block<3, 3>(3, kPos) = -Mat3::Identity();
  J.d_state_i.block<3, 3>(3, kVel) = -t.Ri_t * dt;
  J.d_state_i.block<3, 3>(3, kBiasAccel) = 0.5 * dt * dt * Mat3::Identity();
  J.d_state_j.block<3, 3>(3, kPos) = t.Ri_t * sj.pose.rotation().matrix();

  // velocity residual
  J.d_state_i.block<3, 3>(6, kRot) = wedge(Vec3(t.Ri_t * t.vel_world));
  J.d_state_i.block<3, 3>(6, kVel) = -t.Ri_t;
  J.d_state_i.block<3, 3>(6, kBiasAccel) = dt * Mat3::Identity();
  J.d_state_j.block<3, 3>(6, kVel) = t.Ri_t;
  return J;
}

Mat9 imu_sqrt_information(const ImuFactor& f) {
  const ImuNoise& n = f.noise;
  if (!(n.sigma_g > 0.0) || !(n.sigma_a > 0.0) || !(n.sigma_integration > 0.0) || !(f.dt > 0.0)) {
    throw std::invalid_argument("imu_sqrt_information: sigmas and dt must be positive");
  }
  const double dt = f.dt;
  const double var_a = n.sigma_a * n.sigma_a;
  const Mat3 I = Mat3::Identity();
  Mat9 cov = Mat9::Zero();
  cov.block<3, 3>(0, 0) = n.sigma_g * n.sigma_g * dt * I;
  cov.block<3, 3>(3, 3) =
      (0.25 * var_a * dt * dt * dt + n.sigma_integration * n.sigma_integration * dt) * I;
  cov.block<3, 3>(6, 6) = var_a * dt * I;
  cov.block<3, 3>(3, 6) = 0.5 * var_a * dt * dt * I;
  cov.block<3, 3>(6, 3) = cov.block<3, 3>(3, 6);
  const Mat9 info = cov.inverse();
  const Eigen::LLT<Mat9> llt(info);
  return llt.matrixU();
}

Vec6b bias_walk_residual(const Vec6b& bias_i, const Vec6b& bias_j, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("bias_walk_residual: dt must be positive");
  return bias_j - bias_i;
}

Vec6b bias_walk_sqrt_information(const ImuNoise& noise, double dt) {
  if (!(noise.sigma_bg > 0.0) || !(noise.sigma_ba > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("bias_walk_sqrt_information: sigmas and dt must be positive");
  }
  const double s = std::sqrt(dt);
  Vec6b w;
  w << Vec3::Constant(1.0 / (noise.sigma_bg * s)), Vec3::Constant(1.0 / (noise.sigma_ba * s));
  return w;
}

}  // namespace lrio
