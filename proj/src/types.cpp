#include "lrio/types.hpp"

namespace lrio {

NavState NavState::retract(const Vec15& delta) const {
  NavState out;
  const Rotation& r = pose.rotation();
  out.pose = RigidTransform(r * Rotation::exp(delta.segment<3>(block::kRot)),
                            pose.translation() + r * Vec3(delta.segment<3>(block::kPos)));
  out.velocity = velocity + delta.segment<3>(block::kVel);
  out.bias_gyro = bias_gyro + delta.segment<3>(block::kBiasGyro);
  out.bias_accel = bias_accel + delta.segment<3>(block::kBiasAccel);
  return out;
}

Vec15 NavState::local(const NavState& reference) const {
  const Rotation r_ref_inv = reference.pose.rotation().inverse();
  Vec15 d;
  d.segment<3>(block::kRot) = (r_ref_inv * pose.rotation()).log();
  d.segment<3>(block::kPos) = r_ref_inv * Vec3(pose.translation() - reference.pose.translation());
  d.segment<3>(block::kVel) = velocity - reference.velocity;
  d.segment<3>(block::kBiasGyro) = bias_gyro - reference.bias_gyro;
  d.segment<3>(block::kBiasAccel) = bias_accel - reference.bias_accel;
  return d;
}

bool NavState::all_finite() const {
  return pose.rotation().quaternion().coeffs().allFinite() && pose.translation().allFinite() &&
         velocity.allFinite() && bias_gyro.allFinite() && bias_accel.allFinite();
}

}  // namespace lrio
