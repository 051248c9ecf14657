#include "lrio/lo_factor.hpp"

#include <cmath>

namespace lrio {

Vec6 lo_residual(const NavState& state, const LoPoseFactor& f) {
  return (f.measured.inverse() * state.pose).log();
}

Mat6x15 lo_jacobian(const NavState& state, const LoPoseFactor& f) {
  const Vec6 e = lo_residual(state, f);
  Mat6x15 J = Mat6x15::Zero();
  // The pose retraction (R exp(dphi), p + R dp) agrees with T exp([dphi; dp])
  // to first order, so the right Jacobian of SE(3) applies directly.
  J.leftCols<6>() = se3_right_jacobian_inverse(e);
  return J;
}

GaussianPrior GaussianPrior::diagonal(const NavState& mean, const Vec15& sigmas) {
  GaussianPrior p;
  p.linearization_point = mean;
  for (int i = 0; i < 15; ++i) {
    const double s = sigmas[i];
    p.sqrt_information(i, i) = (std::isfinite(s) && s > 0.0) ? 1.0 / s : 0.0;
  }
  return p;
}

Vec15 GaussianPrior::residual(const NavState& state) const {
  return sqrt_information * state.local(linearization_point) + offset;
}

Mat15 GaussianPrior::jacobian(const NavState& state) const {
  const Vec15 d = state.local(linearization_point);
  Mat15 dlocal = Mat15::Identity();
  dlocal.block<3, 3>(block::kRot, block::kRot) =
      so3_right_jacobian_inverse(Vec3(d.segment<3>(block::kRot)));
  dlocal.block<3, 3>(block::kPos, block::kPos) =
      linearization_point.pose.rotation().matrix().transpose() * state.pose.rotation().matrix();
  return sqrt_information * dlocal;
}

Mat15 GaussianPrior::information() const { return sqrt_information.transpose() * sqrt_information; }

Vec15 GaussianPrior::information_vector() const { return -sqrt_information.transpose() * offset; }

}  // namespace lrio
