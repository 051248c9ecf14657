#pragma once

#include <cstddef>

#include "lrio/types.hpp"

namespace lrio {

using Mat6x15 = Eigen::Matrix<double, 6, 15>;

/// Unary pose factor from an external LiDAR-odometry estimate.
struct LoPoseFactor {
  std::size_t node = 0;
  RigidTransform measured;  // world <- IMU
  Vec6 sigma = Vec6::Constant(0.1);
};

/// log(measured^-1 * pose), rotation first.
Vec6 lo_residual(const NavState& state, const LoPoseFactor& factor);

/// Jacobian of lo_residual w.r.t. the 15-dim state tangent.
Mat6x15 lo_jacobian(const NavState& state, const LoPoseFactor& factor);

/// Gaussian prior on one node in square-root form:
///   r = sqrt_information * local(x, linearization_point) + offset.
/// Rows of sqrt_information may be zero for unconstrained directions.
struct GaussianPrior {
  NavState linearization_point;
  Mat15 sqrt_information = Mat15::Zero();
  Vec15 offset = Vec15::Zero();

  /// Diagonal prior centred at `mean`. A non-finite or non-positive sigma
  /// leaves that direction unconstrained.
  static GaussianPrior diagonal(const NavState& mean, const Vec15& sigmas);

  Vec15 residual(const NavState& state) const;
  Mat15 jacobian(const NavState& state) const;

  /// Information matrix L^T L.
  Mat15 information() const;
  /// Gradient-side vector -L^T offset; the prior mean in local coordinates
  /// solves information() * d = information_vector().
  Vec15 information_vector() const;
};

}  // namespace lrio
