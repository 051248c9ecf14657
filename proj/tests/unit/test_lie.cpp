#include <gtest/gtest.h>

#include <random>

#include "lrio/lie.hpp"
#include "oracles.hpp"

namespace lrio {
namespace {

// Truncated power series of the matrix exponential.
template <class M>
M series_exp(const M& a) {
  M out = M::Identity();
  M term = M::Identity();
  for (int k = 1; k < 40; ++k) {
    term = term * a / static_cast<double>(k);
    out += term;
  }
  return out;
}

TEST(Lie, WedgeVeeRoundTrip) {
  const Vec3 x(0.3, -1.2, 2.0);
  EXPECT_TRUE(vee(wedge(x)).isApprox(x));
  EXPECT_TRUE((wedge(x) + wedge(x).transpose()).isZero());
  const Vec3 y(-0.5, 0.25, 4.0);
  EXPECT_TRUE((wedge(x) * y).isApprox(x.cross(y)));
  Vec6 xi;
  xi << 0.1, 0.2, 0.3, -1.0, 2.0, 0.5;
  EXPECT_TRUE(vee(wedge(xi)).isApprox(xi));
}

TEST(Lie, So3ExpMatchesSeries) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Vec3 tau = testing::random_vec(rng, 3.0);
    const Mat3 expected = series_exp<Mat3>(wedge(tau));
    EXPECT_LT((exp_rot(tau).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Lie, Se3ExpMatchesSeries) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    Vec6 xi;
    xi << testing::random_vec(rng, 2.5), testing::random_vec(rng, 10.0);
    const Mat4 expected = series_exp<Mat4>(wedge(xi));
    EXPECT_LT((exp_se3(xi).matrix() - expected).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Lie, LogInvertsExpIncludingSmallAndNearPi) {
  std::mt19937_64 rng(9);
  std::vector<Vec3> cases = {Vec3::Zero(), Vec3(1e-12, 0, 0), Vec3(0, 3e-9, -1e-9),
                             Vec3(0, 0, 3.14159), Vec3(3.1415926, 0, 0) / 1.0,
                             Vec3(1, 1, 1).normalized() * 3.14};
  for (int i = 0; i < 300; ++i) {
    Vec3 t = testing::random_vec(rng, 1.0);
    if (t.norm() > 1.0) t /= t.norm();
    cases.push_back(t * 3.1);
  }
  for (const Vec3& tau : cases) {
    const Rotation r = exp_rot(tau);
    EXPECT_LT((exp_rot(log_rot(r)).matrix() - r.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    if (tau.norm() < 3.0) {
      EXPECT_LT((log_rot(r) - tau).norm(), 1e-9) << tau.transpose();
    }
  }
  for (int i = 0; i < 200; ++i) {
    Vec6 xi;
    xi << testing::random_vec(rng, 1.5), testing::random_vec(rng, 20.0);
    EXPECT_LT((log_se3(exp_se3(xi)) - xi).norm(), 1e-9);
  }
}

TEST(Lie, RotationLogStaysBelowPi) {
  const Rotation r = exp_rot(Vec3(0, 0, 3.5));
  EXPECT_LE(log_rot(r).norm(), 3.14159266);
  EXPECT_NEAR(log_rot(r).z(), 3.5 - 2 * 3.14159265358979, 1e-12);
}

TEST(Lie, RightJacobianMatchesFiniteDifference) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 200; ++i) {
    const Vec3 phi = testing::random_vec(rng, 2.0);
    Mat3 numeric;
    const double eps = 1e-6;
    for (int c = 0; c < 3; ++c) {
      const Vec3 d = Vec3::Unit(c) * eps;
      const Vec3 plus = log_rot(exp_rot(phi).inverse() * exp_rot(phi + d));
      const Vec3 minus = log_rot(exp_rot(phi).inverse() * exp_rot(phi - d));
      numeric.col(c) = (plus - minus) / (2 * eps);
    }
    EXPECT_LT((so3_right_jacobian(phi) - numeric).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((so3_right_jacobian_inverse(phi) * numeric - Mat3::Identity()).cwiseAbs().maxCoeff(),
              1e-8);
    EXPECT_TRUE(so3_left_jacobian(phi).isApprox(so3_right_jacobian(-phi), 1e-12));
    EXPECT_TRUE(
        (so3_left_jacobian(phi) * so3_left_jacobian_inverse(phi)).isIdentity(1e-10));
  }
}

TEST(Lie, Se3RightJacobianMatchesFiniteDifference) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    Vec6 xi;
    xi << testing::random_vec(rng, 1.5), testing::random_vec(rng, 5.0);
    Mat6 numeric;
    const double eps = 1e-6;
    for (int c = 0; c < 6; ++c) {
      Vec6 d = Vec6::Zero();
      d[c] = eps;
      const Vec6 plus = log_se3(exp_se3(xi).inverse() * exp_se3(xi + d));
      const Vec6 minus = log_se3(exp_se3(xi).inverse() * exp_se3(xi - d));
      numeric.col(c) = (plus - minus) / (2 * eps);
    }
    EXPECT_LT((se3_right_jacobian(xi) - numeric).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_TRUE((se3_right_jacobian_inverse(xi) * se3_right_jacobian(xi)).isIdentity(1e-9));
    EXPECT_TRUE(se3_left_jacobian(xi).isApprox(se3_right_jacobian(-xi), 1e-12));
  }
}

TEST(Lie, TransformComposition) {
  std::mt19937_64 rng(12);
  const RigidTransform a(testing::random_rotation(rng), testing::random_vec(rng, 5));
  const RigidTransform b(testing::random_rotation(rng), testing::random_vec(rng, 5));
  EXPECT_TRUE((a * b).matrix().isApprox(a.matrix() * b.matrix(), 1e-12));
  EXPECT_TRUE((a * a.inverse()).matrix().isIdentity(1e-12));
  const Vec3 p(1, 2, 3);
  EXPECT_TRUE((a * p).isApprox((a.matrix() * p.homogeneous()).head<3>()));
}

TEST(Lie, NavStateRetractLocalRoundTrip) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const NavState x = testing::random_state(rng);
    Vec15 d;
    d << testing::random_vec(rng, 1.0), testing::random_vec(rng, 3.0), testing::random_vec(rng, 2.0),
        testing::random_vec(rng, 0.01), testing::random_vec(rng, 0.1);
    const NavState y = x.retract(d);
    EXPECT_LT((y.local(x) - d).norm(), 1e-9);
    // position moves along the body axes
    EXPECT_TRUE((y.pose.translation() - x.pose.translation())
                    .isApprox(x.pose.rotation() * d.segment<3>(3), 1e-9));
  }
}

}  // namespace
}  // namespace lrio
