#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "lrio/simulator.hpp"
#include "lrio/smoother.hpp"
#include "oracles.hpp"

namespace lrio {
namespace {

constexpr Timestamp kStep = 2'500'000;  // 400 Hz

ImuMeasurement rest_imu(Timestamp t) {
  return {t, Vec3::Zero(), Vec3(0.0, 0.0, 9.81)};
}

SmootherConfig base_config() {
  SmootherConfig cfg;
  cfg.imu_rate = 400.0;
  return cfg;
}

TEST(Smoother, AtRestWithExactPriorsNothingMoves) {
  FixedLagSmoother s(base_config(), SensorRig{});
  for (int k = 0; k < 50; ++k) s.add_imu(rest_imu(k * kStep));
  const OptimizeReport r = s.optimize();
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(s.cost(), 1e-20);
  for (const auto& st : s.window_states()) {
    EXPECT_LT(st.state.pose.translation().norm(), 1e-12);
    EXPECT_LT(st.state.velocity.norm(), 1e-12);
  }
}

// One node, prior and LO on the same position: the posterior is the
// precision-weighted mean.
TEST(Smoother, LoAndPriorFuseToWeightedMean) {
  SmootherConfig cfg = base_config();
  cfg.initial_prior.position = 0.2;
  FixedLagSmoother s(cfg, SensorRig{});
  s.add_imu(rest_imu(0));
  LoPoseMeasurement lo;
  lo.t = 0;
  lo.pose = RigidTransform(Rotation(), Vec3(1.0, -2.0, 0.5));
  lo.sigma << 0.01, 0.01, 0.01, 0.1, 0.1, 0.1;
  ASSERT_EQ(s.add_lo(lo).status, AttachResult::Status::kAttached);
  s.optimize();
  const double w = 0.2 * 0.2 / (0.2 * 0.2 + 0.1 * 0.1);
  const Vec3 p = s.window_states()[0].state.pose.translation();
  EXPECT_LT((p - w * Vec3(1.0, -2.0, 0.5)).norm(), 1e-6);
}

TEST(Smoother, DelayedLoAttachesOnceItsNodeExists) {
  FixedLagSmoother s(base_config(), SensorRig{});
  s.add_imu(rest_imu(0));
  LoPoseMeasurement lo;
  lo.t = kStep + 1;  // nearest node will be 1 once it exists
  EXPECT_EQ(s.add_lo(lo).status, AttachResult::Status::kDeferred);
  EXPECT_EQ(s.pending_measurements(), 1u);
  EXPECT_EQ(s.factor_counts().lo, 0u);
  s.add_imu(rest_imu(kStep));  // still older than the LO stamp
  EXPECT_EQ(s.pending_measurements(), 1u);
  s.add_imu(rest_imu(2 * kStep));
  EXPECT_EQ(s.pending_measurements(), 0u);
  EXPECT_EQ(s.factor_counts().lo, 1u);
  // it went to node 1, the nearer one
  LoPoseMeasurement probe;
  probe.t = kStep;
  EXPECT_EQ(s.add_lo(probe).node, 1u);
}

TEST(Smoother, DropCounters) {
  SmootherConfig cfg = base_config();
  cfg.lag = 0.05;
  FixedLagSmoother s(cfg, SensorRig{});
  for (int k = 0; k < 100; ++k) s.add_imu(rest_imu(k * kStep));
  s.optimize();
  s.slide_window(99 * kStep);
  ASSERT_GT(s.first_node(), 0u);

  RadarDopplerMeasurement old;
  old.t = 0;
  EXPECT_EQ(s.add_radar(old).status, AttachResult::Status::kExpired);
  RadarDopplerMeasurement fast;
  fast.t = 99 * kStep;
  fast.radial_speed = cfg.max_doppler;
  EXPECT_EQ(s.add_radar(fast).status, AttachResult::Status::kRejected);
  LoPoseMeasurement lo;
  lo.t = 0;
  EXPECT_EQ(s.add_lo(lo).status, AttachResult::Status::kExpired);
  EXPECT_EQ(s.drops().radar_expired, 1u);
  EXPECT_EQ(s.drops().radar_ambiguous, 1u);
  EXPECT_EQ(s.drops().lo_expired, 1u);

  s.add_imu(rest_imu(200 * kStep));  // gap
  EXPECT_EQ(s.drops().imu_gaps, 1u);
}

TEST(Smoother, RejectsOutOfOrderImu) {
  FixedLagSmoother s(base_config(), SensorRig{});
  s.add_imu(rest_imu(kStep));
  EXPECT_THROW(s.add_imu(rest_imu(kStep)), std::invalid_argument);
  EXPECT_THROW(s.add_imu(rest_imu(0)), std::invalid_argument);
}

TEST(Smoother, NonFiniteCostNamesTheFactor) {
  FixedLagSmoother s(base_config(), SensorRig{});
  s.add_imu(rest_imu(0));
  s.add_imu(rest_imu(kStep));
  LoPoseMeasurement lo;
  lo.t = kStep;
  lo.pose = RigidTransform(Rotation(), Vec3(std::nan(""), 0, 0));
  s.add_lo(lo);
  try {
    s.optimize();
    FAIL() << "expected NonFiniteCostError";
  } catch (const NonFiniteCostError& e) {
    EXPECT_NE(e.factor_id().find("lo"), std::string::npos) << e.factor_id();
    EXPECT_NE(e.factor_id().find("node 1"), std::string::npos) << e.factor_id();
  }
}

// Marginal prior stays symmetric positive semidefinite over many slides, and
// finalized states come out once, in order.
TEST(Smoother, MarginalPriorStaysPsdWhileSliding) {
  TrajectorySpec traj;
  traj.kind = TrajectoryKind::kFigureEight;
  traj.duration = 4.0;
  traj.max_speed = 8.0;
  traj.max_yaw_rate = 0.5;
  SensorNoiseSpec noise;
  noise.imu.sigma_g = 2e-4;
  noise.imu.sigma_a = 2e-3;
  noise.radar.sigma_doppler = 0.05;
  noise.lo.sigma_xy = 0.05;
  noise.lo.sigma_else = 0.01;
  noise.seed = 4;
  const SimulatedRun run = simulate(traj, noise, default_sensor_rig());

  SmootherConfig cfg = base_config();
  cfg.lag = 0.5;
  FixedLagSmoother s(cfg, run.data.rig);
  s.set_initial_pose(run.truth.front().state.pose);
  std::size_t finalized = 0;
  Timestamp last = std::numeric_limits<Timestamp>::min();
  const auto events = merge_streams(run.data);
  std::size_t imu_count = 0;
  for (const auto& e : events) {
    switch (e.kind) {
      case MeasurementEvent::Kind::kImu:
        s.add_imu(run.data.imu[e.index]);
        ++imu_count;
        break;
      case MeasurementEvent::Kind::kRadar: s.add_radar(run.data.radar[e.index]); break;
      case MeasurementEvent::Kind::kLo: s.add_lo(run.data.lo[e.index]); break;
      default: break;
    }
    if (e.kind == MeasurementEvent::Kind::kImu && imu_count % 40 == 0) {
      s.optimize();
      s.slide_window(s.newest_time());
      const Mat15 H = s.marginal_information();
      EXPECT_LT((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-9 * (1 + H.cwiseAbs().maxCoeff()));
      const Eigen::SelfAdjointEigenSolver<Mat15> eig(H);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * std::max(1.0, eig.eigenvalues().maxCoeff()));
      for (const auto& f : s.take_finalized()) {
        EXPECT_GT(f.t, last);
        last = f.t;
        ++finalized;
      }
      EXPECT_LE(to_seconds(s.newest_time() - s.oldest_time()), cfg.lag + 1e-9);
    }
  }
  EXPECT_EQ(finalized + s.window_size(), run.data.imu.size());
  // the window tracks the truth closely
  const auto window = s.window_states();
  const auto& truth = run.truth[run.truth.size() - 1].state;
  EXPECT_LT((window.back().state.pose.translation() - truth.pose.translation()).norm(), 0.2);
  EXPECT_LT((window.back().state.velocity - truth.velocity).norm(), 0.05);
}

TEST(Smoother, ConfigValidation) {
  SmootherConfig cfg;
  cfg.lag = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = SmootherConfig{};
  cfg.gap_factor = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace lrio
