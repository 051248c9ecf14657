#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "lrio/block_tridiagonal.hpp"
#include "lrio/imu_factor.hpp"
#include "lrio/lo_factor.hpp"
#include "lrio/measurement.hpp"
#include "lrio/radar_factor.hpp"

namespace lrio {

/// Prior sigmas on the first node. Non-finite or non-positive entries leave
/// the block unconstrained.
struct InitialPriorSigmas {
  double rotation = 0.02;    // rad
  double position = 0.05;    // m
  double velocity = 1.0;     // m/s
  double bias_gyro = 1e-2;   // rad/s
  double bias_accel = 0.2;   // m/s^2

  Vec15 as_vector() const;
};

/// Weak unary prior that replaces the IMU factor across a gap in the IMU stream.
struct GapPriorSigmas {
  double rotation = 0.5;
  double position = 10.0;
  double velocity = 5.0;

  Vec15 as_vector() const;
};

struct SmootherConfig {
  double lag = 2.0;                 // s
  int max_solver_iterations = 10;
  double convergence_tol = 1e-6;    // relative cost change
  double lm_initial_lambda = 1e-4;
  double lm_max_lambda = 1e16;
  double imu_rate = 400.0;          // Hz, nominal
  double gap_factor = 3.0;          // IMU dt above gap_factor periods is a gap
  double huber_delta = 0.5;         // m/s, radar only
  double max_doppler = kDefaultMaxDoppler;
  double doppler_resolution = kDefaultDopplerResolution;
  bool use_radar = true;
  bool use_lo = true;
  ImuNoise imu_noise;
  InitialPriorSigmas initial_prior;
  GapPriorSigmas gap_prior;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Cost evaluated to NaN/inf; `factor_id()` names the culprit, e.g. "radar#12@node 840".
class NonFiniteCostError : public std::runtime_error {
 public:
  explicit NonFiniteCostError(const std::string& factor_id);
  const std::string& factor_id() const { return factor_id_; }

 private:
  std::string factor_id_;
};

struct AttachResult {
  enum class Status { kAttached, kDeferred, kExpired, kRejected, kIgnored };
  Status status = Status::kIgnored;
  std::size_t node = 0;  // global node index, valid when attached
};

struct OptimizeReport {
  int iterations = 0;            // accepted steps
  bool converged = false;
  std::vector<double> cost_trace;  // initial cost, then one entry per accepted step
  std::size_t nodes = 0;
};

struct FactorCounts {
  std::size_t imu = 0;
  std::size_t bias_walk = 0;
  std::size_t radar = 0;
  std::size_t lo = 0;
  std::size_t prior = 0;
};

struct DropCounters {
  std::size_t radar_expired = 0;
  std::size_t lo_expired = 0;
  std::size_t radar_ambiguous = 0;  // doppler near the unambiguous limit
  std::size_t imu_gaps = 0;
};

/// Fixed-lag smoother over IMU-rate nodes.
///
/// Each IMU message creates one node. The sample stored with node k drives the
/// motion constraint from k to k+1 and provides the angular rate for radar
/// factors attached to k. Radar and LO measurements attach to the node nearest
/// their stamp; measurements newer than the newest node wait for the next IMU
/// message.
class FixedLagSmoother {
 public:
  FixedLagSmoother(const SmootherConfig& config, const SensorRig& rig);

  /// Pose of the first node; identity unless set before the first add_imu.
  void set_initial_pose(const RigidTransform& pose) { initial_pose_ = pose; }

  /// Returns the global index of the new node. Throws std::invalid_argument if
  /// m.t is not newer than the newest node.
  std::size_t add_imu(const ImuMeasurement& m);
  AttachResult add_radar(const RadarDopplerMeasurement& m);
  AttachResult add_lo(const LoPoseMeasurement& m);

  /// Robust Levenberg-Marquardt over the window. Throws NonFiniteCostError if
  /// the current estimate has a non-finite cost.
  OptimizeReport optimize();

  /// Marginalizes every node older than now - lag, keeping at least one node.
  std::size_t slide_window(Timestamp now);

  /// States of marginalized nodes, in order, since the last call.
  std::vector<StateSample> take_finalized();
  /// Current estimates of all live nodes.
  std::vector<StateSample> window_states() const;

  bool empty() const { return nodes_.empty(); }
  std::size_t window_size() const { return nodes_.size(); }
  std::size_t total_nodes() const { return next_id_; }
  std::size_t first_node() const { return nodes_.empty() ? next_id_ : nodes_.front().id; }
  Timestamp newest_time() const { return nodes_.back().t; }
  Timestamp oldest_time() const { return nodes_.front().t; }

  const SmootherConfig& config() const { return config_; }
  FactorCounts factor_counts() const;
  const DropCounters& drops() const { return drops_; }
  std::size_t pending_measurements() const { return pending_radar_.size() + pending_lo_.size(); }
  /// Information matrix of the current marginalization prior (zero before
  /// the first slide).
  Mat15 marginal_information() const;

  /// Total robust cost at the current estimate.
  double cost() const;
  /// Whitened stacked Jacobian of every factor at the current estimate;
  /// columns are 15 per live node in window order.
  Eigen::SparseMatrix<double> whitened_jacobian() const;
  /// Normal equations at the current estimate.
  BlockTridiagonalSystem linearize() const;

 private:
  struct Node {
    std::size_t id = 0;
    Timestamp t = 0;
    NavState state;
    ImuMeasurement imu;
    std::vector<GaussianPrior> priors;
    std::vector<RadarRadialSpeedFactor> radar;
    std::vector<LoPoseFactor> lo;
    // Link from the previous node; absent for the first node ever created.
    bool has_link = false;
    bool has_imu_factor = false;  // false across an IMU gap
    ImuFactor imu_factor;
    Mat9 imu_sqrt_info = Mat9::Zero();
    Vec6b bias_sqrt_info = Vec6b::Zero();
  };

  template <class Sink>
  void linearize_unaries(std::size_t k, const NavState& x, Sink& sink) const;
  template <class Sink>
  void linearize_link(std::size_t k, const NavState& xi, const NavState& xj, Sink& sink) const;
  double unary_cost(std::size_t k, const NavState& x, bool throw_on_nonfinite) const;
  double link_cost(std::size_t k, const NavState& xi, const NavState& xj,
                   bool throw_on_nonfinite) const;
  double total_cost(const std::vector<NavState>& x, bool throw_on_nonfinite) const;
  BlockTridiagonalSystem linearize_at(const std::vector<NavState>& x) const;

  void attach_radar(std::size_t k, const RadarDopplerMeasurement& m);
  void attach_lo(std::size_t k, const LoPoseMeasurement& m);
  std::optional<std::size_t> associate(Timestamp t) const;
  void flush_pending();
  void marginalize_front();

  SmootherConfig config_;
  SensorRig rig_;
  RadarExtrinsics radar_extrinsics_;
  std::deque<Node> nodes_;
  std::vector<Timestamp> node_times_;
  std::size_t next_id_ = 0;
  std::vector<RadarDopplerMeasurement> pending_radar_;
  std::vector<LoPoseMeasurement> pending_lo_;
  RigidTransform initial_pose_;
  std::vector<StateSample> finalized_;
  DropCounters drops_;
};

}  // namespace lrio
