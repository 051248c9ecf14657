#include "lrio/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lrio {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string factor_id(const char* kind, std::size_t index, std::size_t node) {
  return std::string(kind) + "#" + std::to_string(index) + "@node " + std::to_string(node);
}

void check_finite(double c, const char* kind, std::size_t index, std::size_t node, bool enabled) {
  if (enabled && !std::isfinite(c)) throw NonFiniteCostError(factor_id(kind, index, node));
}

/// Accumulates into the block-tridiagonal normal equations.
struct BlockSink {
  BlockTridiagonalSystem& sys;

  template <int M>
  void unary(std::size_t k, const Eigen::Matrix<double, M, 1>& r,
             const Eigen::Matrix<double, M, 15>& J) {
    sys.diagonal(k).noalias() += J.transpose() * J;
    sys.gradient(k).noalias() += J.transpose() * r;
  }

  template <int M>
  void binary(std::size_t i, const Eigen::Matrix<double, M, 1>& r,
              const Eigen::Matrix<double, M, 15>& Ji, const Eigen::Matrix<double, M, 15>& Jj) {
    sys.diagonal(i).noalias() += Ji.transpose() * Ji;
    sys.diagonal(i + 1).noalias() += Jj.transpose() * Jj;
    sys.upper(i).noalias() += Ji.transpose() * Jj;
    sys.gradient(i).noalias() += Ji.transpose() * r;
    sys.gradient(i + 1).noalias() += Jj.transpose() * r;
  }
};

/// Accumulates the two-node clique of the node being marginalized.
struct MarginalSink {
  MarginalizationBlock& block;

  template <int M>
  void unary(std::size_t k, const Eigen::Matrix<double, M, 1>& r,
             const Eigen::Matrix<double, M, 15>& J) {
    const Eigen::Index o = 15 * static_cast<Eigen::Index>(k);
    block.hessian.block<15, 15>(o, o).noalias() += J.transpose() * J;
    block.gradient.segment<15>(o).noalias() += J.transpose() * r;
  }

  template <int M>
  void binary(std::size_t, const Eigen::Matrix<double, M, 1>& r,
              const Eigen::Matrix<double, M, 15>& Ji, const Eigen::Matrix<double, M, 15>& Jj) {
    Eigen::Matrix<double, M, 30> J;
    J << Ji, Jj;
    block.hessian.noalias() += J.transpose() * J;
    block.gradient.noalias() += J.transpose() * r;
  }
};

struct TripletSink {
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::Index rows = 0;

  template <int M>
  void put(const Eigen::Matrix<double, M, 15>& J, std::size_t k) {
    for (int r = 0; r < M; ++r) {
      for (int c = 0; c < 15; ++c) {
        if (J(r, c) != 0.0) {
          triplets.emplace_back(rows + r, static_cast<Eigen::Index>(15 * k) + c, J(r, c));
        }
      }
    }
  }

  template <int M>
  void unary(std::size_t k, const Eigen::Matrix<double, M, 1>&,
             const Eigen::Matrix<double, M, 15>& J) {
    put<M>(J, k);
    rows += M;
  }

  template <int M>
  void binary(std::size_t i, const Eigen::Matrix<double, M, 1>&,
              const Eigen::Matrix<double, M, 15>& Ji, const Eigen::Matrix<double, M, 15>& Jj) {
    put<M>(Ji, i);
    put<M>(Jj, i + 1);
    rows += M;
  }
};

}  // namespace

Vec15 InitialPriorSigmas::as_vector() const {
  Vec15 s;
  s << Vec3::Constant(rotation), Vec3::Constant(position), Vec3::Constant(velocity),
      Vec3::Constant(bias_gyro), Vec3::Constant(bias_accel);
  return s;
}

Vec15 GapPriorSigmas::as_vector() const {
  Vec15 s;
  s << Vec3::Constant(rotation), Vec3::Constant(position), Vec3::Constant(velocity),
      Vec3::Constant(kInf), Vec3::Constant(kInf);
  return s;
}

void SmootherConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("smoother.") + name + " must be > 0");
    }
  };
  positive(lag, "lag");
  if (max_solver_iterations < 1) {
    throw std::invalid_argument("smoother.max_solver_iterations must be >= 1");
  }
  positive(convergence_tol, "convergence_tol");
  positive(lm_initial_lambda, "lm_initial_lambda");
  positive(lm_max_lambda, "lm_max_lambda");
  positive(imu_rate, "imu_rate");
  if (!(gap_factor > 1.0)) throw std::invalid_argument("smoother.gap_factor must be > 1");
  positive(huber_delta, "huber_delta");
  positive(max_doppler, "max_doppler");
  if (!(doppler_resolution >= 0.0)) {
    throw std::invalid_argument("smoother.doppler_resolution must be >= 0");
  }
  positive(imu_noise.sigma_g, "imu.sigma_g");
  positive(imu_noise.sigma_a, "imu.sigma_a");
  positive(imu_noise.sigma_bg, "imu.sigma_bg");
  positive(imu_noise.sigma_ba, "imu.sigma_ba");
  if (!(imu_noise.sigma_integration >= 0.0)) {
    throw std::invalid_argument("smoother.imu.sigma_integration must be >= 0");
  }
}

NonFiniteCostError::NonFiniteCostError(const std::string& id)
    : std::runtime_error("non-finite cost in factor " + id), factor_id_(id) {}

FixedLagSmoother::FixedLagSmoother(const SmootherConfig& config, const SensorRig& rig)
    : config_(config), rig_(rig), radar_extrinsics_(RadarExtrinsics::from_rig(rig)) {
  config_.validate();
}

std::size_t FixedLagSmoother::add_imu(const ImuMeasurement& m) {
  Node node;
  node.id = next_id_;
  node.t = m.t;
  node.imu = m;
  if (nodes_.empty()) {
    node.state.pose = initial_pose_;
    node.priors.push_back(GaussianPrior::diagonal(node.state, config_.initial_prior.as_vector()));
  } else {
    const Node& prev = nodes_.back();
    if (m.t <= prev.t) {
      throw std::invalid_argument("add_imu: timestamp " + std::to_string(m.t) +
                                  " not newer than newest node " + std::to_string(prev.t));
    }
    const double dt = to_seconds(m.t - prev.t);
    node.state = propagate(prev.state, prev.imu, dt, rig_.gravity);
    node.has_link = true;
    node.imu_factor.dt = dt;
    node.bias_sqrt_info = bias_walk_sqrt_information(config_.imu_noise, dt);
    if (dt > config_.gap_factor / config_.imu_rate) {
      ++drops_.imu_gaps;
      node.priors.push_back(GaussianPrior::diagonal(node.state, config_.gap_prior.as_vector()));
    } else {
      node.has_imu_factor = true;
      node.imu_factor = {prev.id, node.id, prev.imu, dt, rig_.gravity, config_.imu_noise};
      node.imu_sqrt_info = imu_sqrt_information(node.imu_factor);
    }
  }
  nodes_.push_back(std::move(node));
  node_times_.push_back(m.t);
  ++next_id_;
  flush_pending();
  return nodes_.back().id;
}

std::optional<std::size_t> FixedLagSmoother::associate(Timestamp t) const {
  return associate_to_node(t, node_times_);
}

void FixedLagSmoother::attach_radar(std::size_t k, const RadarDopplerMeasurement& m) {
  Node& n = nodes_[k];
  n.radar.emplace_back(n.id, m.bearing, m.radial_speed, n.imu.angular_velocity, radar_extrinsics_,
                       m.sigma, config_.huber_delta);
}

void FixedLagSmoother::attach_lo(std::size_t k, const LoPoseMeasurement& m) {
  Node& n = nodes_[k];
  n.lo.push_back({n.id, m.pose, m.sigma});
}

AttachResult FixedLagSmoother::add_radar(const RadarDopplerMeasurement& m) {
  if (!config_.use_radar) return {AttachResult::Status::kIgnored, 0};
  if (!doppler_unambiguous(m.radial_speed, config_.max_doppler, config_.doppler_resolution)) {
    ++drops_.radar_ambiguous;
    return {AttachResult::Status::kRejected, 0};
  }
  if (nodes_.empty() || m.t > nodes_.back().t) {
    pending_radar_.push_back(m);
    return {AttachResult::Status::kDeferred, 0};
  }
  const auto k = associate(m.t);
  if (!k) {
    ++drops_.radar_expired;
    return {AttachResult::Status::kExpired, 0};
  }
  attach_radar(*k, m);
  return {AttachResult::Status::kAttached, nodes_[*k].id};
}

AttachResult FixedLagSmoother::add_lo(const LoPoseMeasurement& m) {
  if (!config_.use_lo) return {AttachResult::Status::kIgnored, 0};
  if (nodes_.empty() || m.t > nodes_.back().t) {
    pending_lo_.push_back(m);
    return {AttachResult::Status::kDeferred, 0};
  }
  const auto k = associate(m.t);
  if (!k) {
    ++drops_.lo_expired;
    return {AttachResult::Status::kExpired, 0};
  }
  attach_lo(*k, m);
  return {AttachResult::Status::kAttached, nodes_[*k].id};
}

void FixedLagSmoother::flush_pending() {
  const Timestamp newest = nodes_.back().t;
  auto drain = [&](auto& pending, auto&& add) {
    auto keep = pending.begin();
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      if (it->t > newest) {
        *keep++ = std::move(*it);
      } else {
        add(*it);
      }
    }
    pending.erase(keep, pending.end());
  };
  drain(pending_radar_, [&](const RadarDopplerMeasurement& m) { add_radar(m); });
  drain(pending_lo_, [&](const LoPoseMeasurement& m) { add_lo(m); });
}

template <class Sink>
void FixedLagSmoother::linearize_unaries(std::size_t k, const NavState& x, Sink& sink) const {
  const Node& n = nodes_[k];
  for (const auto& p : n.priors) {
    sink.template unary<15>(k, p.residual(x), p.jacobian(x));
  }
  for (const auto& f : n.lo) {
    const Vec6 inv_sigma = f.sigma.cwiseInverse();
    const Vec6 r = inv_sigma.cwiseProduct(lo_residual(x, f));
    const Mat6x15 J = inv_sigma.asDiagonal() * lo_jacobian(x, f);
    sink.template unary<6>(k, r, J);
  }
  for (const auto& f : n.radar) {
    const double e = radial_speed_residual(x, f);
    const double s = std::sqrt(robust_weight(e, f.huber_delta())) / f.sigma();
    Eigen::Matrix<double, 1, 1> r;
    r(0) = s * e;
    const Eigen::Matrix<double, 1, 15> J = s * radial_speed_jacobians(x, f).full();
    sink.template unary<1>(k, r, J);
  }
}

template <class Sink>
void FixedLagSmoother::linearize_link(std::size_t k, const NavState& xi, const NavState& xj,
                                      Sink& sink) const {
  const Node& n = nodes_[k];
  if (!n.has_link) return;
  if (n.has_imu_factor) {
    const Vec9 r = n.imu_sqrt_info * imu_residual(xi, xj, n.imu_factor);
    const ImuJacobians J = imu_jacobians(xi, xj, n.imu_factor);
    const Mat9x15 Ji = n.imu_sqrt_info * J.d_state_i;
    const Mat9x15 Jj = n.imu_sqrt_info * J.d_state_j;
    sink.template binary<9>(k - 1, r, Ji, Jj);
  }
  const Vec6b r = n.bias_sqrt_info.cwiseProduct(
      bias_walk_residual(stacked_bias(xi), stacked_bias(xj), n.imu_factor.dt));
  Eigen::Matrix<double, 6, 15> Ji = Eigen::Matrix<double, 6, 15>::Zero();
  Eigen::Matrix<double, 6, 15> Jj = Eigen::Matrix<double, 6, 15>::Zero();
  Ji.rightCols<6>() = -n.bias_sqrt_info.asDiagonal().toDenseMatrix();
  Jj.rightCols<6>() = n.bias_sqrt_info.asDiagonal().toDenseMatrix();
  sink.template binary<6>(k - 1, r, Ji, Jj);
}

double FixedLagSmoother::unary_cost(std::size_t k, const NavState& x, bool check) const {
  const Node& n = nodes_[k];
  double total = 0.0;
  for (std::size_t i = 0; i < n.priors.size(); ++i) {
    const double c = n.priors[i].residual(x).squaredNorm();
    check_finite(c, "prior", i, n.id, check);
    total += c;
  }
  for (std::size_t i = 0; i < n.lo.size(); ++i) {
    const double c = lo_residual(x, n.lo[i]).cwiseQuotient(n.lo[i].sigma).squaredNorm();
    check_finite(c, "lo", i, n.id, check);
    total += c;
  }
  for (std::size_t i = 0; i < n.radar.size(); ++i) {
    const auto& f = n.radar[i];
    const double c =
        huber_cost(radial_speed_residual(x, f), f.huber_delta()) / (f.sigma() * f.sigma());
    check_finite(c, "radar", i, n.id, check);
    total += c;
  }
  return total;
}

double FixedLagSmoother::link_cost(std::size_t k, const NavState& xi, const NavState& xj,
                                   bool check) const {
  const Node& n = nodes_[k];
  if (!n.has_link) return 0.0;
  double total = 0.0;
  if (n.has_imu_factor) {
    const double c = (n.imu_sqrt_info * imu_residual(xi, xj, n.imu_factor)).squaredNorm();
    check_finite(c, "imu", 0, n.id, check);
    total += c;
  }
  const double c = n.bias_sqrt_info
                       .cwiseProduct(bias_walk_residual(stacked_bias(xi), stacked_bias(xj),
                                                        n.imu_factor.dt))
                       .squaredNorm();
  check_finite(c, "bias_walk", 0, n.id, check);
  return total + c;
}

double FixedLagSmoother::total_cost(const std::vector<NavState>& x, bool check) const {
  double total = 0.0;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    total += unary_cost(k, x[k], check);
    if (k > 0) total += link_cost(k, x[k - 1], x[k], check);
  }
  return total;
}

BlockTridiagonalSystem FixedLagSmoother::linearize_at(const std::vector<NavState>& x) const {
  BlockTridiagonalSystem sys(nodes_.size());
  BlockSink sink{sys};
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    linearize_unaries(k, x[k], sink);
    if (k > 0) linearize_link(k, x[k - 1], x[k], sink);
  }
  return sys;
}

BlockTridiagonalSystem FixedLagSmoother::linearize() const {
  std::vector<NavState> x;
  x.reserve(nodes_.size());
  for (const auto& n : nodes_) x.push_back(n.state);
  return linearize_at(x);
}

double FixedLagSmoother::cost() const {
  std::vector<NavState> x;
  x.reserve(nodes_.size());
  for (const auto& n : nodes_) x.push_back(n.state);
  return total_cost(x, false);
}

Eigen::SparseMatrix<double> FixedLagSmoother::whitened_jacobian() const {
  TripletSink sink;
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    linearize_unaries(k, nodes_[k].state, sink);
    if (k > 0) linearize_link(k, nodes_[k - 1].state, nodes_[k].state, sink);
  }
  Eigen::SparseMatrix<double> J(sink.rows, 15 * static_cast<Eigen::Index>(nodes_.size()));
  J.setFromTriplets(sink.triplets.begin(), sink.triplets.end());
  return J;
}

OptimizeReport FixedLagSmoother::optimize() {
  if (nodes_.empty()) throw std::logic_error("optimize: empty window");
  OptimizeReport report;
  report.nodes = nodes_.size();

  std::vector<NavState> x;
  x.reserve(nodes_.size());
  for (const auto& n : nodes_) x.push_back(n.state);
  double cost = total_cost(x, true);
  report.cost_trace.push_back(cost);

  double lambda = config_.lm_initial_lambda;
  double nu = 2.0;
  for (int attempt = 0; attempt < config_.max_solver_iterations; ++attempt) {
    const BlockTridiagonalSystem sys = linearize_at(x);
    if (sys.gradient_max_norm() < 1e-10) {
      report.converged = true;
      break;
    }
    const auto step = sys.solve(lambda);
    if (!step) {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > config_.lm_max_lambda) break;
      continue;
    }
    double step_max = 0.0;
    std::vector<NavState> trial(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      trial[k] = x[k].retract((*step)[k]);
      step_max = std::max(step_max, (*step)[k].cwiseAbs().maxCoeff());
    }
    const double trial_cost = total_cost(trial, false);
    if (std::isfinite(trial_cost) && trial_cost < cost) {
      const double predicted = sys.predicted_decrease(*step);
      const double rho = predicted > 0.0 ? (cost - trial_cost) / predicted : 0.0;
      const double relative = (cost - trial_cost) / std::max(cost, 1e-300);
      x = std::move(trial);
      cost = trial_cost;
      ++report.iterations;
      report.cost_trace.push_back(cost);
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (relative < config_.convergence_tol || step_max < 1e-10) {
        report.converged = true;
        break;
      }
    } else {
      if (step_max < 1e-10) {
        report.converged = true;
        break;
      }
      lambda *= nu;
      nu *= 2.0;
      if (lambda > config_.lm_max_lambda) break;
    }
  }

  for (std::size_t k = 0; k < nodes_.size(); ++k) nodes_[k].state = x[k];
  return report;
}

void FixedLagSmoother::marginalize_front() {
  Node& first = nodes_[0];
  Node& second = nodes_[1];
  MarginalizationBlock block;
  MarginalSink sink{block};
  linearize_unaries(0, first.state, sink);
  linearize_link(1, first.state, second.state, sink);
  const auto [h, g] = schur_complement_first(block);
  second.priors.push_back(prior_from_information(second.state, h, g));
  // The successor no longer has a predecessor in the window.
  second.has_link = false;
  second.has_imu_factor = false;

  finalized_.push_back({first.t, first.state});
  nodes_.pop_front();
  node_times_.erase(node_times_.begin());
}

std::size_t FixedLagSmoother::slide_window(Timestamp now) {
  const Timestamp horizon = now - from_seconds(config_.lag);
  std::size_t count = 0;
  while (nodes_.size() > 1 && nodes_.front().t < horizon) {
    marginalize_front();
    ++count;
  }
  return count;
}

std::vector<StateSample> FixedLagSmoother::take_finalized() {
  std::vector<StateSample> out;
  out.swap(finalized_);
  return out;
}

std::vector<StateSample> FixedLagSmoother::window_states() const {
  std::vector<StateSample> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back({n.t, n.state});
  return out;
}

FactorCounts FixedLagSmoother::factor_counts() const {
  FactorCounts c;
  for (const auto& n : nodes_) {
    c.prior += n.priors.size();
    c.radar += n.radar.size();
    c.lo += n.lo.size();
    if (n.has_link) ++c.bias_walk;
    if (n.has_imu_factor) ++c.imu;
  }
  return c;
}

Mat15 FixedLagSmoother::marginal_information() const {
  Mat15 info = Mat15::Zero();
  if (nodes_.empty() || nodes_.front().id == 0) return info;
  for (const auto& p : nodes_.front().priors) info += p.information();
  return info;
}

}  // namespace lrio
