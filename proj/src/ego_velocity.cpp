#include "lrio/ego_velocity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lrio/measurement.hpp"

namespace lrio {

namespace {

constexpr double kMaxCondition = 1e6;

std::string describe_null(const Vec3& n) {
  std::ostringstream os;
  os << "degenerate geometry: bearings leave direction [" << n.x() << ", " << n.y() << ", "
     << n.z() << "] unobservable";
  return os.str();
}

/// Throws if the normal matrix is rank deficient; returns its inverse otherwise.
Mat3 checked_inverse(const Mat3& normal) {
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(normal);
  const Vec3 ev = eig.eigenvalues();  // ascending
  // cond(A) = sqrt(cond(A^T A))
  if (!(ev[0] > 0.0) || ev[2] / ev[0] >= kMaxCondition * kMaxCondition) {
    Vec3 n = eig.eigenvectors().col(0);
    Eigen::Index i = 0;
    n.cwiseAbs().maxCoeff(&i);
    if (n[i] < 0.0) n = -n;
    throw DegenerateGeometryError(n);
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

double model_residual(const DopplerPoint& p, const Vec3& v) { return p.doppler + p.bearing.dot(v); }

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

}  // namespace

void RansacConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("ransac.max_iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) throw std::invalid_argument("ransac.inlier_threshold must be > 0");
  if (min_inliers < 3) throw std::invalid_argument("ransac.min_inliers must be >= 3");
  if (subset_size < 3) throw std::invalid_argument("ransac.subset_size must be >= 3");
  if (!(min_angular_separation >= 0.0)) {
    throw std::invalid_argument("ransac.min_angular_separation must be >= 0");
  }
}

DegenerateGeometryError::DegenerateGeometryError(const Vec3& null_direction)
    : std::runtime_error(describe_null(null_direction)), null_direction_(null_direction) {}

NoConsensusError::NoConsensusError(std::size_t consensus)
    : std::runtime_error("no static consensus (" + std::to_string(consensus) + " inliers)"),
      consensus_(consensus) {}

VelocityFit solve_velocity_lsq(std::span<const DopplerPoint> points, double sigma) {
  if (points.size() < 3) throw std::invalid_argument("solve_velocity_lsq: need at least 3 points");
  // doppler = -mu^T v  =>  A = -mu^T rows, b = doppler
  Mat3 normal = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (const auto& p : points) {
    normal.noalias() += p.bearing * p.bearing.transpose();
    rhs -= p.bearing * p.doppler;
  }
  const Mat3 inv = checked_inverse(normal);
  VelocityFit fit;
  fit.velocity = inv * rhs;
  fit.covariance = sigma * sigma * inv;
  return fit;
}

RansacResult ransac_velocity(const RadarPointCloud& cloud, const RansacConfig& cfg, double sigma) {
  cfg.validate();
  if (cloud.points.empty()) throw std::invalid_argument("ransac_velocity: empty cloud");

  std::vector<DopplerPoint> pts;
  std::vector<std::size_t> origin;  // index into cloud.points
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (auto mu = bearing_from_point(cloud.points[i].position)) {
      pts.push_back({*mu, cloud.points[i].doppler});
      origin.push_back(i);
    }
  }
  if (pts.size() < 3) throw NoConsensusError(pts.size());

  Mat3 all_normal = Mat3::Zero();
  for (const auto& p : pts) all_normal.noalias() += p.bearing * p.bearing.transpose();
  checked_inverse(all_normal);

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::size_t best_count = 0;
  Vec3 best_v = Vec3::Zero();
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    std::size_t c = pick(rng);
    if (a == b || a == c || b == c) continue;
    Mat3 A;
    A.row(0) = -pts[a].bearing.transpose();
    A.row(1) = -pts[b].bearing.transpose();
    A.row(2) = -pts[c].bearing.transpose();
    if (std::abs(A.determinant()) < 1e-6) continue;
    const Vec3 v = A.partialPivLu().solve(Vec3(pts[a].doppler, pts[b].doppler, pts[c].doppler));
    std::size_t count = 0;
    for (const auto& p : pts) {
      if (std::abs(model_residual(p, v)) <= cfg.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_v = v;
    }
  }
  if (best_count < static_cast<std::size_t>(cfg.min_inliers)) throw NoConsensusError(best_count);

  // Refit on the consensus set until the classification is stable.
  std::vector<bool> mask(pts.size());
  auto classify = [&](const Vec3& v) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      mask[i] = std::abs(model_residual(pts[i], v)) <= cfg.inlier_threshold;
      n += mask[i] ? 1 : 0;
    }
    return n;
  };
  classify(best_v);
  VelocityFit fit;
  std::size_t count = 0;
  for (int round = 0; round < 10; ++round) {
    std::vector<DopplerPoint> inliers;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (mask[i]) inliers.push_back(pts[i]);
    }
    if (inliers.size() < 3) throw NoConsensusError(inliers.size());
    fit = solve_velocity_lsq(inliers, sigma);
    const std::vector<bool> previous = mask;
    count = classify(fit.velocity);
    if (mask == previous) break;
  }
  if (count < static_cast<std::size_t>(cfg.min_inliers)) throw NoConsensusError(count);

  RansacResult result;
  result.estimate = {cloud.t, fit.velocity, fit.covariance, count};
  result.inlier_mask.assign(cloud.points.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i) result.inlier_mask[origin[i]] = mask[i];
  return result;
}

double bearing_azimuth(const Vec3& mu) { return std::atan2(mu.y(), mu.x()); }

double bearing_elevation(const Vec3& mu) { return std::asin(std::clamp(mu.z(), -1.0, 1.0)); }

std::vector<DopplerPoint> select_spread_points(std::span<const DopplerPoint> inliers,
                                               const Vec3& v_hat, int n, double min_sep) {
  std::vector<std::size_t> order(inliers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(model_residual(inliers[a], v_hat)) < std::abs(model_residual(inliers[b], v_hat));
  });

  std::vector<DopplerPoint> kept;
  std::vector<std::pair<double, double>> angles;  // (azimuth, elevation) of kept points
  for (std::size_t idx : order) {
    if (static_cast<int>(kept.size()) >= n) break;
    const auto& p = inliers[idx];
    const double az = bearing_azimuth(p.bearing);
    const double el = bearing_elevation(p.bearing);
    const bool separated = std::all_of(angles.begin(), angles.end(), [&](const auto& k) {
      return std::abs(wrap_angle(az - k.first)) >= min_sep || std::abs(el - k.second) >= min_sep;
    });
    if (!separated) continue;
    kept.push_back(p);
    angles.emplace_back(az, el);
  }
  return kept;
}

std::vector<RadarDopplerMeasurement> cloud_to_doppler_measurements(const RadarPointCloud& cloud,
                                                                   const RansacConfig& cfg,
                                                                   double sigma) {
  RansacResult fit;
  try {
    fit = ransac_velocity(cloud, cfg, sigma);
  } catch (const NoConsensusError&) {
    return {};
  } catch (const DegenerateGeometryError&) {
    return {};
  }
  std::vector<DopplerPoint> inliers;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!fit.inlier_mask[i]) continue;
    inliers.push_back({*bearing_from_point(cloud.points[i].position), cloud.points[i].doppler});
  }
  const auto selected = select_spread_points(inliers, fit.estimate.velocity, cfg.subset_size,
                                             cfg.min_angular_separation);
  std::vector<RadarDopplerMeasurement> out;
  out.reserve(selected.size());
  for (const auto& p : selected) out.push_back({cloud.t, p.bearing, p.doppler, sigma});
  return out;
}

}  // namespace lrio
