#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "lrio/types.hpp"

namespace lrio {

struct RansacConfig {
  int max_iterations = 100;
  double inlier_threshold = 0.2;  // m/s
  int min_inliers = 10;
  int subset_size = 20;                            // N points kept per scan
  double min_angular_separation = 0.034906585039886591;  // 2 deg, rad
  std::uint64_t rng_seed = 42;

  /// Throws std::invalid_argument on an invalid configuration.
  void validate() const;
};

struct DopplerPoint {
  Vec3 bearing;    // unit, radar frame
  double doppler;  // m/s
};

struct VelocityFit {
  Vec3 velocity = Vec3::Zero();  // radar frame, m/s
  Mat3 covariance = Mat3::Zero();
};

/// Bearings do not span 3-D; `null_direction` is the unobservable axis.
class DegenerateGeometryError : public std::runtime_error {
 public:
  explicit DegenerateGeometryError(const Vec3& null_direction);
  const Vec3& null_direction() const { return null_direction_; }

 private:
  Vec3 null_direction_;
};

class NoConsensusError : public std::runtime_error {
 public:
  explicit NoConsensusError(std::size_t consensus);
  std::size_t consensus() const { return consensus_; }

 private:
  std::size_t consensus_;
};

/// Least-squares radar velocity from doppler = -mu^T v over all points.
/// covariance = sigma^2 (A^T A)^-1. Throws std::invalid_argument for fewer
/// than 3 points and DegenerateGeometryError when cond(A) >= 1e6.
VelocityFit solve_velocity_lsq(std::span<const DopplerPoint> points, double sigma = 1.0);

struct RadarVelocityEstimate {
  Timestamp t = 0;
  Vec3 velocity = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  std::size_t inlier_count = 0;
};

struct RansacResult {
  RadarVelocityEstimate estimate;
  std::vector<bool> inlier_mask;  // one entry per cloud point
};

/// Robust velocity of the static part of the scene. Points within the
/// minimum radar range are never inliers. The returned mask is exactly the
/// set |doppler + mu^T v| <= inlier_threshold at the returned velocity.
/// Bit-reproducible for a given seed.
RansacResult ransac_velocity(const RadarPointCloud& cloud, const RansacConfig& cfg,
                             double sigma = kDefaultDopplerResolution);

/// Azimuth atan2(mu_y, mu_x) and elevation asin(mu_z) of a unit bearing.
double bearing_azimuth(const Vec3& mu);
double bearing_elevation(const Vec3& mu);

/// Greedy FoV-spread subset: candidates are visited by ascending residual
/// w.r.t. `v_hat` and kept unless some already kept point lies closer than
/// `min_sep` in both azimuth and elevation. Stops after `n` points.
std::vector<DopplerPoint> select_spread_points(std::span<const DopplerPoint> inliers,
                                               const Vec3& v_hat, int n, double min_sep);

/// Cloud front-end: RANSAC, then spread selection. Each selected point
/// becomes one radial-speed measurement with the given sigma. Returns an
/// empty list when the scan has no static consensus or degenerate geometry.
std::vector<RadarDopplerMeasurement> cloud_to_doppler_measurements(const RadarPointCloud& cloud,
                                                                   const RansacConfig& cfg,
                                                                   double sigma);

}  // namespace lrio
