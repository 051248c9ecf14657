#include "lrio/simulator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lrio {

namespace {

enum Stream : std::uint64_t { kImuStream = 1, kRadarStream, kCloudStream, kLoStream };

void require_nonnegative(double v, const std::string& name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(name + " must be >= 0");
}

void require_positive(double v, const std::string& name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(name + " must be > 0");
}

Vec3 gaussian3(Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return sigma * Vec3(x, y, z);
}

/// Sensor stamps at `rate` over the trajectory duration, optionally rounded to
/// the IMU grid. Duplicates after rounding are dropped.
std::vector<Timestamp> sensor_stamps(double duration, double rate, double imu_rate, bool snap) {
  std::vector<Timestamp> out;
  const auto n = static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
  for (std::size_t j = 0; j <= n; ++j) {
    const double t = static_cast<double>(j) / rate;
    const Timestamp ts = snap ? from_seconds(std::round(t * imu_rate) / imu_rate) : from_seconds(t);
    if (ts > from_seconds(duration)) break;
    if (!out.empty() && ts <= out.back()) continue;
    out.push_back(ts);
  }
  return out;
}

Vec3 radar_velocity(const TruthSample& s, const SensorRig& rig) {
  const Vec3 body = s.pose.rotation().inverse() * s.velocity +
                    s.angular_velocity.cross(rig.imu_from_radar.translation());
  return rig.imu_from_radar.rotation().inverse() * body;
}

}  // namespace

void SensorNoiseSpec::validate() const {
  require_nonnegative(imu.sigma_g, "noise.imu.sigma_g");
  require_nonnegative(imu.sigma_a, "noise.imu.sigma_a");
  require_nonnegative(imu.sigma_bg, "noise.imu.sigma_bg");
  require_nonnegative(imu.sigma_ba, "noise.imu.sigma_ba");
  require_positive(radar.rate, "noise.radar.rate");
  require_nonnegative(radar.sigma_doppler, "noise.radar.sigma_doppler");
  require_positive(radar.reported_sigma, "noise.radar.reported_sigma");
  if (!(radar.outlier_fraction >= 0.0 && radar.outlier_fraction <= 1.0)) {
    throw std::invalid_argument("noise.radar.outlier_fraction must be in [0, 1]");
  }
  for (const auto& b : radar.beams) {
    if (!(b.norm() > 0.0)) throw std::invalid_argument("noise.radar.beams must be non-zero");
  }
  require_positive(cloud.rate, "noise.cloud.rate");
  if (cloud.points < 1) throw std::invalid_argument("noise.cloud.points must be >= 1");
  require_positive(cloud.azimuth_fov, "noise.cloud.azimuth_fov");
  require_nonnegative(cloud.elevation_fov, "noise.cloud.elevation_fov");
  require_positive(cloud.min_range, "noise.cloud.min_range");
  if (!(cloud.max_range >= cloud.min_range)) {
    throw std::invalid_argument("noise.cloud.max_range must be >= min_range");
  }
  require_nonnegative(cloud.sigma_doppler, "noise.cloud.sigma_doppler");
  if (!(cloud.outlier_fraction >= 0.0 && cloud.outlier_fraction <= 1.0)) {
    throw std::invalid_argument("noise.cloud.outlier_fraction must be in [0, 1]");
  }
  require_positive(lo.rate, "noise.lo.rate");
  require_nonnegative(lo.sigma_xy, "noise.lo.sigma_xy");
  require_nonnegative(lo.sigma_else, "noise.lo.sigma_else");
  require_nonnegative(lo.warmup, "noise.lo.warmup");
}

std::vector<Vec3> default_radar_beams() {
  const double d = std::numbers::pi / 180.0;
  const std::pair<double, double> az_el[] = {
      {0.0, 0.0}, {10.0 * d, 5.0 * d}, {-10.0 * d, 5.0 * d}, {6.0 * d, -5.0 * d},
      {-6.0 * d, -5.0 * d}};
  std::vector<Vec3> beams;
  for (const auto& [az, el] : az_el) {
    beams.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  }
  return beams;
}

SensorRig default_sensor_rig() {
  SensorRig rig;
  rig.imu_from_radar = RigidTransform(Rotation(), Vec3(1.2, 0.0, 0.4));
  rig.imu_from_lidar = RigidTransform(Rotation(), Vec3(0.0, 0.0, 0.3));
  return rig;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x6c72696fU};
  return Rng(seq);
}

ImuSynthesis synth_imu(const Trajectory& trajectory, const std::vector<TruthSample>& truth,
                       const ImuSimSpec& spec, const Vec3& gravity, Rng& rng) {
  const double dt = 1.0 / trajectory.spec().sample_rate;
  const double sqrt_dt = std::sqrt(dt);
  ImuSynthesis out;
  out.measurements.reserve(truth.size());
  Vec3 bg = spec.initial_bias_gyro;
  Vec3 ba = spec.initial_bias_accel;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const TruthSample& a = truth[k];
    const TruthSample b =
        k + 1 < truth.size() ? truth[k + 1] : trajectory.at(to_seconds(a.t) + dt);
    const double h = to_seconds(b.t - a.t);
    const Vec3 omega = (a.pose.rotation().inverse() * b.pose.rotation()).log() / h;
    const Vec3 accel = a.pose.rotation().inverse() * Vec3((b.velocity - a.velocity) / h - gravity);

    ImuMeasurement m;
    m.t = a.t;
    m.angular_velocity = omega + bg + gaussian3(rng, spec.sigma_g / sqrt_dt);
    m.linear_acceleration = accel + ba + gaussian3(rng, spec.sigma_a / sqrt_dt);
    out.measurements.push_back(m);
    out.bias_gyro.push_back(bg);
    out.bias_accel.push_back(ba);

    bg += gaussian3(rng, spec.sigma_bg * sqrt_dt);
    ba += gaussian3(rng, spec.sigma_ba * sqrt_dt);
  }
  return out;
}

std::vector<RadarDopplerMeasurement> synth_radar(const Trajectory& trajectory,
                                                 const RadarSimSpec& spec, const SensorRig& rig,
                                                 double imu_rate, bool snap, Rng& rng) {
  std::vector<Vec3> beams = spec.beams.empty() ? default_radar_beams() : spec.beams;
  for (auto& b : beams) b.normalize();
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<RadarDopplerMeasurement> out;
  for (Timestamp t : sensor_stamps(trajectory.spec().duration, spec.rate, imu_rate, snap)) {
    const Vec3 v_r = radar_velocity(trajectory.at(to_seconds(t)), rig);
    for (const auto& mu : beams) {
      double doppler = -mu.dot(v_r) + spec.sigma_doppler * noise(rng);
      if (unit(rng) < spec.outlier_fraction) doppler += spec.outlier_offset;
      out.push_back({t, mu, doppler, spec.reported_sigma});
    }
  }
  return out;
}

std::vector<RadarPointCloud> synth_radar_clouds(const Trajectory& trajectory,
                                                const CloudSimSpec& spec, const SensorRig& rig,
                                                double imu_rate, bool snap, Rng& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> az(-spec.azimuth_fov, spec.azimuth_fov);
  std::uniform_real_distribution<double> el(-spec.elevation_fov, spec.elevation_fov);
  std::uniform_real_distribution<double> range(spec.min_range, spec.max_range);
  std::vector<RadarPointCloud> out;
  for (Timestamp t : sensor_stamps(trajectory.spec().duration, spec.rate, imu_rate, snap)) {
    const Vec3 v_r = radar_velocity(trajectory.at(to_seconds(t)), rig);
    RadarPointCloud cloud;
    cloud.t = t;
    cloud.points.reserve(static_cast<std::size_t>(spec.points));
    for (int i = 0; i < spec.points; ++i) {
      const double a = az(rng);
      const double e = el(rng);
      const double r = range(rng);
      const Vec3 mu(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
      double doppler = -mu.dot(v_r) + spec.sigma_doppler * noise(rng);
      if (unit(rng) < spec.outlier_fraction) doppler += spec.outlier_offset;
      cloud.points.push_back({r * mu, doppler});
    }
    out.push_back(std::move(cloud));
  }
  return out;
}

RigidTransform inject_pose_noise(const RigidTransform& pose, const Vec6& sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec6 eps;
  for (int i = 0; i < 6; ++i) eps[i] = n(rng);
  return pose * RigidTransform::exp(sigma.cwiseProduct(eps));
}

std::vector<LoPoseMeasurement> synth_lo(const Trajectory& trajectory, const LoSimSpec& spec,
                                        double imu_rate, bool snap, Rng& rng) {
  std::vector<LoPoseMeasurement> out;
  for (Timestamp t : sensor_stamps(trajectory.spec().duration, spec.rate, imu_rate, snap)) {
    const TruthSample s = trajectory.at(to_seconds(t));
    double sxy = spec.sigma_else;
    if (to_seconds(t) >= spec.warmup) {
      sxy = spec.mode == LoNoiseMode::kVelocity ? std::sqrt(s.velocity.norm()) : spec.sigma_xy;
    }
    Vec6 sigma;
    sigma << Vec3::Constant(spec.sigma_else), sxy, sxy, spec.sigma_else;
    LoPoseMeasurement m;
    m.t = t;
    m.pose = inject_pose_noise(s.pose, sigma, rng);
    out.push_back(m);
  }
  return out;
}

SimulatedRun simulate(const TrajectorySpec& trajectory_spec, const SensorNoiseSpec& noise,
                      const SensorRig& rig) {
  noise.validate();
  const Trajectory trajectory(trajectory_spec);
  const std::vector<TruthSample> truth = trajectory.sample();
  const double imu_rate = trajectory_spec.sample_rate;

  SimulatedRun run;
  run.data.rig = rig;
  Rng imu_rng = make_rng(noise.seed, kImuStream);
  ImuSynthesis imu = synth_imu(trajectory, truth, noise.imu, rig.gravity, imu_rng);
  run.data.imu = std::move(imu.measurements);
  run.truth.reserve(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    NavState s;
    s.pose = truth[k].pose;
    s.velocity = truth[k].velocity;
    s.bias_gyro = imu.bias_gyro[k];
    s.bias_accel = imu.bias_accel[k];
    run.truth.push_back({truth[k].t, s});
  }
  if (noise.radar.enabled) {
    Rng rng = make_rng(noise.seed, kRadarStream);
    run.data.radar = synth_radar(trajectory, noise.radar, rig, imu_rate, noise.snap_to_imu, rng);
  }
  if (noise.cloud.enabled) {
    Rng rng = make_rng(noise.seed, kCloudStream);
    run.data.radar_clouds =
        synth_radar_clouds(trajectory, noise.cloud, rig, imu_rate, noise.snap_to_imu, rng);
  }
  if (noise.lo.enabled) {
    Rng rng = make_rng(noise.seed, kLoStream);
    run.data.lo = synth_lo(trajectory, noise.lo, imu_rate, noise.snap_to_imu, rng);
  }
  return run;
}

}  // namespace lrio
