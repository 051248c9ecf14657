#include "lrio/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace lrio {

namespace {

enum class Range { kAny, kPositive, kNonNegative, kFraction, kPositiveOrInf };

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  /// True if `n` is a mapping; reports keys outside `allowed`.
  bool mapping(const YAML::Node& n, const std::string& path, std::set<std::string> allowed) {
    if (!n.IsMap()) {
      fail(path, "expected a mapping");
      return false;
    }
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(join(path, key), "unknown key");
    }
    return true;
  }

  bool has(const YAML::Node& n, const char* key) const { return n.IsMap() && n[key]; }

  void number(const YAML::Node& n, const std::string& path, const char* key, double& out,
              Range range = Range::kAny) {
    if (!has(n, key)) return;
    const std::string p = join(path, key);
    double v = 0.0;
    try {
      v = n[key].as<double>();
    } catch (const YAML::Exception&) {
      fail(p, "expected a number");
      return;
    }
    if (!check(p, v, range)) return;
    out = v;
  }

  void integer(const YAML::Node& n, const std::string& path, const char* key, int& out, int min) {
    if (!has(n, key)) return;
    const std::string p = join(path, key);
    int v = 0;
    try {
      v = n[key].as<int>();
    } catch (const YAML::Exception&) {
      fail(p, "expected an integer");
      return;
    }
    if (v < min) {
      fail(p, "must be >= " + std::to_string(min));
      return;
    }
    out = v;
  }

  void unsigned64(const YAML::Node& n, const std::string& path, const char* key,
                  std::uint64_t& out) {
    if (!has(n, key)) return;
    try {
      out = n[key].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(join(path, key), "expected a non-negative integer");
    }
  }

  void boolean(const YAML::Node& n, const std::string& path, const char* key, bool& out) {
    if (!has(n, key)) return;
    try {
      out = n[key].as<bool>();
    } catch (const YAML::Exception&) {
      fail(join(path, key), "expected true or false");
    }
  }

  template <class E>
  void choice(const YAML::Node& n, const std::string& path, const char* key,
              const std::map<std::string, E>& options, E& out) {
    if (!has(n, key)) return;
    const std::string p = join(path, key);
    std::string v;
    try {
      v = n[key].as<std::string>();
    } catch (const YAML::Exception&) {
      fail(p, "expected a string");
      return;
    }
    const auto it = options.find(v);
    if (it == options.end()) {
      std::string allowed;
      for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + o.first;
      fail(p, "'" + v + "' is not one of {" + allowed + "}");
      return;
    }
    out = it->second;
  }

  std::optional<std::vector<double>> list(const YAML::Node& n, const std::string& p,
                                          std::size_t size) {
    if (!n.IsSequence() || (size != 0 && n.size() != size)) {
      fail(p, size ? "expected a list of " + std::to_string(size) + " numbers" : "expected a list");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& e : n) {
      try {
        out.push_back(e.as<double>());
      } catch (const YAML::Exception&) {
        fail(p, "expected numbers");
        return std::nullopt;
      }
      if (!std::isfinite(out.back())) {
        fail(p, "must be finite");
        return std::nullopt;
      }
    }
    return out;
  }

  void vec3(const YAML::Node& n, const std::string& path, const char* key, Vec3& out) {
    if (!has(n, key)) return;
    if (auto v = list(n[key], join(path, key), 3)) out = Vec3((*v)[0], (*v)[1], (*v)[2]);
  }

  void rigid(const YAML::Node& n, const std::string& path, const char* key, RigidTransform& out) {
    if (!has(n, key)) return;
    const std::string p = join(path, key);
    const YAML::Node m = n[key];
    if (!mapping(m, p, {"translation", "quaternion"})) return;
    Vec3 t = out.translation();
    vec3(m, p, "translation", t);
    Rotation r = out.rotation();
    if (m["quaternion"]) {
      if (auto q = list(m["quaternion"], join(p, "quaternion"), 4)) {
        try {
          r = Rotation::from_quaternion(Eigen::Quaterniond((*q)[0], (*q)[1], (*q)[2], (*q)[3]));
        } catch (const std::exception& e) {
          fail(join(p, "quaternion"), e.what());
        }
      }
    }
    out = RigidTransform(r, t);
  }

 private:
  bool check(const std::string& p, double v, Range range) {
    switch (range) {
      case Range::kAny:
        if (!std::isfinite(v)) return fail(p, "must be finite"), false;
        break;
      case Range::kPositive:
        if (!(v > 0.0) || !std::isfinite(v)) return fail(p, "must be > 0"), false;
        break;
      case Range::kNonNegative:
        if (!(v >= 0.0) || !std::isfinite(v)) return fail(p, "must be >= 0"), false;
        break;
      case Range::kFraction:
        if (!(v >= 0.0 && v <= 1.0)) return fail(p, "must be in [0, 1]"), false;
        break;
      case Range::kPositiveOrInf:
        if (!(v > 0.0)) return fail(p, "must be > 0 (.inf leaves it unconstrained)"), false;
        break;
    }
    return true;
  }
};

void read_trajectory(Reader& r, const YAML::Node& n, const std::string& p, TrajectorySpec& t) {
  if (!r.mapping(n, p, {"kind", "duration", "max_speed", "max_yaw_rate", "sample_rate", "ramp_time",
                        "rest_time", "scale", "loop_aspect", "waypoints"})) {
    return;
  }
  r.choice<TrajectoryKind>(n, p, "kind",
                           {{"figure_eight", TrajectoryKind::kFigureEight},
                            {"loop_track", TrajectoryKind::kLoopTrack},
                            {"waypoint_spline", TrajectoryKind::kWaypointSpline}},
                           t.kind);
  r.number(n, p, "duration", t.duration, Range::kPositive);
  r.number(n, p, "max_speed", t.max_speed, Range::kNonNegative);
  r.number(n, p, "max_yaw_rate", t.max_yaw_rate, Range::kPositive);
  r.number(n, p, "sample_rate", t.sample_rate, Range::kPositive);
  r.number(n, p, "ramp_time", t.ramp_time, Range::kPositive);
  r.number(n, p, "rest_time", t.rest_time, Range::kNonNegative);
  r.number(n, p, "scale", t.scale, Range::kNonNegative);
  r.number(n, p, "loop_aspect", t.loop_aspect, Range::kPositive);
  if (n["waypoints"]) {
    const std::string wp = join(p, "waypoints");
    if (!n["waypoints"].IsSequence() || n["waypoints"].size() < 3) {
      r.fail(wp, "expected a list of at least 3 [x, y] points");
    } else {
      t.waypoints.clear();
      for (const auto& e : n["waypoints"]) {
        if (auto v = r.list(e, wp, 2)) t.waypoints.emplace_back((*v)[0], (*v)[1]);
      }
    }
  }
}

void read_noise(Reader& r, const YAML::Node& n, const std::string& p, SensorNoiseSpec& s) {
  if (!r.mapping(n, p, {"imu", "radar", "cloud", "lo", "snap_to_imu"})) return;
  r.boolean(n, p, "snap_to_imu", s.snap_to_imu);
  if (n["imu"]) {
    const std::string q = join(p, "imu");
    const YAML::Node m = n["imu"];
    if (r.mapping(m, q, {"sigma_g", "sigma_a", "sigma_bg", "sigma_ba", "initial_bias_gyro",
                         "initial_bias_accel"})) {
      r.number(m, q, "sigma_g", s.imu.sigma_g, Range::kNonNegative);
      r.number(m, q, "sigma_a", s.imu.sigma_a, Range::kNonNegative);
      r.number(m, q, "sigma_bg", s.imu.sigma_bg, Range::kNonNegative);
      r.number(m, q, "sigma_ba", s.imu.sigma_ba, Range::kNonNegative);
      r.vec3(m, q, "initial_bias_gyro", s.imu.initial_bias_gyro);
      r.vec3(m, q, "initial_bias_accel", s.imu.initial_bias_accel);
    }
  }
  if (n["radar"]) {
    const std::string q = join(p, "radar");
    const YAML::Node m = n["radar"];
    if (r.mapping(m, q, {"enabled", "rate", "sigma_doppler", "reported_sigma", "beams",
                         "outlier_fraction", "outlier_offset"})) {
      r.boolean(m, q, "enabled", s.radar.enabled);
      r.number(m, q, "rate", s.radar.rate, Range::kPositive);
      r.number(m, q, "sigma_doppler", s.radar.sigma_doppler, Range::kNonNegative);
      r.number(m, q, "reported_sigma", s.radar.reported_sigma, Range::kPositive);
      r.number(m, q, "outlier_fraction", s.radar.outlier_fraction, Range::kFraction);
      r.number(m, q, "outlier_offset", s.radar.outlier_offset);
      if (m["beams"]) {
        const std::string b = join(q, "beams");
        if (!m["beams"].IsSequence() || m["beams"].size() == 0) {
          r.fail(b, "expected a non-empty list of [x, y, z] bearings");
        } else {
          s.radar.beams.clear();
          for (const auto& e : m["beams"]) {
            if (auto v = r.list(e, b, 3)) {
              const Vec3 mu((*v)[0], (*v)[1], (*v)[2]);
              if (!(mu.norm() > 0.0)) {
                r.fail(b, "bearing must be non-zero");
              } else {
                s.radar.beams.push_back(mu);
              }
            }
          }
        }
      }
    }
  }
  if (n["cloud"]) {
    const std::string q = join(p, "cloud");
    const YAML::Node m = n["cloud"];
    if (r.mapping(m, q, {"enabled", "rate", "points", "azimuth_fov", "elevation_fov", "min_range",
                         "max_range", "sigma_doppler", "outlier_fraction", "outlier_offset"})) {
      r.boolean(m, q, "enabled", s.cloud.enabled);
      r.number(m, q, "rate", s.cloud.rate, Range::kPositive);
      r.integer(m, q, "points", s.cloud.points, 1);
      r.number(m, q, "azimuth_fov", s.cloud.azimuth_fov, Range::kPositive);
      r.number(m, q, "elevation_fov", s.cloud.elevation_fov, Range::kNonNegative);
      r.number(m, q, "min_range", s.cloud.min_range, Range::kPositive);
      r.number(m, q, "max_range", s.cloud.max_range, Range::kPositive);
      r.number(m, q, "sigma_doppler", s.cloud.sigma_doppler, Range::kNonNegative);
      r.number(m, q, "outlier_fraction", s.cloud.outlier_fraction, Range::kFraction);
      r.number(m, q, "outlier_offset", s.cloud.outlier_offset);
      if (s.cloud.max_range < s.cloud.min_range) r.fail(join(q, "max_range"), "must be >= min_range");
    }
  }
  if (n["lo"]) {
    const std::string q = join(p, "lo");
    const YAML::Node m = n["lo"];
    if (r.mapping(m, q, {"enabled", "rate", "sigma_xy", "sigma_else", "warmup", "mode"})) {
      r.boolean(m, q, "enabled", s.lo.enabled);
      r.number(m, q, "rate", s.lo.rate, Range::kPositive);
      r.number(m, q, "sigma_xy", s.lo.sigma_xy, Range::kNonNegative);
      r.number(m, q, "sigma_else", s.lo.sigma_else, Range::kNonNegative);
      r.number(m, q, "warmup", s.lo.warmup, Range::kNonNegative);
      r.choice<LoNoiseMode>(m, q, "mode",
                            {{"constant", LoNoiseMode::kConstant},
                             {"velocity", LoNoiseMode::kVelocity}},
                            s.lo.mode);
    }
  }
}

void read_rig(Reader& r, const YAML::Node& n, const std::string& p, SensorRig& rig) {
  if (!r.mapping(n, p, {"radar", "lidar", "gravity"})) return;
  r.rigid(n, p, "radar", rig.imu_from_radar);
  r.rigid(n, p, "lidar", rig.imu_from_lidar);
  r.vec3(n, p, "gravity", rig.gravity);
}

void read_smoother(Reader& r, const YAML::Node& n, const std::string& p, SmootherConfig& s) {
  if (!r.mapping(n, p, {"lag", "max_solver_iterations", "convergence_tol", "lm_initial_lambda",
                        "lm_max_lambda", "imu_rate", "gap_factor", "huber_delta", "max_doppler",
                        "doppler_resolution", "imu_noise", "initial_prior", "gap_prior"})) {
    return;
  }
  r.number(n, p, "lag", s.lag, Range::kPositive);
  r.integer(n, p, "max_solver_iterations", s.max_solver_iterations, 1);
  r.number(n, p, "convergence_tol", s.convergence_tol, Range::kPositive);
  r.number(n, p, "lm_initial_lambda", s.lm_initial_lambda, Range::kPositive);
  r.number(n, p, "lm_max_lambda", s.lm_max_lambda, Range::kPositive);
  r.number(n, p, "imu_rate", s.imu_rate, Range::kPositive);
  r.number(n, p, "gap_factor", s.gap_factor, Range::kPositive);
  if (!(s.gap_factor > 1.0)) r.fail(join(p, "gap_factor"), "must be > 1");
  r.number(n, p, "huber_delta", s.huber_delta, Range::kPositive);
  r.number(n, p, "max_doppler", s.max_doppler, Range::kPositive);
  r.number(n, p, "doppler_resolution", s.doppler_resolution, Range::kNonNegative);
  if (n["imu_noise"]) {
    const std::string q = join(p, "imu_noise");
    const YAML::Node m = n["imu_noise"];
    if (r.mapping(m, q, {"sigma_g", "sigma_a", "sigma_bg", "sigma_ba", "sigma_integration"})) {
      r.number(m, q, "sigma_g", s.imu_noise.sigma_g, Range::kPositive);
      r.number(m, q, "sigma_a", s.imu_noise.sigma_a, Range::kPositive);
      r.number(m, q, "sigma_bg", s.imu_noise.sigma_bg, Range::kPositive);
      r.number(m, q, "sigma_ba", s.imu_noise.sigma_ba, Range::kPositive);
      r.number(m, q, "sigma_integration", s.imu_noise.sigma_integration, Range::kNonNegative);
    }
  }
  if (n["initial_prior"]) {
    const std::string q = join(p, "initial_prior");
    const YAML::Node m = n["initial_prior"];
    if (r.mapping(m, q, {"rotation", "position", "velocity", "bias_gyro", "bias_accel"})) {
      r.number(m, q, "rotation", s.initial_prior.rotation, Range::kPositiveOrInf);
      r.number(m, q, "position", s.initial_prior.position, Range::kPositiveOrInf);
      r.number(m, q, "velocity", s.initial_prior.velocity, Range::kPositiveOrInf);
      r.number(m, q, "bias_gyro", s.initial_prior.bias_gyro, Range::kPositiveOrInf);
      r.number(m, q, "bias_accel", s.initial_prior.bias_accel, Range::kPositiveOrInf);
    }
  }
  if (n["gap_prior"]) {
    const std::string q = join(p, "gap_prior");
    const YAML::Node m = n["gap_prior"];
    if (r.mapping(m, q, {"rotation", "position", "velocity"})) {
      r.number(m, q, "rotation", s.gap_prior.rotation, Range::kPositiveOrInf);
      r.number(m, q, "position", s.gap_prior.position, Range::kPositiveOrInf);
      r.number(m, q, "velocity", s.gap_prior.velocity, Range::kPositiveOrInf);
    }
  }
}

void read_estimator(Reader& r, const YAML::Node& n, const std::string& p, EstimatorConfig& e) {
  if (!r.mapping(n, p, {"mode", "smoother", "lo_sigma", "radar_format", "optimize_rate",
                        "output_decimation", "ransac", "cloud_sigma"})) {
    return;
  }
  enum class Mode { kLri, kLi, kRi };
  Mode mode = Mode::kLri;
  r.choice<Mode>(n, p, "mode", {{"lri", Mode::kLri}, {"li", Mode::kLi}, {"ri", Mode::kRi}}, mode);
  e.smoother.use_lo = mode != Mode::kRi;
  e.smoother.use_radar = mode != Mode::kLi;
  if (n["smoother"]) read_smoother(r, n["smoother"], join(p, "smoother"), e.smoother);
  if (n["lo_sigma"]) {
    const std::string q = join(p, "lo_sigma");
    const YAML::Node m = n["lo_sigma"];
    if (r.mapping(m, q, {"rotation", "translation", "z"})) {
      double rot = e.lo_sigma[0], trans = e.lo_sigma[3];
      r.number(m, q, "rotation", rot, Range::kPositive);
      r.number(m, q, "translation", trans, Range::kPositive);
      double z = trans;
      r.number(m, q, "z", z, Range::kPositive);
      e.lo_sigma << rot, rot, rot, trans, trans, z;
    }
  }
  r.choice<RadarFormat>(n, p, "radar_format",
                        {{"auto", RadarFormat::kAuto},
                         {"doppler_csv", RadarFormat::kDopplerCsv},
                         {"cloud_jsonl", RadarFormat::kCloudJsonl}},
                        e.radar_format);
  r.number(n, p, "optimize_rate", e.optimize_rate, Range::kPositive);
  r.integer(n, p, "output_decimation", e.output_decimation, 1);
  r.number(n, p, "cloud_sigma", e.cloud_sigma, Range::kPositive);
  if (n["ransac"]) {
    const std::string q = join(p, "ransac");
    const YAML::Node m = n["ransac"];
    if (r.mapping(m, q, {"max_iterations", "inlier_threshold", "subset_size",
                         "min_angular_separation", "min_inliers", "seed"})) {
      r.integer(m, q, "max_iterations", e.ransac.max_iterations, 1);
      r.number(m, q, "inlier_threshold", e.ransac.inlier_threshold, Range::kPositive);
      r.integer(m, q, "subset_size", e.ransac.subset_size, 3);
      r.number(m, q, "min_angular_separation", e.ransac.min_angular_separation,
               Range::kNonNegative);
      r.integer(m, q, "min_inliers", e.ransac.min_inliers, 3);
      r.unsigned64(m, q, "seed", e.ransac.rng_seed);
    }
  }
}

void read_evaluation(Reader& r, const YAML::Node& n, const std::string& p, EvaluationConfig& e) {
  if (!r.mapping(n, p, {"alignment", "rpe_deltas"})) return;
  r.choice<Alignment>(n, p, "alignment",
                      {{"none", Alignment::kNone}, {"se3_umeyama", Alignment::kSe3Umeyama}},
                      e.alignment);
  if (n["rpe_deltas"]) {
    const std::string q = join(p, "rpe_deltas");
    if (auto v = r.list(n["rpe_deltas"], q, 0)) {
      e.rpe_deltas = *v;
      for (double d : e.rpe_deltas) {
        if (!(d > 0.0)) r.fail(q, "deltas must be > 0");
      }
    }
  }
}

std::string summarize(const std::vector<std::string>& errors) {
  std::ostringstream os;
  os << errors.size() << " config error" << (errors.size() == 1 ? "" : "s") << ":";
  for (const auto& e : errors) os << "\n  " << e;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(summarize(errors)), errors_(std::move(errors)) {}

RunConfig parse_run_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError({std::string("yaml: ") + e.what()});
  }
  Reader r;
  RunConfig cfg;
  if (!r.mapping(root, "config", {"seed", "dataset", "scenario", "estimator", "evaluation"})) {
    throw ConfigError(r.errors);
  }
  r.unsigned64(root, "", "seed", cfg.seed);
  if (root["dataset"]) {
    try {
      std::filesystem::path d = root["dataset"].as<std::string>();
      cfg.dataset = d.is_absolute() ? d : base_dir / d;
    } catch (const YAML::Exception&) {
      r.fail("dataset", "expected a path string");
    }
  }
  bool imu_rate_given = false;
  if (root["scenario"]) {
    const YAML::Node s = root["scenario"];
    ScenarioConfig sc;
    if (r.mapping(s, "scenario", {"trajectory", "noise", "rig"})) {
      if (s["trajectory"]) read_trajectory(r, s["trajectory"], "scenario.trajectory", sc.trajectory);
      if (s["noise"]) read_noise(r, s["noise"], "scenario.noise", sc.noise);
      if (s["rig"]) read_rig(r, s["rig"], "scenario.rig", sc.rig);
    }
    cfg.scenario = sc;
  }
  if (root["estimator"]) {
    read_estimator(r, root["estimator"], "estimator", cfg.estimator);
    const YAML::Node sm = root["estimator"]["smoother"];
    imu_rate_given = sm && sm.IsMap() && sm["imu_rate"];
  }
  if (root["evaluation"]) read_evaluation(r, root["evaluation"], "evaluation", cfg.evaluation);
  if (!cfg.scenario && !cfg.dataset) r.fail("config", "needs a scenario or a dataset");
  if (cfg.scenario && !imu_rate_given) {
    cfg.estimator.smoother.imu_rate = cfg.scenario->trajectory.sample_rate;
  }
  if (cfg.scenario) cfg.scenario->noise.seed = cfg.seed;
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError({file.string() + ": cannot open"});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), file.parent_path());
}

}  // namespace lrio
