#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lrio/ego_velocity.hpp"
#include "lrio/pipeline.hpp"
#include "lrio/simulator.hpp"
#include "lrio/smoother.hpp"

namespace py = pybind11;
using namespace lrio;

namespace {

// Poses cross the boundary as 4x4 homogeneous matrices.
RigidTransform pose_from_matrix(const Mat4& m) {
  return RigidTransform(Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>());
}

py::dict state_dict(const StateSample& s) {
  py::dict d;
  d["t"] = s.t;
  d["pose"] = s.state.pose.matrix();
  d["velocity"] = s.state.velocity;
  d["bias_gyro"] = s.state.bias_gyro;
  d["bias_accel"] = s.state.bias_accel;
  return d;
}

const char* status_name(AttachResult::Status s) {
  switch (s) {
    case AttachResult::Status::kAttached: return "attached";
    case AttachResult::Status::kDeferred: return "deferred";
    case AttachResult::Status::kExpired: return "expired";
    case AttachResult::Status::kRejected: return "rejected";
    case AttachResult::Status::kIgnored: break;
  }
  return "ignored";
}

RunConfig load_with_seed(const std::filesystem::path& config, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_run_config(config);
  if (seed) apply_seed(cfg, *seed);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_lrio, m) {
  m.doc() = "Fixed-lag radar/IMU/LiDAR-odometry smoother";

  py::register_exception<DegenerateGeometryError>(m, "DegenerateGeometryError", PyExc_ValueError);
  py::register_exception<NoConsensusError>(m, "NoConsensusError", PyExc_RuntimeError);
  py::register_exception<NonFiniteCostError>(m, "NonFiniteCostError", PyExc_FloatingPointError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);

  m.def("so3_exp", [](const Vec3& tau) { return exp_rot(tau).matrix(); }, py::arg("tau"));
  m.def("so3_log", [](const Mat3& r) { return log_rot(Rotation::from_matrix(r)); }, py::arg("R"));
  m.def("se3_exp", [](const Vec6& xi) { return exp_se3(xi).matrix(); }, py::arg("xi"),
        "xi = [rotation; translation]");
  m.def("se3_log", [](const Mat4& t) { return log_se3(pose_from_matrix(t)); }, py::arg("T"));

  m.def(
      "ransac_velocity",
      [](const Eigen::Matrix<double, Eigen::Dynamic, 3>& positions, const Eigen::VectorXd& doppler,
         double sigma, std::uint64_t seed, double inlier_threshold) {
        if (positions.rows() != doppler.size()) {
          throw std::invalid_argument("positions and doppler differ in length");
        }
        RadarPointCloud cloud;
        for (Eigen::Index i = 0; i < positions.rows(); ++i) {
          cloud.points.push_back({positions.row(i).transpose(), doppler[i]});
        }
        RansacConfig cfg;
        cfg.rng_seed = seed;
        cfg.inlier_threshold = inlier_threshold;
        const RansacResult r = ransac_velocity(cloud, cfg, sigma);
        return py::make_tuple(r.estimate.velocity, r.estimate.covariance, r.inlier_mask);
      },
      py::arg("positions"), py::arg("doppler"), py::arg("sigma") = kDefaultDopplerResolution,
      py::arg("seed") = 42, py::arg("inlier_threshold") = 0.2,
      "Radar-frame velocity of the static scene. Returns (velocity, covariance, inlier_mask).");

  py::class_<SmootherConfig>(m, "SmootherConfig")
      .def(py::init<>())
      .def_readwrite("lag", &SmootherConfig::lag)
      .def_readwrite("max_solver_iterations", &SmootherConfig::max_solver_iterations)
      .def_readwrite("convergence_tol", &SmootherConfig::convergence_tol)
      .def_readwrite("imu_rate", &SmootherConfig::imu_rate)
      .def_readwrite("huber_delta", &SmootherConfig::huber_delta)
      .def_readwrite("use_radar", &SmootherConfig::use_radar)
      .def_readwrite("use_lo", &SmootherConfig::use_lo);

  py::class_<FixedLagSmoother>(m, "FixedLagSmoother")
      .def(py::init([](const SmootherConfig& cfg) { return FixedLagSmoother(cfg, default_sensor_rig()); }),
           py::arg("config") = SmootherConfig{})
      .def("set_initial_pose",
           [](FixedLagSmoother& s, const Mat4& pose) { s.set_initial_pose(pose_from_matrix(pose)); })
      .def("add_imu",
           [](FixedLagSmoother& s, Timestamp t, const Vec3& gyro, const Vec3& accel) {
             return s.add_imu({t, gyro, accel});
           },
           py::arg("t"), py::arg("gyro"), py::arg("accel"))
      .def("add_radar",
           [](FixedLagSmoother& s, Timestamp t, const Vec3& bearing, double radial_speed,
              double sigma) {
             return status_name(s.add_radar({t, bearing.normalized(), radial_speed, sigma}).status);
           },
           py::arg("t"), py::arg("bearing"), py::arg("radial_speed"),
           py::arg("sigma") = kDefaultDopplerResolution)
      .def("add_lo",
           [](FixedLagSmoother& s, Timestamp t, const Mat4& pose, const Vec6& sigma) {
             return status_name(s.add_lo({t, pose_from_matrix(pose), sigma}).status);
           },
           py::arg("t"), py::arg("pose"), py::arg("sigma"))
      .def("optimize",
           [](FixedLagSmoother& s) {
             const OptimizeReport r = s.optimize();
             py::dict d;
             d["iterations"] = r.iterations;
             d["converged"] = r.converged;
             d["cost_trace"] = r.cost_trace;
             d["nodes"] = r.nodes;
             return d;
           })
      .def("slide_window", &FixedLagSmoother::slide_window, py::arg("now"))
      .def("window_states",
           [](const FixedLagSmoother& s) {
             py::list out;
             for (const auto& x : s.window_states()) out.append(state_dict(x));
             return out;
           })
      .def("take_finalized",
           [](FixedLagSmoother& s) {
             py::list out;
             for (const auto& x : s.take_finalized()) out.append(state_dict(x));
             return out;
           })
      .def("cost", &FixedLagSmoother::cost)
      .def_property_readonly("window_size", &FixedLagSmoother::window_size);

  m.def(
      "simulate",
      [](const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) { simulate_to(load_with_seed(config, seed), out); },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none());
  m.def(
      "estimate",
      [](const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) {
        const EstimateResult r = estimate_to(load_with_seed(config, seed), out);
        py::dict d;
        d["nodes"] = r.nodes;
        d["diverged"] = r.diverged;
        d["mean_wall_ms"] = r.mean_wall_ms();
        return d;
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none());
  m.def(
      "evaluate",
      [](const std::filesystem::path& config, const std::filesystem::path& out) {
        return evaluate_to(load_run_config(config), out);
      },
      py::arg("config"), py::arg("out"));
  m.def(
      "run",
      [](const std::filesystem::path& config, const std::filesystem::path& out,
         std::optional<std::uint64_t> seed) {
        const RunConfig cfg = load_with_seed(config, seed);
        if (cfg.scenario) simulate_to(cfg, out);
        estimate_to(cfg, out);
        return evaluate_to(cfg, out);
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
      "Simulate (when the config has a scenario), estimate and evaluate. Returns the metrics.");
}
