// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any hard criterion fails; throughput (10) only reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "lrio/ego_velocity.hpp"
#include "lrio/imu_factor.hpp"
#include "lrio/lo_factor.hpp"
#include "lrio/pipeline.hpp"
#include "lrio/radar_factor.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lrio;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

const fs::path kScenarios = LRIO_SCENARIO_DIR;

// ---------------------------------------------------------------- 1
Outcome jacobians() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const int n = 1000;
  int bad_radar = 0, bad_imu = 0, bad_lo = 0;
  double worst = -1e300;
  auto check = [&](double excess, int& bad) {
    worst = std::max(worst, excess);
    if (excess > 0.0) ++bad;
  };
  for (int i = 0; i < n; ++i) {
    const NavState x = testing::random_state(rng);
    RadarExtrinsics ext;
    ext.radar_from_imu = testing::random_rotation(rng);
    ext.lever_arm = testing::random_vec(rng, 2.0);
    const RadarRadialSpeedFactor f(0, testing::random_vec(rng, 1.0).normalized(),
                                   std::uniform_real_distribution<double>(-20, 20)(rng),
                                   testing::random_vec(rng, 1.5), ext, 0.17, 0.5);
    const auto N = testing::numeric_jacobian<1>(
        [&](const NavState& s) { return Eigen::Matrix<double, 1, 1>(radial_speed_residual(s, f)); },
        x);
    check(testing::tolerance_excess(radial_speed_jacobians(x, f).full(), N, 1e-5, 1e-8), bad_radar);
  }
  for (int i = 0; i < n; ++i) {
    const NavState xi = testing::random_state(rng);
    ImuFactor f;
    f.measurement.angular_velocity = testing::random_vec(rng, 2.0);
    f.measurement.linear_acceleration = testing::random_vec(rng, 15.0);
    f.dt = std::uniform_real_distribution<double>(1e-3, 0.05)(rng);
    Vec15 d;
    d << testing::random_vec(rng, 0.3), testing::random_vec(rng, 0.5),
        testing::random_vec(rng, 0.5), testing::random_vec(rng, 0.01),
        testing::random_vec(rng, 0.1);
    const NavState xj = propagate(xi, f.measurement, f.dt, f.gravity).retract(d);
    const ImuJacobians J = imu_jacobians(xi, xj, f);
    const auto Ni = testing::numeric_jacobian<9>(
        [&](const NavState& s) { return imu_residual(s, xj, f); }, xi);
    const auto Nj = testing::numeric_jacobian<9>(
        [&](const NavState& s) { return imu_residual(xi, s, f); }, xj);
    check(std::max(testing::tolerance_excess(J.d_state_i, Ni, 1e-5, 1e-8),
                   testing::tolerance_excess(J.d_state_j, Nj, 1e-5, 1e-8)),
          bad_imu);
  }
  for (int i = 0; i < n; ++i) {
    const NavState x = testing::random_state(rng);
    Vec6 xi;
    xi << testing::random_vec(rng, 1.0), testing::random_vec(rng, 3.0);
    const LoPoseFactor f{0, x.pose * exp_se3(xi), Vec6::Constant(0.1)};
    const auto N =
        testing::numeric_jacobian<6>([&](const NavState& s) { return lo_residual(s, f); }, x);
    check(testing::tolerance_excess(lo_jacobian(x, f), N, 1e-5, 1e-8), bad_lo);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = bad_radar == 0 && bad_imu == 0 && bad_lo == 0 && secs < 10.0;
  o.detail = "mismatches radar/imu/lo = " + std::to_string(bad_radar) + "/" +
             std::to_string(bad_imu) + "/" + std::to_string(bad_lo) + " of " +
             std::to_string(n) + " each; worst excess " + fmt(worst) + "; " + fmt(secs, 3) +
             " s (limit 10 s)";
  return o;
}

// ---------------------------------------------------------------- 2
Outcome radar_zero_blocks() {
  std::mt19937_64 rng(77);
  int nonzero = 0, changed = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    NavState x = testing::random_state(rng);
    RadarExtrinsics ext;
    ext.radar_from_imu = testing::random_rotation(rng);
    ext.lever_arm = testing::random_vec(rng, 2.0);
    const RadarRadialSpeedFactor f(0, testing::random_vec(rng, 1.0).normalized(), 4.0,
                                   testing::random_vec(rng, 1.0), ext, 0.17, 0.5);
    const Row15 J = radial_speed_jacobians(x, f).full();
    for (int c = 0; c < 3; ++c) {
      if (J[block::kPos + c] != 0.0 || J[block::kBiasAccel + c] != 0.0) ++nonzero;
    }
    const double r0 = radial_speed_residual(x, f);
    x.pose = RigidTransform(x.pose.rotation(), x.pose.translation() + testing::random_vec(rng, 1e4));
    if (radial_speed_residual(x, f) != r0) ++changed;
  }
  return {nonzero == 0 && changed == 0,
          "nonzero position/accel-bias entries " + std::to_string(nonzero) +
              ", residuals changed by position shift " + std::to_string(changed) + " of " +
              std::to_string(n)};
}

// ---------------------------------------------------------------- 3
Outcome ransac_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> az(-70 * M_PI / 180, 70 * M_PI / 180);
  std::uniform_real_distribution<double> el(-30 * M_PI / 180, 30 * M_PI / 180);
  std::uniform_real_distribution<double> rng_range(3.0, 80.0), unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.03);
  auto dir = [](double a, double e) {
    return Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
  };
  int good = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec3 v = testing::random_vec(rng, 10.0);
    if (v.norm() > 10.0) v *= 10.0 / v.norm();
    RadarPointCloud c;
    const int outliers = 60;  // 30 % of 200
    for (int i = 0; i < 200; ++i) {
      const Vec3 mu = dir(az(rng), el(rng));
      double d = -mu.dot(v) + noise(rng);
      if (i < outliers) d += 2.0;
      c.points.push_back({mu * rng_range(rng), d});
    }
    std::shuffle(c.points.begin(), c.points.end(), rng);
    RansacConfig cfg;
    cfg.rng_seed = 5000 + static_cast<std::uint64_t>(trial);
    double err = 1e9;
    try {
      err = (ransac_velocity(c, cfg, 0.03).estimate.velocity - v).norm();
    } catch (const std::exception&) {
    }
    worst = std::max(worst, err);
    good += err <= 0.05 ? 1 : 0;
  }
  int degenerate_ok = 0;
  const int degenerate_trials = 20;
  for (int trial = 0; trial < degenerate_trials; ++trial) {
    const Rotation R = testing::random_rotation(rng);
    Vec3 normal = R * Vec3::UnitZ();
    Eigen::Index k = 0;
    normal.cwiseAbs().maxCoeff(&k);
    if (normal[k] < 0) normal = -normal;
    RadarPointCloud c;
    for (int i = 0; i < 200; ++i) {
      c.points.push_back({R * dir(az(rng), 0.0) * rng_range(rng), 0.5 * unit(rng)});
    }
    try {
      ransac_velocity(c, RansacConfig{}, 0.03);
    } catch (const DegenerateGeometryError& e) {
      if ((e.null_direction() - normal).norm() < 1e-6) ++degenerate_ok;
    } catch (const std::exception&) {
    }
  }
  const double secs = seconds_since(t0);
  return {good >= 99 && degenerate_ok == degenerate_trials && secs < 5.0,
          std::to_string(good) + "/100 trials within 0.05 m/s (worst " + fmt(worst) + "), " +
              std::to_string(degenerate_ok) + "/" + std::to_string(degenerate_trials) +
              " coplanar clouds rejected with the plane normal; " + fmt(secs, 3) +
              " s (limit 5 s)"};
}

// ---------------------------------------------------------------- 4
SimulatedRun batch_scenario() {
  TrajectorySpec traj;
  traj.kind = TrajectoryKind::kFigureEight;
  traj.duration = 2.0;
  traj.max_speed = 10.0;
  traj.max_yaw_rate = 0.6;
  traj.ramp_time = 0.5;
  SensorNoiseSpec noise;
  noise.imu.sigma_g = 2e-4;
  noise.imu.sigma_a = 2e-3;
  noise.imu.sigma_bg = 2e-5;
  noise.imu.sigma_ba = 3e-4;
  noise.radar.rate = 60.0;
  noise.radar.sigma_doppler = 0.1;
  noise.lo.rate = 10.0;
  noise.lo.sigma_xy = 0.05;
  noise.lo.sigma_else = 0.01;
  noise.seed = 404;
  return simulate(traj, noise, default_sensor_rig());
}

struct BatchComparison {
  double pos = 0.0, vel = 0.0, rot = 0.0;
  std::size_t nodes = 0;
};

BatchComparison compare_with_batch(const Dataset& data, double lag) {
  SmootherConfig cfg;
  cfg.lag = lag;
  cfg.imu_rate = 400.0;
  cfg.max_solver_iterations = 50;
  cfg.convergence_tol = 1e-12;
  const RigidTransform initial = data.lo.front().pose;

  FixedLagSmoother s(cfg, data.rig);
  s.set_initial_pose(initial);
  std::size_t count = 0;
  for (const auto& e : merge_streams(data)) {
    switch (e.kind) {
      case MeasurementEvent::Kind::kImu:
        s.add_imu(data.imu[e.index]);
        if (++count % 40 == 0) {
          s.optimize();
          s.slide_window(s.newest_time());
        }
        break;
      case MeasurementEvent::Kind::kLo: s.add_lo(data.lo[e.index]); break;
      case MeasurementEvent::Kind::kRadar: s.add_radar(data.radar[e.index]); break;
      default: break;
    }
  }
  for (int i = 0; i < 5 && !s.optimize().converged; ++i) {
  }

  testing::BatchSolver batch(data, cfg, initial);
  batch.solve(50, 1e-11);

  BatchComparison out;
  std::map<Timestamp, std::size_t> index;
  for (std::size_t k = 0; k < batch.times().size(); ++k) index[batch.times()[k]] = k;
  for (const auto& w : s.window_states()) {
    const NavState& b = batch.states()[index.at(w.t)];
    out.pos = std::max(out.pos, (w.state.pose.translation() - b.pose.translation()).norm());
    out.vel = std::max(out.vel, (w.state.velocity - b.velocity).norm());
    out.rot = std::max(out.rot, log_rot(b.pose.rotation().inverse() * w.state.pose.rotation()).norm());
    ++out.nodes;
  }
  return out;
}

Outcome fixed_lag_vs_batch() {
  SimulatedRun run = batch_scenario();
  const Vec6 lo_sigma = (Vec6() << 0.01, 0.01, 0.01, 0.05, 0.05, 0.05).finished();
  for (auto& m : run.data.lo) m.sigma = lo_sigma;
  bool pass = true;
  std::string detail;
  for (double lag : {2.0, 0.5}) {
    const BatchComparison c = compare_with_batch(run.data, lag);
    pass = pass && c.pos <= 1e-3 && c.vel <= 1e-3 && c.rot <= 1e-4;
    detail += "lag " + fmt(lag) + " s: " + std::to_string(c.nodes) + " nodes, max |dp| " +
              fmt(c.pos) + " m, |dv| " + fmt(c.vel) + " m/s, |dR| " + fmt(c.rot) + " rad; ";
  }
  detail += "limits 1e-3 m, 1e-3 m/s, 1e-4 rad";
  return {pass, detail};
}

// ---------------------------------------------------------------- 5, 6, 7 helpers
struct ScenarioRun {
  MetricReport metrics;
  EstimateResult result;
  std::vector<TrajectoryRecord> records;
  double laps = 0.0;
};

ScenarioRun run_scenario(const fs::path& file) {
  const RunConfig cfg = load_run_config(file);
  const SimulatedRun sim = simulate(cfg.scenario->trajectory, cfg.scenario->noise, cfg.scenario->rig);
  ScenarioRun out;
  const Trajectory traj(cfg.scenario->trajectory);
  out.laps = traj.phase(cfg.scenario->trajectory.duration) / (2.0 * M_PI);
  out.result = run_estimator(sim.data, cfg.estimator);
  if (out.result.diverged) throw std::runtime_error(file.filename().string() + " diverged");
  out.metrics = evaluate_trajectories(sim.truth, out.result.estimate, cfg.evaluation);
  out.records = associate_trajectories(sim.truth, out.result.estimate);
  return out;
}

Outcome noiseless_closed_loop() {
  const ScenarioRun r = run_scenario(kScenarios / "noiseless_figure_eight.yaml");
  // full body-frame velocity error (all three axes)
  double sq = 0.0;
  for (const auto& rec : r.records) sq += (rec.estimate.velocity - rec.truth.velocity).squaredNorm();
  const double vel = std::sqrt(sq / static_cast<double>(r.records.size()));
  const double ape = r.metrics.at("ape_trans_rmse_m");
  return {ape <= 1e-2 && vel <= 1e-3,
          "APE trans RMSE " + fmt(ape) + " m (limit 1e-2), body velocity RMSE " + fmt(vel) +
              " m/s (limit 1e-3), path " + fmt(r.metrics.at("path_length_m")) + " m"};
}

double fwd_plus_lat(const MetricReport& m) {
  return m.at("vel_forward_rmse_mps") + m.at("vel_lateral_rmse_mps");
}

Outcome degraded_lo(double& lri_mean_wall_ms) {
  std::map<std::string, std::vector<double>> v;
  double laps = 0.0;
  for (const char* mode : {"lri", "li"}) {
    for (int sigma : {1, 2, 4}) {
      const fs::path f =
          kScenarios / ("track_" + std::string(mode) + "_sigma" + std::to_string(sigma) + ".yaml");
      const ScenarioRun r = run_scenario(f);
      v[mode].push_back(fwd_plus_lat(r.metrics));
      laps = r.laps;
      if (std::string(mode) == "lri" && sigma == 1) lri_mean_wall_ms = r.result.mean_wall_ms();
    }
  }
  const auto& lri = v["lri"];
  const auto& li = v["li"];
  const double lo = *std::min_element(lri.begin(), lri.end());
  const double hi = *std::max_element(lri.begin(), lri.end());
  const double spread = (hi - lo) / lo;
  const double ratio = li[2] / lri[2];
  const bool monotone = li[0] < li[1] && li[1] < li[2];
  const bool pass = laps >= 5.0 && spread < 0.5 && ratio >= 3.0 && monotone;
  return {pass, "laps " + fmt(laps, 3) + "; LRI fwd+lat RMSE " + fmt(lri[0]) + "/" + fmt(lri[1]) +
                    "/" + fmt(lri[2]) + " m/s (spread " + fmt(100 * spread, 3) +
                    "%, limit 50%); LI " + fmt(li[0]) + "/" + fmt(li[1]) + "/" + fmt(li[2]) +
                    " m/s (monotone " + (monotone ? "yes" : "no") + "); LI/LRI at 4 m " +
                    fmt(ratio, 3) + "x (limit 3x)"};
}

Outcome forest_rpe() {
  const ScenarioRun r = run_scenario(kScenarios / "forest_ri.yaml");
  const double med = r.metrics.at("rpe_trans_median_pct_d10");
  return {med <= 5.0, "median RPE(10 m) " + fmt(med) + "% (limit 5%) over " +
                          fmt(r.metrics.at("rpe_pairs_d10")) + " pairs, path " +
                          fmt(r.metrics.at("path_length_m")) + " m"};
}

// ---------------------------------------------------------------- 8
Outcome gauge_nullspace() {
  TrajectorySpec traj;
  traj.kind = TrajectoryKind::kWaypointSpline;
  traj.duration = 0.5;
  traj.max_speed = 8.0;
  traj.ramp_time = 0.2;
  SensorNoiseSpec noise;
  noise.imu.sigma_g = 2e-4;
  noise.imu.sigma_a = 2e-3;
  noise.radar.sigma_doppler = 0.1;
  noise.lo.enabled = false;
  noise.seed = 808;
  const SimulatedRun run = simulate(traj, noise, default_sensor_rig());

  SmootherConfig cfg;
  cfg.use_lo = false;
  cfg.lag = 1.0;
  cfg.imu_rate = 400.0;
  cfg.initial_prior.position = std::numeric_limits<double>::infinity();
  FixedLagSmoother s(cfg, run.data.rig);
  for (const auto& e : merge_streams(run.data)) {
    if (e.kind == MeasurementEvent::Kind::kImu) s.add_imu(run.data.imu[e.index]);
    if (e.kind == MeasurementEvent::Kind::kRadar) s.add_radar(run.data.radar[e.index]);
  }
  s.optimize();
  const Eigen::SparseMatrix<double> J = s.whitened_jacobian();
  const Eigen::Index n = J.cols();
  const auto states = s.window_states();

  // Shifting every position by the same world vector d moves node k by R_k^T d
  // in its local position coordinates.
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(n, 3);
  for (std::size_t k = 0; k < states.size(); ++k) {
    N.block<3, 3>(static_cast<Eigen::Index>(15 * k) + block::kPos, 0) =
        states[k].state.pose.rotation().matrix().transpose();
  }
  const Eigen::MatrixXd JN = J * N;
  const double jn = JN.norm() / (J.norm() * N.norm());

  // Rank straight from the singular values of the column-scaled J. Forming
  // J^T J squares the conditioning and pushes the weakly observed bias
  // directions down into roundoff, so it cannot tell them from true nulls.
  const Eigen::MatrixXd Jd = Eigen::MatrixXd(J);
  const Eigen::VectorXd scale = Jd.colwise().norm().cwiseInverse();
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(Jd * scale.asDiagonal());
  const Eigen::VectorXd sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(Jd.rows(), Jd.cols())) *
                     std::numeric_limits<double>::epsilon() * sv[0];
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) nullity += sv[i] <= tol ? 1 : 0;
  const Eigen::Index m = sv.size();
  return {nullity == 3 && jn < 1e-9,
          std::to_string(states.size()) + " nodes, " + std::to_string(n) + " columns; nullity " +
              std::to_string(nullity) + " (singular values " + fmt(sv[m - 3] / sv[0]) + ", " +
              fmt(sv[m - 4] / sv[0]) + " relative, threshold " + fmt(tol / sv[0]) +
              "); |J N| relative " + fmt(jn)};
}

// ---------------------------------------------------------------- 9
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& work) {
  const fs::path cfg = kScenarios / "determinism.yaml";
  std::vector<fs::path> outs = {work / "det_a", work / "det_b"};
  for (const auto& o : outs) {
    fs::remove_all(o);
    const std::string cmd = std::string("\"") + LRIO_CLI + "\" run --config \"" + cfg.string() +
                            "\" --seed 7 --out \"" + o.string() + "\" > \"" +
                            (o.string() + ".log") + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "lrio run failed, see " + o.string() + ".log"};
  }
  const bool est = slurp(outs[0] / "estimate.csv") == slurp(outs[1] / "estimate.csv");
  const bool met = slurp(outs[0] / "metrics.json") == slurp(outs[1] / "metrics.json");
  const bool nonempty = !slurp(outs[0] / "estimate.csv").empty();
  return {est && met && nonempty, std::string("estimate.csv ") + (est ? "identical" : "differs") +
                                      ", metrics.json " + (met ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string workdir = (fs::temp_directory_path() / "lrio_acceptance").string();
  std::set<int> only;
  app.add_option("--workdir", workdir, "scratch directory for CLI runs");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  double lri_wall_ms = -1.0;
  using Check = std::function<Outcome()>;
  const std::vector<std::pair<std::string, Check>> checks = {
      {"jacobian correctness", jacobians},
      {"radar factor zero blocks", radar_zero_blocks},
      {"ransac recovery", ransac_recovery},
      {"fixed-lag vs batch", fixed_lag_vs_batch},
      {"noiseless closed loop", noiseless_closed_loop},
      {"degraded LO trend", [&] { return degraded_lo(lri_wall_ms); }},
      {"forest RPE", forest_rpe},
      {"gauge nullspace", gauge_nullspace},
      {"determinism", [&] { return determinism(workdir); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << id << " [" << checks[i].first << "] " << (o.pass ? "PASS" : "FAIL")
              << ": " << o.detail << std::endl;
  }

  if (only.empty() || only.count(10)) {
    if (lri_wall_ms < 0.0) {
      // criterion 6 did not run; time the LRI track on its own
      try {
        lri_wall_ms = run_scenario(kScenarios / "track_lri_sigma1.yaml").result.mean_wall_ms();
      } catch (const std::exception&) {
      }
    }
    const bool ok = lri_wall_ms >= 0.0 && lri_wall_ms <= 50.0;
    std::cout << "criterion 10 [throughput] " << (ok ? "PASS" : "SOFT-FAIL")
              << ": mean optimization wall time " << fmt(lri_wall_ms) << " ms at 400 Hz nodes, 2 s lag"
              << " (limit 50 ms, report only)" << std::endl;
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
