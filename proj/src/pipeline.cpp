#include "lrio/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "lrio/ego_velocity.hpp"

namespace lrio {

namespace {

using Clock = std::chrono::steady_clock;

std::string delta_suffix(double delta) { return "_d" + format_double(delta); }

bool window_finite(const FixedLagSmoother& smoother) {
  for (const auto& s : smoother.window_states()) {
    if (!s.state.all_finite()) return false;
  }
  return true;
}

void append_finalized(FixedLagSmoother& smoother, std::vector<StateSample>& out) {
  auto done = smoother.take_finalized();
  out.insert(out.end(), done.begin(), done.end());
}

}  // namespace

double EstimateResult::mean_wall_ms() const {
  if (optimizations.empty()) return 0.0;
  double total = 0.0;
  for (const auto& o : optimizations) total += o.wall_ms;
  return total / static_cast<double>(optimizations.size());
}

EstimateResult run_estimator(const Dataset& data, const EstimatorConfig& cfg,
                             const std::function<void(const OptimizationRecord&)>& on_optimize) {
  if (data.imu.empty()) throw std::invalid_argument("run_estimator: dataset has no IMU messages");
  cfg.ransac.validate();
  FixedLagSmoother smoother(cfg.smoother, data.rig);
  if (cfg.smoother.use_lo && !data.lo.empty()) smoother.set_initial_pose(data.lo.front().pose);

  const auto period = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.smoother.imu_rate / cfg.optimize_rate)));

  EstimateResult result;
  std::size_t skipped_scans = 0;

  auto optimize = [&]() -> bool {
    const auto start = Clock::now();
    OptimizationRecord rec;
    try {
      rec.report = smoother.optimize();
    } catch (const NonFiniteCostError& e) {
      result.diverged = true;
      result.divergence = e.what();
      return false;
    }
    if (!window_finite(smoother)) {
      result.diverged = true;
      result.divergence = "non-finite state after optimization at t_ns=" +
                          std::to_string(smoother.newest_time());
      return false;
    }
    rec.marginalized = smoother.slide_window(smoother.newest_time());
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    rec.t = smoother.newest_time();
    rec.factors = smoother.factor_counts();
    rec.drops = smoother.drops();
    rec.skipped_scans = skipped_scans;
    append_finalized(smoother, result.estimate);
    if (on_optimize) on_optimize(rec);
    result.optimizations.push_back(std::move(rec));
    return true;
  };

  bool ok = true;
  std::size_t since_optimize = 0;
  for (const auto& ev : merge_streams(data)) {
    switch (ev.kind) {
      case MeasurementEvent::Kind::kImu:
        smoother.add_imu(data.imu[ev.index]);
        ++result.imu_messages;
        if (++since_optimize == period) {
          since_optimize = 0;
          ok = optimize();
        }
        break;
      case MeasurementEvent::Kind::kLo: {
        LoPoseMeasurement m = data.lo[ev.index];
        m.sigma = cfg.lo_sigma;
        smoother.add_lo(m);
        break;
      }
      case MeasurementEvent::Kind::kRadar:
        smoother.add_radar(data.radar[ev.index]);
        break;
      case MeasurementEvent::Kind::kRadarCloud: {
        if (!cfg.smoother.use_radar) break;
        const auto ms = cloud_to_doppler_measurements(data.radar_clouds[ev.index], cfg.ransac,
                                                      cfg.cloud_sigma);
        if (ms.empty()) ++skipped_scans;
        for (const auto& m : ms) smoother.add_radar(m);
        break;
      }
    }
    if (!ok) break;
  }
  if (ok && since_optimize != 0) ok = optimize();
  if (ok) {
    for (const auto& s : smoother.window_states()) result.estimate.push_back(s);
  }
  result.nodes = smoother.total_nodes();
  result.drops = smoother.drops();
  result.skipped_scans = skipped_scans;
  return result;
}

MetricReport evaluate_trajectories(std::span<const StateSample> truth,
                                   std::span<const StateSample> estimate,
                                   const EvaluationConfig& cfg) {
  const auto records = associate_trajectories(truth, estimate);
  if (records.empty()) throw std::invalid_argument("evaluate: no estimate sample matches truth");
  MetricReport m;
  m["records"] = static_cast<double>(records.size());
  m["ape_alignment_umeyama"] = cfg.alignment == Alignment::kSe3Umeyama ? 1.0 : 0.0;

  const ApeResult a = ape(records, cfg.alignment);
  m["ape_trans_rmse_m"] = a.trans.rmse;
  m["ape_trans_std_m"] = a.trans.std;
  m["ape_trans_max_m"] = a.trans.max;
  m["ape_rot_rmse_deg"] = a.rot_deg.rmse;
  m["ape_rot_std_deg"] = a.rot_deg.std;

  for (double delta : cfg.rpe_deltas) {
    const RpeResult r = rpe(records, delta);
    const std::string d = delta_suffix(delta);
    m["rpe_pairs" + d] = static_cast<double>(r.trans.count);
    m["rpe_trans_median_m" + d] = r.trans.median;
    m["rpe_trans_rmse_m" + d] = r.trans.rmse;
    m["rpe_trans_median_pct" + d] = r.trans_percent.median;
    m["rpe_trans_rmse_pct" + d] = r.trans_percent.rmse;
    m["rpe_rot_median_deg" + d] = r.rot_deg.median;
    m["rpe_rot_rmse_deg" + d] = r.rot_deg.rmse;
  }

  const VelocityErrorResult v = body_velocity_error(records);
  m["vel_forward_rmse_mps"] = v.forward.rmse;
  m["vel_forward_std_mps"] = v.forward.std;
  m["vel_lateral_rmse_mps"] = v.lateral.rmse;
  m["vel_lateral_std_mps"] = v.lateral.std;
  m["path_length_m"] = arc_length(records).back();
  return m;
}

void write_metrics_json(const std::filesystem::path& file, const MetricReport& metrics) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error(file.string() + ": cannot open for writing");
  out << nlohmann::json(metrics).dump(2) << '\n';
}

MetricReport read_metrics_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error(file.string() + ": cannot open");
  return nlohmann::json::parse(in).get<MetricReport>();
}

void write_plotdata_csv(const std::filesystem::path& file, std::span<const StateSample> truth,
                        std::span<const StateSample> estimate, Alignment align) {
  const auto records = associate_trajectories(truth, estimate);
  RigidTransform correction;
  if (align == Alignment::kSe3Umeyama && records.size() >= 3) {
    std::vector<Vec3> src, dst;
    for (const auto& r : records) {
      src.push_back(r.estimate.pose.translation());
      dst.push_back(r.truth.pose.translation());
    }
    correction = umeyama_se3(src, dst);
  }
  std::ofstream out(file);
  if (!out) throw std::runtime_error(file.string() + ": cannot open for writing");
  out << "t_ns,err_x_m,err_y_m,err_z_m,err_rot_deg,err_v_forward_mps,err_v_lateral_mps,"
         "err_v_up_mps\n";
  for (const auto& r : records) {
    const RigidTransform est = correction * r.estimate.pose;
    const Vec3 dp = est.translation() - r.truth.pose.translation();
    const double rot =
        (r.truth.pose.rotation().inverse() * est.rotation()).log().norm() * 180.0 / std::numbers::pi;
    const Vec3 dv = r.truth.pose.rotation().inverse() * Vec3(r.estimate.velocity - r.truth.velocity);
    out << r.t << ',' << format_double(dp.x()) << ',' << format_double(dp.y()) << ','
        << format_double(dp.z()) << ',' << format_double(rot) << ',' << format_double(dv.x()) << ','
        << format_double(dv.y()) << ',' << format_double(dv.z()) << '\n';
  }
}

void write_diagnostics_jsonl(const std::filesystem::path& file,
                             std::span<const OptimizationRecord> records) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error(file.string() + ": cannot open for writing");
  for (const auto& r : records) {
    nlohmann::json j;
    j["t_ns"] = r.t;
    j["nodes"] = r.report.nodes;
    j["iterations"] = r.report.iterations;
    j["converged"] = r.report.converged;
    j["cost_trace"] = r.report.cost_trace;
    j["factors"] = {{"imu", r.factors.imu},
                    {"bias_walk", r.factors.bias_walk},
                    {"radar", r.factors.radar},
                    {"lo", r.factors.lo},
                    {"prior", r.factors.prior}};
    j["dropped"] = {{"radar_expired", r.drops.radar_expired},
                    {"lo_expired", r.drops.lo_expired},
                    {"radar_ambiguous", r.drops.radar_ambiguous},
                    {"imu_gaps", r.drops.imu_gaps},
                    {"skipped_scans", r.skipped_scans}};
    j["marginalized"] = r.marginalized;
    j["wall_ms"] = r.wall_ms;
    out << j.dump() << '\n';
  }
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  if (cfg.scenario) cfg.scenario->noise.seed = seed;
}

std::filesystem::path dataset_dir(const RunConfig& cfg, const std::filesystem::path& out) {
  return cfg.dataset ? *cfg.dataset : out;
}

void simulate_to(const RunConfig& cfg, const std::filesystem::path& out) {
  if (!cfg.scenario) throw std::invalid_argument("simulate: config has no scenario block");
  const SimulatedRun run = simulate(cfg.scenario->trajectory, cfg.scenario->noise, cfg.scenario->rig);
  std::filesystem::create_directories(out);
  save_dataset(out, run.data);
  write_state_csv(out / kTruthFile, run.truth);
}

EstimateResult estimate_to(const RunConfig& cfg, const std::filesystem::path& out) {
  MeasurementDefaults defaults;
  defaults.lo_sigma = cfg.estimator.lo_sigma;
  const Dataset data = load_dataset(dataset_dir(cfg, out), cfg.estimator.radar_format, defaults);
  EstimateResult result = run_estimator(data, cfg.estimator);
  std::filesystem::create_directories(out);
  std::vector<StateSample> kept;
  const auto step = static_cast<std::size_t>(cfg.estimator.output_decimation);
  for (std::size_t i = 0; i < result.estimate.size(); i += step) kept.push_back(result.estimate[i]);
  write_state_csv(out / kEstimateFile, kept);
  write_diagnostics_jsonl(out / "diagnostics.jsonl", result.optimizations);
  return result;
}

MetricReport evaluate_to(const RunConfig& cfg, const std::filesystem::path& out) {
  const auto truth = read_state_csv(dataset_dir(cfg, out) / kTruthFile);
  const auto estimate = read_state_csv(out / kEstimateFile);
  const MetricReport m = evaluate_trajectories(truth, estimate, cfg.evaluation);
  std::filesystem::create_directories(out);
  write_metrics_json(out / "metrics.json", m);
  write_plotdata_csv(out / "plotdata.csv", truth, estimate, cfg.evaluation.alignment);
  return m;
}

}  // namespace lrio
