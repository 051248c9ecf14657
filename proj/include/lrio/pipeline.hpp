#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrio/config.hpp"

namespace lrio {

/// One optimize() call of the estimator, as logged to diagnostics.jsonl.
struct OptimizationRecord {
  Timestamp t = 0;  // newest node
  OptimizeReport report;
  FactorCounts factors;
  DropCounters drops;
  std::size_t skipped_scans = 0;
  std::size_t marginalized = 0;
  double wall_ms = 0.0;
};

struct EstimateResult {
  std::vector<StateSample> estimate;  // every node, in time order
  std::vector<OptimizationRecord> optimizations;
  std::size_t imu_messages = 0;
  std::size_t nodes = 0;
  DropCounters drops;
  std::size_t skipped_scans = 0;  // cloud scans without static consensus
  bool diverged = false;
  std::string divergence;

  double mean_wall_ms() const;
};

/// Replays a dataset through the fixed-lag smoother. Optimizes every
/// imu_rate / optimize_rate IMU messages, then marginalizes nodes older than
/// the lag; each node's state is reported once, when it leaves the window.
/// Non-finite costs or states stop the run with `diverged` set.
EstimateResult run_estimator(const Dataset& data, const EstimatorConfig& cfg,
                             const std::function<void(const OptimizationRecord&)>& on_optimize = {});

/// Flat metrics; keys carry their unit (_m, _deg, _pct, _mps).
using MetricReport = std::map<std::string, double>;

MetricReport evaluate_trajectories(std::span<const StateSample> truth,
                                   std::span<const StateSample> estimate,
                                   const EvaluationConfig& cfg);

void write_metrics_json(const std::filesystem::path& file, const MetricReport& metrics);
MetricReport read_metrics_json(const std::filesystem::path& file);
/// Per-record errors: position (m), rotation (deg) and body-frame velocity (m/s).
void write_plotdata_csv(const std::filesystem::path& file, std::span<const StateSample> truth,
                        std::span<const StateSample> estimate, Alignment align);
void write_diagnostics_jsonl(const std::filesystem::path& file,
                             std::span<const OptimizationRecord> records);

/// Overrides the seed used for simulation noise.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

/// Directory the estimator reads: the configured dataset, else `out`.
std::filesystem::path dataset_dir(const RunConfig& cfg, const std::filesystem::path& out);

/// Writes the simulated dataset and truth.csv into `out`.
void simulate_to(const RunConfig& cfg, const std::filesystem::path& out);
/// Writes estimate.csv and diagnostics.jsonl into `out`.
EstimateResult estimate_to(const RunConfig& cfg, const std::filesystem::path& out);
/// Writes metrics.json and plotdata.csv into `out`.
MetricReport evaluate_to(const RunConfig& cfg, const std::filesystem::path& out);

/// Exit status of the CLI verbs.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitDiverged = 2 };

}  // namespace lrio
