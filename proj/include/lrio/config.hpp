#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrio/ego_velocity.hpp"
#include "lrio/evaluation.hpp"
#include "lrio/simulator.hpp"
#include "lrio/smoother.hpp"

namespace lrio {

struct EstimatorConfig {
  SmootherConfig smoother;
  Vec6 lo_sigma = MeasurementDefaults{}.lo_sigma;  // [rot rad x3, trans m x3]
  RadarFormat radar_format = RadarFormat::kAuto;
  double optimize_rate = 10.0;  // Hz
  int output_decimation = 1;    // keep every n-th node in estimate.csv
  RansacConfig ransac;
  double cloud_sigma = kDefaultDopplerResolution;  // sigma of cloud-derived radial speeds
};

struct EvaluationConfig {
  Alignment alignment = Alignment::kNone;
  std::vector<double> rpe_deltas{10.0};  // m
};

/// Simulation inputs, present when the config has a `scenario` block.
struct ScenarioConfig {
  TrajectorySpec trajectory;
  SensorNoiseSpec noise;
  SensorRig rig = default_sensor_rig();
};

struct RunConfig {
  std::optional<ScenarioConfig> scenario;
  std::optional<std::filesystem::path> dataset;  // absolute, or relative to the config file
  EstimatorConfig estimator;
  EvaluationConfig evaluation;
  std::uint64_t seed = 0;
};

/// Every problem found in a config file, one message per entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses a YAML run config. Unknown keys, wrong types and out-of-range values
/// are all collected before throwing ConfigError.
RunConfig parse_run_config(const std::string& yaml_text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& file);

}  // namespace lrio
