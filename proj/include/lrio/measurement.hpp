#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrio/types.hpp"

namespace lrio {

/// Radar returns closer than this are below the sensor's minimum range.
inline constexpr double kMinRadarRange = 0.1;

/// Unit bearing toward a radar point, or nullopt for points within kMinRadarRange.
std::optional<Vec3> bearing_from_point(const Vec3& position);

/// Index of the node whose time is closest to `t`, ties going to the earlier
/// node. Returns nullopt ("measurement expired") when `t` precedes the first
/// node. `node_times` must be non-empty and sorted.
std::optional<std::size_t> associate_to_node(Timestamp t, std::span<const Timestamp> node_times);

/// Thrown for unreadable or malformed dataset files. `line` and `column` are
/// 1-based; zero means not applicable.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::string file, std::size_t line, std::size_t column, const std::string& what);

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

enum class RadarFormat { kAuto, kDopplerCsv, kCloudJsonl };

struct MeasurementDefaults {
  Vec6 lo_sigma = (Vec6() << 0.01, 0.01, 0.01, 0.1, 0.1, 0.1).finished();
};

/// All streams of one recording. Each stream is sorted by time.
struct Dataset {
  std::vector<ImuMeasurement> imu;
  std::vector<RadarDopplerMeasurement> radar;
  std::vector<RadarPointCloud> radar_clouds;
  std::vector<LoPoseMeasurement> lo;
  SensorRig rig;
};

/// Timestamped full state, the row type of truth.csv and estimate.csv.
struct StateSample {
  Timestamp t = 0;
  NavState state;
};

// File names inside a dataset directory.
inline constexpr const char* kImuFile = "imu.csv";
inline constexpr const char* kRadarDopplerFile = "radar_doppler.csv";
inline constexpr const char* kRadarCloudFile = "radar_cloud.jsonl";
inline constexpr const char* kLoFile = "lo_pose.csv";
inline constexpr const char* kRigFile = "rig.json";
inline constexpr const char* kTruthFile = "truth.csv";
inline constexpr const char* kEstimateFile = "estimate.csv";

/// Reads a dataset directory. imu.csv and rig.json are required; radar and LO
/// files are optional. With kAuto both radar files are read when present.
Dataset load_dataset(const std::filesystem::path& dir, RadarFormat format = RadarFormat::kAuto,
                     const MeasurementDefaults& defaults = {});
/// Writes every non-empty stream plus rig.json.
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

std::vector<ImuMeasurement> read_imu_csv(const std::filesystem::path& file);
std::vector<RadarDopplerMeasurement> read_radar_doppler_csv(const std::filesystem::path& file);
std::vector<RadarPointCloud> read_radar_cloud_jsonl(const std::filesystem::path& file);
std::vector<LoPoseMeasurement> read_lo_csv(const std::filesystem::path& file, const Vec6& sigma);
SensorRig read_rig_json(const std::filesystem::path& file);

void write_imu_csv(const std::filesystem::path& file, std::span<const ImuMeasurement> rows);
void write_radar_doppler_csv(const std::filesystem::path& file,
                             std::span<const RadarDopplerMeasurement> rows);
void write_radar_cloud_jsonl(const std::filesystem::path& file, std::span<const RadarPointCloud> scans);
void write_lo_csv(const std::filesystem::path& file, std::span<const LoPoseMeasurement> rows);
void write_rig_json(const std::filesystem::path& file, const SensorRig& rig);

std::vector<StateSample> read_state_csv(const std::filesystem::path& file);
void write_state_csv(const std::filesystem::path& file, std::span<const StateSample> rows);

/// One entry of the time-merged measurement sequence.
struct MeasurementEvent {
  enum class Kind { kImu, kLo, kRadar, kRadarCloud };
  Timestamp t = 0;
  Kind kind = Kind::kImu;
  std::size_t index = 0;  // into the matching Dataset stream
};

/// Merges all streams by time. Equal stamps order IMU, LO, radar, radar cloud,
/// so a node always exists before measurements stamped at its time arrive.
std::vector<MeasurementEvent> merge_streams(const Dataset& data);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace lrio
