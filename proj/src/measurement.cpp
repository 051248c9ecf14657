#include "lrio/measurement.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lrio {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kImuHeader = "t_ns,wx,wy,wz,ax,ay,az";
constexpr const char* kRadarHeader = "t_ns,mu_x,mu_y,mu_z,v_r,sigma";
constexpr const char* kLoHeader = "t_ns,px,py,pz,qw,qx,qy,qz";
constexpr const char* kStateHeader =
    "t_ns,px,py,pz,qw,qx,qy,qz,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz";

std::string quote_stamp(Timestamp t) { return std::to_string(t); }

/// Splits CSV rows into fields and converts them with exact error positions.
class CsvReader {
 public:
  CsvReader(const fs::path& file, const char* header, std::size_t columns)
      : name_(file.string()), columns_(columns), in_(file) {
    if (!in_) throw DatasetError(name_, 0, 0, "cannot open file");
    std::string line;
    if (!std::getline(in_, line)) throw DatasetError(name_, 1, 0, "missing header");
    line_no_ = 1;
    if (line != header) {
      throw DatasetError(name_, 1, 0, "header must be exactly '" + std::string(header) + "'");
    }
  }

  /// Advances to the next non-empty row; false at end of file.
  bool next() {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (line_.empty()) continue;
      fields_.clear();
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line_.find(',', start);
        fields_.push_back(std::string_view(line_).substr(start, comma == std::string::npos
                                                                    ? std::string::npos
                                                                    : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (fields_.size() != columns_) {
        throw DatasetError(name_, line_no_, std::min(fields_.size(), columns_) + 1,
                           "expected " + std::to_string(columns_) + " columns, found " +
                               std::to_string(fields_.size()));
      }
      return true;
    }
    return false;
  }

  Timestamp stamp(std::size_t col) const {
    Timestamp v = 0;
    const auto f = fields_[col];
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) {
      throw DatasetError(name_, line_no_, col + 1, "invalid integer '" + std::string(f) + "'");
    }
    return v;
  }

  double number(std::size_t col) const {
    double v = 0.0;
    const auto f = fields_[col];
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
      throw DatasetError(name_, line_no_, col + 1, "invalid number '" + std::string(f) + "'");
    }
    return v;
  }

  Vec3 vec3(std::size_t col) const { return Vec3(number(col), number(col + 1), number(col + 2)); }

  std::size_t line() const { return line_no_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::size_t columns_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
  std::vector<std::string_view> fields_;
};

/// Enforces time ordering; `strict` forbids repeated stamps.
class MonotoneCheck {
 public:
  MonotoneCheck(std::string file, bool strict) : file_(std::move(file)), strict_(strict) {}

  void operator()(Timestamp t, std::size_t line) {
    if (has_prev_ && (t < prev_ || (strict_ && t == prev_))) {
      throw DatasetError(file_, line, 1,
                         "non-monotone timestamps: " + quote_stamp(prev_) + " followed by " +
                             quote_stamp(t));
    }
    prev_ = t;
    has_prev_ = true;
  }

 private:
  std::string file_;
  bool strict_;
  bool has_prev_ = false;
  Timestamp prev_ = 0;
};

Rotation rotation_from_wxyz(double w, double x, double y, double z, const std::string& file,
                            std::size_t line, std::size_t col) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (std::abs(n - 1.0) > 1e-6) {
    throw DatasetError(file, line, col, "quaternion is not unit length");
  }
  return Rotation::from_quaternion(Eigen::Quaterniond(w, x, y, z));
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DatasetError(file.string(), 0, 0, "cannot open file for writing");
  return out;
}

void put(std::ostream& os, double v) { os << ',' << format_double(v); }
void put(std::ostream& os, const Vec3& v) {
  put(os, v.x());
  put(os, v.y());
  put(os, v.z());
}
void put_quat(std::ostream& os, const Rotation& r) {
  const auto& q = r.quaternion();
  put(os, q.w());
  put(os, q.x());
  put(os, q.y());
  put(os, q.z());
}

Vec3 json_vec3(const json& j, const std::string& file, const char* key) {
  if (!j.is_array() || j.size() != 3) {
    throw DatasetError(file, 0, 0, std::string("'") + key + "' must be an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

RigidTransform json_transform(const json& j, const std::string& file, const char* key) {
  if (!j.is_object() || !j.contains("translation") || !j.contains("quaternion")) {
    throw DatasetError(file, 0, 0,
                       std::string("'") + key + "' needs 'translation' and 'quaternion' [w,x,y,z]");
  }
  const json& q = j.at("quaternion");
  if (!q.is_array() || q.size() != 4) {
    throw DatasetError(file, 0, 0, std::string("'") + key + ".quaternion' must have 4 numbers");
  }
  return RigidTransform(rotation_from_wxyz(q[0].get<double>(), q[1].get<double>(),
                                           q[2].get<double>(), q[3].get<double>(), file, 0, 0),
                        json_vec3(j.at("translation"), file, key));
}

json transform_json(const RigidTransform& t) {
  const auto& q = t.rotation().quaternion();
  return json{{"translation", {t.translation().x(), t.translation().y(), t.translation().z()}},
              {"quaternion", {q.w(), q.x(), q.y(), q.z()}}};
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::optional<Vec3> bearing_from_point(const Vec3& position) {
  const double n = position.norm();
  if (!(n > kMinRadarRange)) return std::nullopt;
  return position / n;
}

std::optional<std::size_t> associate_to_node(Timestamp t, std::span<const Timestamp> node_times) {
  if (node_times.empty()) throw std::invalid_argument("associate_to_node: no nodes");
  if (t < node_times.front()) return std::nullopt;
  const auto it = std::lower_bound(node_times.begin(), node_times.end(), t);
  if (it == node_times.end()) return node_times.size() - 1;
  const auto hi = static_cast<std::size_t>(it - node_times.begin());
  if (*it == t || hi == 0) return hi;
  // Strictly closer later node wins; equal distance goes to the earlier one.
  return (*it - t) < (t - node_times[hi - 1]) ? hi : hi - 1;
}

DatasetError::DatasetError(std::string file, std::size_t line, std::size_t column,
                           const std::string& what)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << file;
        if (line > 0) os << ":" << line;
        if (column > 0) os << ":" << column;
        os << ": " << what;
        return os.str();
      }()),
      file_(std::move(file)),
      line_(line),
      column_(column) {}

std::vector<ImuMeasurement> read_imu_csv(const fs::path& file) {
  CsvReader csv(file, kImuHeader, 7);
  MonotoneCheck monotone(csv.name(), true);
  std::vector<ImuMeasurement> out;
  while (csv.next()) {
    ImuMeasurement m;
    m.t = csv.stamp(0);
    m.angular_velocity = csv.vec3(1);
    m.linear_acceleration = csv.vec3(4);
    monotone(m.t, csv.line());
    out.push_back(m);
  }
  return out;
}

std::vector<RadarDopplerMeasurement> read_radar_doppler_csv(const fs::path& file) {
  CsvReader csv(file, kRadarHeader, 6);
  MonotoneCheck monotone(csv.name(), false);
  std::vector<RadarDopplerMeasurement> out;
  while (csv.next()) {
    RadarDopplerMeasurement m;
    m.t = csv.stamp(0);
    m.bearing = csv.vec3(1);
    m.radial_speed = csv.number(4);
    m.sigma = csv.number(5);
    if (std::abs(m.bearing.norm() - 1.0) > 1e-6) {
      throw DatasetError(csv.name(), csv.line(), 2, "bearing is not unit length");
    }
    if (!(m.sigma > 0.0)) throw DatasetError(csv.name(), csv.line(), 6, "sigma must be positive");
    monotone(m.t, csv.line());
    out.push_back(m);
  }
  return out;
}

std::vector<RadarPointCloud> read_radar_cloud_jsonl(const fs::path& file) {
  std::ifstream in(file);
  const std::string name = file.string();
  if (!in) throw DatasetError(name, 0, 0, "cannot open file");
  MonotoneCheck monotone(name, true);
  std::vector<RadarPointCloud> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError(name, line_no, e.byte, "invalid JSON");
    }
    try {
      RadarPointCloud scan;
      scan.t = j.at("t_ns").get<Timestamp>();
      for (const json& p : j.at("points")) {
        scan.points.push_back({Vec3(p.at("x").get<double>(), p.at("y").get<double>(),
                                    p.at("z").get<double>()),
                               p.at("doppler").get<double>()});
      }
      monotone(scan.t, line_no);
      out.push_back(std::move(scan));
    } catch (const json::exception& e) {
      throw DatasetError(name, line_no, 0, std::string("bad scan object: ") + e.what());
    }
  }
  return out;
}

std::vector<LoPoseMeasurement> read_lo_csv(const fs::path& file, const Vec6& sigma) {
  CsvReader csv(file, kLoHeader, 8);
  MonotoneCheck monotone(csv.name(), true);
  std::vector<LoPoseMeasurement> out;
  while (csv.next()) {
    LoPoseMeasurement m;
    m.t = csv.stamp(0);
    m.pose = RigidTransform(rotation_from_wxyz(csv.number(4), csv.number(5), csv.number(6),
                                               csv.number(7), csv.name(), csv.line(), 5),
                            csv.vec3(1));
    m.sigma = sigma;
    monotone(m.t, csv.line());
    out.push_back(m);
  }
  return out;
}

SensorRig read_rig_json(const fs::path& file) {
  std::ifstream in(file);
  const std::string name = file.string();
  if (!in) throw DatasetError(name, 0, 0, "cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DatasetError(name, 0, e.byte, "invalid JSON");
  }
  try {
    SensorRig rig;
    rig.imu_from_radar = json_transform(j.at("radar"), name, "radar");
    rig.imu_from_lidar = json_transform(j.at("lidar"), name, "lidar");
    rig.gravity = json_vec3(j.at("gravity"), name, "gravity");
    return rig;
  } catch (const json::exception& e) {
    throw DatasetError(name, 0, 0, std::string("bad rig: ") + e.what());
  }
}

std::vector<StateSample> read_state_csv(const fs::path& file) {
  CsvReader csv(file, kStateHeader, 17);
  MonotoneCheck monotone(csv.name(), true);
  std::vector<StateSample> out;
  while (csv.next()) {
    StateSample s;
    s.t = csv.stamp(0);
    s.state.pose = RigidTransform(rotation_from_wxyz(csv.number(4), csv.number(5), csv.number(6),
                                                     csv.number(7), csv.name(), csv.line(), 5),
                                  csv.vec3(1));
    s.state.velocity = csv.vec3(8);
    s.state.bias_gyro = csv.vec3(11);
    s.state.bias_accel = csv.vec3(14);
    monotone(s.t, csv.line());
    out.push_back(s);
  }
  return out;
}

void write_imu_csv(const fs::path& file, std::span<const ImuMeasurement> rows) {
  auto out = open_out(file);
  out << kImuHeader << '\n';
  for (const auto& m : rows) {
    out << m.t;
    put(out, m.angular_velocity);
    put(out, m.linear_acceleration);
    out << '\n';
  }
}

void write_radar_doppler_csv(const fs::path& file, std::span<const RadarDopplerMeasurement> rows) {
  auto out = open_out(file);
  out << kRadarHeader << '\n';
  for (const auto& m : rows) {
    out << m.t;
    put(out, m.bearing);
    put(out, m.radial_speed);
    put(out, m.sigma);
    out << '\n';
  }
}

void write_radar_cloud_jsonl(const fs::path& file, std::span<const RadarPointCloud> scans) {
  auto out = open_out(file);
  for (const auto& scan : scans) {
    json points = json::array();
    for (const auto& p : scan.points) {
      points.push_back({{"x", p.position.x()},
                        {"y", p.position.y()},
                        {"z", p.position.z()},
                        {"doppler", p.doppler}});
    }
    out << json{{"t_ns", scan.t}, {"points", std::move(points)}}.dump() << '\n';
  }
}

void write_lo_csv(const fs::path& file, std::span<const LoPoseMeasurement> rows) {
  auto out = open_out(file);
  out << kLoHeader << '\n';
  for (const auto& m : rows) {
    out << m.t;
    put(out, m.pose.translation());
    put_quat(out, m.pose.rotation());
    out << '\n';
  }
}

void write_rig_json(const fs::path& file, const SensorRig& rig) {
  auto out = open_out(file);
  const json j{{"radar", transform_json(rig.imu_from_radar)},
               {"lidar", transform_json(rig.imu_from_lidar)},
               {"gravity", {rig.gravity.x(), rig.gravity.y(), rig.gravity.z()}}};
  out << j.dump(2) << '\n';
}

void write_state_csv(const fs::path& file, std::span<const StateSample> rows) {
  auto out = open_out(file);
  out << kStateHeader << '\n';
  for (const auto& s : rows) {
    out << s.t;
    put(out, s.state.pose.translation());
    put_quat(out, s.state.pose.rotation());
    put(out, s.state.velocity);
    put(out, s.state.bias_gyro);
    put(out, s.state.bias_accel);
    out << '\n';
  }
}

Dataset load_dataset(const fs::path& dir, RadarFormat format, const MeasurementDefaults& defaults) {
  Dataset data;
  const fs::path imu = dir / kImuFile;
  if (!fs::exists(imu)) throw DatasetError(imu.string(), 0, 0, "empty required stream (file missing)");
  data.imu = read_imu_csv(imu);
  if (data.imu.empty()) throw DatasetError(imu.string(), 0, 0, "empty required stream");
  data.rig = read_rig_json(dir / kRigFile);

  const fs::path doppler = dir / kRadarDopplerFile;
  const fs::path cloud = dir / kRadarCloudFile;
  if (format == RadarFormat::kDopplerCsv && !fs::exists(doppler)) {
    throw DatasetError(doppler.string(), 0, 0, "radar doppler stream requested but missing");
  }
  if (format == RadarFormat::kCloudJsonl && !fs::exists(cloud)) {
    throw DatasetError(cloud.string(), 0, 0, "radar cloud stream requested but missing");
  }
  if (format != RadarFormat::kCloudJsonl && fs::exists(doppler)) {
    data.radar = read_radar_doppler_csv(doppler);
  }
  if (format != RadarFormat::kDopplerCsv && fs::exists(cloud)) {
    data.radar_clouds = read_radar_cloud_jsonl(cloud);
  }
  const fs::path lo = dir / kLoFile;
  if (fs::exists(lo)) data.lo = read_lo_csv(lo, defaults.lo_sigma);
  return data;
}

void save_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  write_imu_csv(dir / kImuFile, data.imu);
  if (!data.radar.empty()) write_radar_doppler_csv(dir / kRadarDopplerFile, data.radar);
  if (!data.radar_clouds.empty()) write_radar_cloud_jsonl(dir / kRadarCloudFile, data.radar_clouds);
  if (!data.lo.empty()) write_lo_csv(dir / kLoFile, data.lo);
  write_rig_json(dir / kRigFile, data.rig);
}

std::vector<MeasurementEvent> merge_streams(const Dataset& data) {
  using Kind = MeasurementEvent::Kind;
  std::vector<MeasurementEvent> events;
  events.reserve(data.imu.size() + data.lo.size() + data.radar.size() + data.radar_clouds.size());
  for (std::size_t i = 0; i < data.imu.size(); ++i) events.push_back({data.imu[i].t, Kind::kImu, i});
  for (std::size_t i = 0; i < data.lo.size(); ++i) events.push_back({data.lo[i].t, Kind::kLo, i});
  for (std::size_t i = 0; i < data.radar.size(); ++i) {
    events.push_back({data.radar[i].t, Kind::kRadar, i});
  }
  for (std::size_t i = 0; i < data.radar_clouds.size(); ++i) {
    events.push_back({data.radar_clouds[i].t, Kind::kRadarCloud, i});
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    if (a.t != b.t) return a.t < b.t;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
  return events;
}

}  // namespace lrio
