#include "lrio/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/SVD>

namespace lrio {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

void require_records(std::span<const TrajectoryRecord> records, std::size_t n, const char* what) {
  if (records.size() < n) {
    throw std::invalid_argument(std::string(what) + ": need at least " + std::to_string(n) +
                                " records, got " + std::to_string(records.size()));
  }
}

}  // namespace

std::vector<TrajectoryRecord> associate_trajectories(std::span<const StateSample> truth,
                                                     std::span<const StateSample> estimate,
                                                     Timestamp max_gap) {
  if (truth.empty() || estimate.empty()) return {};
  if (max_gap <= 0) {
    if (estimate.size() < 2) {
      max_gap = 0;
    } else {
      std::vector<Timestamp> gaps;
      gaps.reserve(estimate.size() - 1);
      for (std::size_t i = 1; i < estimate.size(); ++i) gaps.push_back(estimate[i].t - estimate[i - 1].t);
      std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                       gaps.end());
      max_gap = gaps[gaps.size() / 2] / 2;
    }
  }
  std::vector<TrajectoryRecord> out;
  out.reserve(estimate.size());
  std::size_t j = 0;
  for (const auto& e : estimate) {
    while (j + 1 < truth.size() && truth[j + 1].t <= e.t) ++j;
    std::size_t best = j;
    if (j + 1 < truth.size() && std::llabs(truth[j + 1].t - e.t) < std::llabs(truth[j].t - e.t)) {
      best = j + 1;
    }
    if (std::llabs(truth[best].t - e.t) <= max_gap) out.push_back({e.t, truth[best].state, e.state});
  }
  return out;
}

ErrorStats error_stats(std::vector<double> errors) {
  if (errors.empty()) throw std::invalid_argument("error_stats: no samples");
  ErrorStats s;
  s.count = errors.size();
  const double n = static_cast<double>(errors.size());
  double sum = 0.0, sum_sq = 0.0;
  for (double e : errors) {
    sum += e;
    sum_sq += e * e;
    s.max = std::max(s.max, std::abs(e));
  }
  s.mean = sum / n;
  s.rmse = std::sqrt(sum_sq / n);
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(var / n);
  std::sort(errors.begin(), errors.end());
  const std::size_t m = errors.size() / 2;
  s.median = errors.size() % 2 == 1 ? errors[m] : 0.5 * (errors[m - 1] + errors[m]);
  return s;
}

RigidTransform umeyama_se3(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size() || src.size() < 3) {
    throw std::invalid_argument("umeyama_se3: need >= 3 corresponding points");
  }
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= static_cast<double>(src.size());
  mu_d /= static_cast<double>(dst.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) cov += (dst[i] - mu_d) * (src[i] - mu_s).transpose();
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * s * svd.matrixV().transpose();
  return RigidTransform(Rotation::from_matrix(r), mu_d - r * mu_s);
}

ApeResult ape(std::span<const TrajectoryRecord> records, Alignment align) {
  require_records(records, 2, "ape");
  RigidTransform correction;
  if (align == Alignment::kSe3Umeyama) {
    std::vector<Vec3> src, dst;
    src.reserve(records.size());
    dst.reserve(records.size());
    for (const auto& r : records) {
      src.push_back(r.estimate.pose.translation());
      dst.push_back(r.truth.pose.translation());
    }
    correction = umeyama_se3(src, dst);
  }
  std::vector<double> trans, rot;
  trans.reserve(records.size());
  rot.reserve(records.size());
  for (const auto& r : records) {
    const RigidTransform est = correction * r.estimate.pose;
    trans.push_back((est.translation() - r.truth.pose.translation()).norm());
    rot.push_back((r.truth.pose.rotation().inverse() * est.rotation()).log().norm() * kRadToDeg);
  }
  return {error_stats(std::move(trans)), error_stats(std::move(rot))};
}

std::vector<double> arc_length(std::span<const TrajectoryRecord> records) {
  std::vector<double> s(records.size(), 0.0);
  for (std::size_t i = 1; i < records.size(); ++i) {
    s[i] = s[i - 1] +
           (records[i].truth.pose.translation() - records[i - 1].truth.pose.translation()).norm();
  }
  return s;
}

RpeResult rpe(std::span<const TrajectoryRecord> records, double delta) {
  require_records(records, 2, "rpe");
  if (!(delta > 0.0)) throw std::invalid_argument("rpe: delta must be > 0");
  const std::vector<double> s = arc_length(records);
  if (s.back() < delta) {
    throw std::invalid_argument("rpe: trajectory length " + std::to_string(s.back()) +
                                " m is shorter than delta " + std::to_string(delta) + " m");
  }
  const double tol = 0.05 * delta;
  std::vector<double> trans, rot;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double target = s[i] + delta;
    const auto it = std::lower_bound(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(), target);
    std::size_t j = static_cast<std::size_t>(it - s.begin());
    if (j == records.size()) j = records.size() - 1;
    if (j > i + 1 && std::abs(s[j - 1] - target) < std::abs(s[j] - target)) --j;
    if (j <= i || std::abs(s[j] - target) > tol) continue;
    const RigidTransform rel_true = records[i].truth.pose.inverse() * records[j].truth.pose;
    const RigidTransform rel_est = records[i].estimate.pose.inverse() * records[j].estimate.pose;
    const RigidTransform err = rel_true.inverse() * rel_est;
    trans.push_back(err.translation().norm());
    rot.push_back(err.rotation().log().norm() * kRadToDeg);
  }
  if (trans.empty()) throw std::invalid_argument("rpe: no sample pairs within 5% of delta");
  RpeResult out;
  out.delta = delta;
  std::vector<double> percent(trans.size());
  for (std::size_t i = 0; i < trans.size(); ++i) percent[i] = 100.0 * trans[i] / delta;
  out.trans = error_stats(std::move(trans));
  out.trans_percent = error_stats(std::move(percent));
  out.rot_deg = error_stats(std::move(rot));
  return out;
}

VelocityErrorResult body_velocity_error(std::span<const TrajectoryRecord> records) {
  require_records(records, 1, "body_velocity_error");
  std::vector<double> fwd, lat;
  fwd.reserve(records.size());
  lat.reserve(records.size());
  for (const auto& r : records) {
    const Vec3 e = r.truth.pose.rotation().inverse() * Vec3(r.estimate.velocity - r.truth.velocity);
    fwd.push_back(e.x());
    lat.push_back(e.y());
  }
  return {error_stats(std::move(fwd)), error_stats(std::move(lat))};
}

}  // namespace lrio
