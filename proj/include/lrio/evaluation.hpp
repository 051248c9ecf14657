#pragma once

#include <span>
#include <vector>

#include "lrio/measurement.hpp"

namespace lrio {

/// Truth and estimate at one associated timestamp.
struct TrajectoryRecord {
  Timestamp t = 0;
  NavState truth;
  NavState estimate;
};

/// Pairs every estimate sample with the nearest truth sample. Pairs further
/// apart than `max_gap` are skipped; max_gap <= 0 uses half the median
/// estimate period. Both inputs must be sorted.
std::vector<TrajectoryRecord> associate_trajectories(std::span<const StateSample> truth,
                                                     std::span<const StateSample> estimate,
                                                     Timestamp max_gap = 0);

struct ErrorStats {
  double rmse = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double median = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Statistics of a list of errors. Throws std::invalid_argument on empty input.
ErrorStats error_stats(std::vector<double> errors);

enum class Alignment { kNone, kSe3Umeyama };

/// Rigid transform minimizing sum |dst - (R src + t)|^2.
RigidTransform umeyama_se3(std::span<const Vec3> src, std::span<const Vec3> dst);

struct ApeResult {
  ErrorStats trans;    // m
  ErrorStats rot_deg;  // deg
};

ApeResult ape(std::span<const TrajectoryRecord> records, Alignment align = Alignment::kNone);

struct RpeResult {
  double delta = 0.0;           // m
  ErrorStats trans;             // m
  ErrorStats trans_percent;     // % of delta
  ErrorStats rot_deg;           // deg
};

/// Relative pose error over truth arc length `delta`; pairs whose arc length
/// is off by more than 5% are skipped.
RpeResult rpe(std::span<const TrajectoryRecord> records, double delta);

struct VelocityErrorResult {
  ErrorStats forward;  // m/s, truth body x
  ErrorStats lateral;  // m/s, truth body y
};

VelocityErrorResult body_velocity_error(std::span<const TrajectoryRecord> records);

/// Cumulative truth path length at each record.
std::vector<double> arc_length(std::span<const TrajectoryRecord> records);

}  // namespace lrio
