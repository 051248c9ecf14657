"""Fixed-lag radar/IMU/LiDAR-odometry smoother, simulator and evaluation."""

from ._lrio import (
    ConfigError,
    DatasetError,
    DegenerateGeometryError,
    FixedLagSmoother,
    NoConsensusError,
    NonFiniteCostError,
    SmootherConfig,
    estimate,
    evaluate,
    ransac_velocity,
    run,
    se3_exp,
    se3_log,
    simulate,
    so3_exp,
    so3_log,
)

__all__ = [
    "ConfigError",
    "DatasetError",
    "DegenerateGeometryError",
    "FixedLagSmoother",
    "NoConsensusError",
    "NonFiniteCostError",
    "SmootherConfig",
    "estimate",
    "evaluate",
    "ransac_velocity",
    "run",
    "se3_exp",
    "se3_log",
    "simulate",
    "so3_exp",
    "so3_log",
]
