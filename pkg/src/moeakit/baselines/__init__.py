"""Reference multi-objective algorithms sharing the core types and problem backends."""
from .common import (
    ConfigError,
    EAConfig,
    crowding_distance,
    das_dennis,
    das_dennis_count,
    fast_non_dominated_sort,
    partitions_for,
    perpendicular_distances,
)
from .moead import MoeadConfig, moead_run
from .nsga2 import Nsga2Config, nsga2_run
from .ntga2 import Ntga2Config, ntga2_run
from .spea2 import Spea2Config, spea2_run
from .thetadea import ThetaDeaConfig, thetadea_run
from .unsga3 import UNsga3Config, unsga3_run

__all__ = [
    "ConfigError",
    "EAConfig",
    "MoeadConfig",
    "Nsga2Config",
    "Ntga2Config",
    "Spea2Config",
    "ThetaDeaConfig",
    "UNsga3Config",
    "crowding_distance",
    "das_dennis",
    "das_dennis_count",
    "fast_non_dominated_sort",
    "moead_run",
    "nsga2_run",
    "ntga2_run",
    "partitions_for",
    "perpendicular_distances",
    "spea2_run",
    "thetadea_run",
    "unsga3_run",
]
