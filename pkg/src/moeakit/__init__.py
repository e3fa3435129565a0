"""Multi-objective evolutionary toolkit: archive-balanced gap selection, reference MOEAs,
MS-RCPSP and TTP backends, and front quality measures."""
from .bntga import BntgaConfig, run_bntga
from .core import Archive, ContractError, Individual, Problem, RunResult, dominates, nondominated_filter
from .selection import BalanceParams

__version__ = "0.1.0"

__all__ = [
    "Archive",
    "BalanceParams",
    "BntgaConfig",
    "ContractError",
    "Individual",
    "Problem",
    "RunResult",
    "dominates",
    "nondominated_filter",
    "run_bntga",
]
