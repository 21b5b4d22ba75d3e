from .base import OptimizationResult, SearchSpace
from .benchmarks import BENCHMARKS, evaluate_benchmark
from .bso import BsoParams, bso_minimize
from .cso import CsoParams, cso_minimize
from .fpa import FpaParams, fpa_minimize
from .levy import LevyConfig, levy_sigma_u, levy_step

ALGORITHMS = {
    "cso": (cso_minimize, CsoParams),
    "fpa": (fpa_minimize, FpaParams),
    "bso": (bso_minimize, BsoParams),
}

__all__ = [
    "ALGORITHMS",
    "BENCHMARKS",
    "BsoParams",
    "CsoParams",
    "FpaParams",
    "LevyConfig",
    "OptimizationResult",
    "SearchSpace",
    "bso_minimize",
    "cso_minimize",
    "evaluate_benchmark",
    "fpa_minimize",
    "levy_sigma_u",
    "levy_step",
]
