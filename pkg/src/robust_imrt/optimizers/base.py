"""Search-space and result types shared by the population optimizers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from ..errors import ObjectiveNonFinite

Objective = Callable[[np.ndarray], float]
# map-like: (objective, points) -> iterable of values, in order
BatchMap = Callable[[Objective, Iterable[np.ndarray]], Iterable[float]]
# called after every iteration with (iteration, population array)
Callback = Callable[[int, np.ndarray], None]


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).ravel()
        hi = np.array(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper bounds need the same nonzero length")
        if np.any(lo >= hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def box(cls, dim: int, low: float, high: float) -> "SearchSpace":
        return cls(np.full(dim, low, dtype=float), np.full(dim, high, dtype=float))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + rng.random((n, self.dim)) * self.span


@dataclass
class OptimizationResult:
    best_point: np.ndarray
    best_value: float
    history: list[float]
    evaluations: int
    seed: int
    algorithm: str = ""
    extras: dict = field(default_factory=dict)


class _Tracker:
    """Counts evaluations, rejects non-finite values and keeps the elite."""

    def __init__(self, objective: Objective, batch_map: Optional[BatchMap]):
        self.objective = objective
        self.batch_map = batch_map or map
        self.evaluations = 0
        self.best_point: np.ndarray | None = None
        self.best_value = np.inf
        self.history: list[float] = []

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        values = np.array(list(self.batch_map(self.objective, list(points))), dtype=float)
        self.evaluations += len(points)
        bad = ~np.isfinite(values)
        if bad.any():
            raise ObjectiveNonFinite(f"objective returned {values[bad][0]} at {points[bad][0].tolist()}")
        k = int(np.argmin(values))
        if values[k] < self.best_value:
            self.best_value = float(values[k])
            self.best_point = points[k].copy()
        return values

    def close_iteration(self) -> None:
        self.history.append(self.best_value)

    def result(self, seed: int, algorithm: str, **extras) -> OptimizationResult:
        return OptimizationResult(
            best_point=self.best_point,
            best_value=self.best_value,
            history=self.history,
            evaluations=self.evaluations,
            seed=seed,
            algorithm=algorithm,
            extras=extras,
        )
