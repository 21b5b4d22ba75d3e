"""Flower pollination algorithm.

Every flower moves once per iteration: with probability ``switch_p`` a global
Levy-scaled pull toward the best flower, otherwise a local step along the
difference of two other random flowers.  Moves are greedy.
Evaluations: n + max_iterations * n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .base import BatchMap, Callback, Objective, OptimizationResult, SearchSpace, _Tracker
from .levy import LevyConfig, levy_step


@dataclass(frozen=True)
class FpaParams:
    n_flowers: int = 25
    switch_p: float = 0.8
    max_iterations: int = 2000
    levy: LevyConfig = field(default_factory=LevyConfig)

    def __post_init__(self):
        if self.n_flowers < 3:
            raise ValueError("n_flowers must be >= 3 (local moves need two other flowers)")
        if not (0.0 <= self.switch_p <= 1.0):
            raise ValueError("switch_p must lie in [0, 1]")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")

    def evaluation_budget(self) -> int:
        return self.n_flowers * (1 + self.max_iterations)


def global_pollination(x: np.ndarray, best: np.ndarray, step: np.ndarray) -> np.ndarray:
    return x + step * (best - x)


def local_pollination(x: np.ndarray, xj: np.ndarray, xk: np.ndarray, eps: float) -> np.ndarray:
    return x + eps * (xj - xk)


def fpa_minimize(
    objective: Objective,
    space: SearchSpace,
    params: FpaParams = FpaParams(),
    seed: int = 0,
    batch_map: Optional[BatchMap] = None,
    callback: Optional[Callback] = None,
) -> OptimizationResult:
    rng = np.random.default_rng(seed)
    track = _Tracker(objective, batch_map)
    n = params.n_flowers

    flowers = space.uniform(rng, n)
    fitness = track.evaluate(flowers)
    track.close_iteration()
    if callback:
        callback(0, flowers)

    for t in range(1, params.max_iterations + 1):
        g_best = track.best_point
        trial = np.empty_like(flowers)
        for i in range(n):
            if rng.random() < params.switch_p:
                step = levy_step(rng, params.levy, space.dim, space.span)
                trial[i] = global_pollination(flowers[i], g_best, step)
            else:
                j, k = rng.choice(n, size=2, replace=False)
                trial[i] = local_pollination(flowers[i], flowers[j], flowers[k], rng.random())
        trial = space.clip(trial)
        f_trial = track.evaluate(trial)
        better = f_trial < fitness
        flowers[better] = trial[better]
        fitness[better] = f_trial[better]

        track.close_iteration()
        if callback:
            callback(t, flowers)

    return track.result(seed, "fpa")
