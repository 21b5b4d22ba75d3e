"""Cuckoo search with Levy flights.

Each iteration lays one egg: a random cuckoo takes a Levy flight and the
result replaces a random nest if it is fitter.  The worst ceil(pa * n) nests
are then abandoned and rebuilt by a differential move among the surviving
nests.  Evaluations: n + max_iterations * (1 + ceil(pa * n)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .base import BatchMap, Callback, Objective, OptimizationResult, SearchSpace, _Tracker
from .levy import LevyConfig, levy_step


@dataclass(frozen=True)
class CsoParams:
    n_nests: int = 25
    pa: float = 0.25
    max_iterations: int = 2000
    levy: LevyConfig = field(default_factory=LevyConfig)

    def __post_init__(self):
        if self.n_nests < 2:
            raise ValueError("n_nests must be >= 2")
        if not (0.0 <= self.pa <= 1.0):
            raise ValueError("pa must lie in [0, 1]")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")

    def evaluation_budget(self) -> int:
        return self.n_nests + self.max_iterations * (1 + math.ceil(self.pa * self.n_nests))


def cso_minimize(
    objective: Objective,
    space: SearchSpace,
    params: CsoParams = CsoParams(),
    seed: int = 0,
    batch_map: Optional[BatchMap] = None,
    callback: Optional[Callback] = None,
) -> OptimizationResult:
    rng = np.random.default_rng(seed)
    track = _Tracker(objective, batch_map)
    n = params.n_nests
    n_abandon = math.ceil(params.pa * n)

    nests = space.uniform(rng, n)
    fitness = track.evaluate(nests)
    track.close_iteration()
    if callback:
        callback(0, nests)

    for t in range(1, params.max_iterations + 1):
        i = rng.integers(n)
        egg = space.clip(nests[i] + levy_step(rng, params.levy, space.dim, space.span))
        j = rng.integers(n)
        f_egg = track.evaluate(egg[None, :])[0]
        if f_egg < fitness[j]:
            nests[j] = egg
            fitness[j] = f_egg

        if n_abandon:
            order = np.argsort(fitness, kind="stable")
            worst = order[n - n_abandon:]
            pool = order[: n - n_abandon] if n_abandon < n else order
            picks = pool[rng.integers(len(pool), size=(n_abandon, 3))]
            step = rng.random((n_abandon, space.dim))
            fresh = space.clip(nests[picks[:, 0]] + step * (nests[picks[:, 1]] - nests[picks[:, 2]]))
            nests[worst] = fresh
            fitness[worst] = track.evaluate(fresh)

        track.close_iteration()
        if callback:
            callback(t, nests)

    return track.result(seed, "cso")
