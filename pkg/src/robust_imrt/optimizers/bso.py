"""Bat search.

Frequency-tuned velocity updates pull each bat relative to the best bat;
when a uniform draw exceeds the bat's pulse rate the candidate is replaced
by a loudness-scaled random walk around the best.  A candidate is kept only
if a second draw falls below the bat's loudness and it improves that bat;
keeping one quietens the bat and raises its pulse rate.
Evaluations: n + max_iterations * n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import BatchMap, Callback, Objective, OptimizationResult, SearchSpace, _Tracker


@dataclass(frozen=True)
class BsoParams:
    n_bats: int = 25
    f_min: float = 0.0
    f_max: float = 2.0
    loudness_a0: float = 1.0
    loudness_min: float = 0.05
    pulse_r0: float = 0.5
    alpha_loud: float = 0.9
    gamma_pulse: float = 0.9
    max_iterations: int = 2000

    def __post_init__(self):
        if self.n_bats < 1:
            raise ValueError("n_bats must be >= 1")
        if not (self.f_min < self.f_max):
            raise ValueError("f_min must be below f_max")
        if not (0.0 < self.alpha_loud < 1.0):
            raise ValueError("alpha_loud must lie in (0, 1)")
        if not (self.gamma_pulse > 0.0):
            raise ValueError("gamma_pulse must be > 0")
        if not (0.0 <= self.loudness_min <= self.loudness_a0):
            raise ValueError("need 0 <= loudness_min <= loudness_a0")
        if not (0.0 <= self.pulse_r0 <= 1.0):
            raise ValueError("pulse_r0 must lie in [0, 1]")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")

    def evaluation_budget(self) -> int:
        return self.n_bats * (1 + self.max_iterations)


def frequency(params: BsoParams, beta) -> np.ndarray:
    return params.f_min + (params.f_max - params.f_min) * np.asarray(beta)


def velocity_update(v: np.ndarray, x: np.ndarray, best: np.ndarray, freq) -> np.ndarray:
    return v + (x - best) * freq


def pulse_rate(params: BsoParams, t: int) -> float:
    return params.pulse_r0 * (1.0 - math.exp(-params.gamma_pulse * t))


def bso_minimize(
    objective: Objective,
    space: SearchSpace,
    params: BsoParams = BsoParams(),
    seed: int = 0,
    batch_map: Optional[BatchMap] = None,
    callback: Optional[Callback] = None,
) -> OptimizationResult:
    rng = np.random.default_rng(seed)
    track = _Tracker(objective, batch_map)
    n, d = params.n_bats, space.dim

    bats = space.uniform(rng, n)
    velocity = np.zeros((n, d))
    loudness = np.full(n, params.loudness_a0)
    pulse = np.full(n, pulse_rate(params, 0))
    fitness = track.evaluate(bats)
    track.close_iteration()
    if callback:
        callback(0, bats)

    loud_trace = [loudness.copy()]
    pulse_trace = [pulse.copy()]
    for t in range(1, params.max_iterations + 1):
        best = track.best_point
        freq = frequency(params, rng.random((n, d)))
        velocity = velocity_update(velocity, bats, best, freq)
        cand = space.clip(bats + velocity)
        walk = rng.random(n) > pulse
        if walk.any():
            eps = rng.uniform(-1.0, 1.0, (int(walk.sum()), d))
            cand[walk] = space.clip(best + eps * loudness.mean())
        gate = rng.random(n)
        f_cand = track.evaluate(cand)

        keep = (gate < loudness) & (f_cand < fitness)
        bats[keep] = cand[keep]
        fitness[keep] = f_cand[keep]
        loudness[keep] = np.maximum(params.alpha_loud * loudness[keep], params.loudness_min)
        pulse[keep] = pulse_rate(params, t)

        track.close_iteration()
        loud_trace.append(loudness.copy())
        pulse_trace.append(pulse.copy())
        if callback:
            callback(t, cand)

    return track.result(seed, "bso", loudness=np.array(loud_trace), pulse=np.array(pulse_trace))
