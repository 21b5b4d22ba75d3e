"""Mantegna sampler for Levy-flight steps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import LambdaOutOfRange

DEFAULT_LAMBDA = 1.5
DEFAULT_ALPHA_FRACTION = 0.01  # alpha = 0.01 * (upper - lower) unless given


def levy_sigma_u(lam: float) -> float:
    """Scale of the numerator normal in Mantegna's method (the denominator's is 1).

    sigma_u = [G(1+l) sin(pi l / 2) / (G((1+l)/2) l 2^((l-1)/2))]^(1/l).
    The bracket turns negative for l > 2, so only 1 <= l <= 2 is accepted.
    """
    if not (1.0 <= lam <= 2.0):
        raise LambdaOutOfRange(f"lambda={lam} outside [1, 2] where the Mantegna scale is defined")
    # sin(pi l / 2) == sin(pi (2 - l) / 2); the second form is exactly 0 at l = 2
    num = math.gamma(1.0 + lam) * math.sin(math.pi * (2.0 - lam) / 2.0)
    den = math.gamma((1.0 + lam) / 2.0) * lam * 2.0 ** ((lam - 1.0) / 2.0)
    return (num / den) ** (1.0 / lam)


@dataclass(frozen=True)
class LevyConfig:
    lam: float = DEFAULT_LAMBDA
    alpha_step: Optional[float] = None
    s0: float = 0.0

    def __post_init__(self):
        if not (1.0 < self.lam <= 2.0):
            raise LambdaOutOfRange(f"lambda={self.lam} outside (1, 2]")
        if self.alpha_step is not None and self.alpha_step < 0:
            raise ValueError("alpha_step must be >= 0")
        if self.s0 < 0:
            raise ValueError("s0 must be >= 0")

    def alpha(self, span=None):
        if self.alpha_step is not None:
            return self.alpha_step
        return DEFAULT_ALPHA_FRACTION * (1.0 if span is None else np.asarray(span, dtype=float))


def levy_step(rng: np.random.Generator, cfg: LevyConfig, dim: int, span=None) -> np.ndarray:
    """One ``dim``-vector of Levy steps scaled by alpha.

    Raw steps are u / |v|^(1/lambda); with ``s0 > 0`` any component whose raw
    magnitude falls below ``s0`` is redrawn.
    """
    sigma_u = levy_sigma_u(cfg.lam)
    u = rng.normal(0.0, sigma_u, dim)
    v = rng.normal(0.0, 1.0, dim)
    raw = u / np.abs(v) ** (1.0 / cfg.lam)
    if cfg.s0 > 0:
        small = np.abs(raw) < cfg.s0
        while small.any():
            k = int(small.sum())
            raw[small] = rng.normal(0.0, sigma_u, k) / np.abs(rng.normal(0.0, 1.0, k)) ** (1.0 / cfg.lam)
            small = np.abs(raw) < cfg.s0
    return cfg.alpha(span) * raw
