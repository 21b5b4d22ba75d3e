"""Breathing-motion PDFs and the error-bar uncertainty set around a nominal PDF.

A motion PDF is a probability mass over a small ordered set of rigid
superior-inferior offsets.  The uncertainty set holds every PDF that stays
inside per-state error bars on an active region, equals the nominal PDF
elsewhere, sums to one and (optionally) obeys a neighbour smoothness bound.
"""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    InfeasibleSet,
    InvalidUncertaintySet,
    NegativeMass,
    NotNormalized,
    SamplingExhausted,
    StateMismatch,
)

SUM_TOL = 1e-9
FIXED_TOL = 1e-12
BOX_TOL = 1e-12

DEFAULT_OFFSETS_MM = (-10.0, -5.0, 0.0, 5.0, 10.0)

# smoothness-active worst case: best of this many seeded draws
SMOOTH_SEARCH_DRAWS = 512
SMOOTH_SEARCH_SEED = 20240601
MAX_SAMPLE_RETRIES = 1000
MAX_REDISTRIBUTE_ROUNDS = 100

Sense = Literal["minimize", "maximize"]


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MotionState:
    index: int
    offset_mm: float


def make_states(offsets_mm: Iterable[float] = DEFAULT_OFFSETS_MM) -> tuple[MotionState, ...]:
    """Build the ordered motion-state list from strictly increasing offsets."""
    offsets = [float(o) for o in offsets_mm]
    if not offsets:
        raise ValueError("at least one motion state is required")
    if any(b <= a for a, b in zip(offsets, offsets[1:])):
        raise ValueError("state offsets must be strictly increasing")
    if 0.0 not in offsets:
        raise ValueError("a reference state with offset 0 mm is required")
    return tuple(MotionState(i, o) for i, o in enumerate(offsets))


def _same_states(a: Sequence[MotionState], b: Sequence[MotionState]) -> bool:
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))


@dataclass(frozen=True)
class RespiratoryPdf:
    states: tuple[MotionState, ...]
    mass: np.ndarray

    def __len__(self) -> int:
        return len(self.states)

    def offsets(self) -> np.ndarray:
        return np.array([s.offset_mm for s in self.states])

    def expectation(self, per_state_value) -> float:
        return float(np.dot(self.mass, np.asarray(per_state_value, dtype=float)))


def validate_pdf(mass, states: Sequence[MotionState]) -> RespiratoryPdf:
    """Check ``mass`` against the PDF invariants and wrap it.

    Raises NegativeMass for any negative entry and NotNormalized when the
    total deviates from one by more than 1e-9.
    """
    arr = np.asarray(mass, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != len(states):
        raise StateMismatch(f"expected {len(states)} masses, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NotNormalized("masses must be finite")
    if np.any(arr < 0):
        raise NegativeMass(f"negative mass at state(s) {np.flatnonzero(arr < 0).tolist()}")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise NotNormalized(f"masses sum to {total!r}, not 1")
    return RespiratoryPdf(tuple(states), _frozen(arr))


@dataclass(frozen=True)
class ErrorBars:
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class SmoothnessBound:
    epsilon: float = math.inf
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon >= 0) or not (self.delta >= 0):
            raise InvalidUncertaintySet("smoothness epsilon and delta must be >= 0")

    @property
    def active(self) -> bool:
        return math.isfinite(self.epsilon)


@dataclass(frozen=True)
class UncertaintySet:
    nominal: RespiratoryPdf
    bars: ErrorBars
    active_region: frozenset[int]
    smoothness: SmoothnessBound = field(default_factory=SmoothnessBound)

    @property
    def states(self) -> tuple[MotionState, ...]:
        return self.nominal.states

    @cached_property
    def box_low(self) -> np.ndarray:
        return _frozen(self.nominal.mass - self.bars.lower)

    @cached_property
    def box_high(self) -> np.ndarray:
        return _frozen(self.nominal.mass + self.bars.upper)

    @cached_property
    def has_zero_bars(self) -> bool:
        return not (np.any(self.bars.lower > 0) or np.any(self.bars.upper > 0))

    @cached_property
    def feasible(self) -> bool:
        return float(self.box_low.sum()) <= 1 + SUM_TOL and float(self.box_high.sum()) >= 1 - SUM_TOL


def make_uncertainty_set(
    nominal: RespiratoryPdf,
    lower,
    upper,
    active_region: Iterable[int] | None = None,
    smoothness: SmoothnessBound | None = None,
) -> UncertaintySet:
    """Assemble and validate an uncertainty set.

    ``active_region`` defaults to every state.  Bars must vanish outside it and
    keep the nominal box inside [0, 1]; the nominal PDF itself must satisfy
    the smoothness bound so that it is a member of its own set.
    """
    n = len(nominal)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != (n,) or hi.shape != (n,):
        raise StateMismatch(f"error bars need {n} entries")
    if np.any(lo < 0) or np.any(hi < 0):
        raise InvalidUncertaintySet("error bars must be nonnegative")
    region = frozenset(range(n)) if active_region is None else frozenset(int(i) for i in active_region)
    if any(i < 0 or i >= n for i in region):
        raise InvalidUncertaintySet("active region index out of range")
    outside = [i for i in range(n) if i not in region]
    if np.any(lo[outside] != 0) or np.any(hi[outside] != 0):
        raise InvalidUncertaintySet("error bars must be zero outside the active region")
    if np.any(nominal.mass - lo < -BOX_TOL):
        raise InvalidUncertaintySet("nominal - lower bar must stay >= 0")
    if np.any(nominal.mass + hi > 1 + BOX_TOL):
        raise InvalidUncertaintySet("nominal + upper bar must stay <= 1")
    uset = UncertaintySet(
        nominal=nominal,
        bars=ErrorBars(_frozen(lo), _frozen(hi)),
        active_region=region,
        smoothness=smoothness or SmoothnessBound(),
    )
    if not _smooth_ok(uset, nominal.mass):
        raise InvalidUncertaintySet("nominal PDF violates the smoothness bound")
    return uset


def _smooth_ok(uset: UncertaintySet, mass: np.ndarray) -> bool:
    sm = uset.smoothness
    if not sm.active:
        return True
    offsets = uset.nominal.offsets()
    close = np.abs(offsets[:, None] - offsets[None, :]) <= sm.delta
    diff = np.abs(mass[:, None] - mass[None, :])
    return bool(np.all(diff[close] <= sm.epsilon + BOX_TOL))


def is_member(uset: UncertaintySet, candidate: RespiratoryPdf) -> bool:
    if not _same_states(uset.states, candidate.states):
        raise StateMismatch("candidate PDF is defined on a different state list")
    m = candidate.mass
    if np.any(m < 0) or abs(float(m.sum()) - 1.0) > SUM_TOL:
        return False
    for i in range(len(m)):
        if i in uset.active_region:
            if m[i] < uset.box_low[i] - BOX_TOL or m[i] > uset.box_high[i] + BOX_TOL:
                return False
        elif abs(m[i] - uset.nominal.mass[i]) > FIXED_TOL:
            return False
    return _smooth_ok(uset, m)


def _check_feasible(uset: UncertaintySet) -> None:
    if uset.feasible:
        return
    lo_total = float(uset.box_low.sum())
    hi_total = float(uset.box_high.sum())
    if lo_total > 1 + SUM_TOL or hi_total < 1 - SUM_TOL:
        raise InfeasibleSet(f"box sums [{lo_total}, {hi_total}] exclude 1")


def _greedy_fill(low: np.ndarray, high: np.ndarray, values: np.ndarray, sense: Sense) -> np.ndarray:
    keyed = values if sense == "minimize" else -values
    order = np.argsort(keyed, kind="stable")
    mass = low.copy()
    room = (high - low).tolist()
    residual = 1.0 - float(mass.sum())
    for i in order.tolist():
        if residual <= 0:
            break
        add = min(room[i], residual)
        mass[i] += add
        residual -= add
    return mass


def worst_case_pdf(uset: UncertaintySet, per_state_value, sense: Sense = "minimize") -> RespiratoryPdf:
    """Member of the set extremizing sum_x p(x) * value(x).

    Without a smoothness bound this is the exact greedy fill of a bounded
    knapsack over the simplex.  With smoothness active the result is the best
    of ``SMOOTH_SEARCH_DRAWS`` seeded member draws (nominal included), which
    is approximate.
    """
    if sense not in ("minimize", "maximize"):
        raise ValueError(f"unknown sense {sense!r}")
    values = np.asarray(per_state_value, dtype=float)
    if values.shape != (len(uset.states),):
        raise StateMismatch("per-state values do not match the state list")
    _check_feasible(uset)
    if uset.has_zero_bars:
        return uset.nominal
    if not uset.smoothness.active:
        mass = _greedy_fill(uset.box_low, uset.box_high, values, sense)
        return RespiratoryPdf(uset.states, _frozen(mass))

    rng = np.random.default_rng(SMOOTH_SEARCH_SEED)
    best = uset.nominal
    best_obj = best.expectation(values)
    sign = 1.0 if sense == "minimize" else -1.0
    for _ in range(SMOOTH_SEARCH_DRAWS):
        cand = sample_member(uset, rng)
        obj = cand.expectation(values)
        if sign * obj < sign * best_obj:
            best, best_obj = cand, obj
    return best


def _redistribute(mass: np.ndarray, low: np.ndarray, high: np.ndarray, free: np.ndarray) -> bool:
    """Push ``mass`` onto the simplex in place, staying inside [low, high].

    The deficit or excess is split across the free states in proportion to
    their remaining headroom toward the relevant bound.
    """
    for _ in range(MAX_REDISTRIBUTE_ROUNDS):
        gap = 1.0 - float(mass.sum())
        if abs(gap) <= SUM_TOL:
            return True
        room = (high - mass) if gap > 0 else (mass - low)
        room = np.where(free, np.maximum(room, 0.0), 0.0)
        total = float(room.sum())
        if total <= 0:
            return False
        step = min(abs(gap), total)
        mass += np.sign(gap) * step * room / total
        np.clip(mass, low, high, out=mass)
    return abs(1.0 - float(mass.sum())) <= SUM_TOL


def sample_member(uset: UncertaintySet, rng: np.random.Generator) -> RespiratoryPdf:
    """Random member: uniform draw inside each active box, then renormalized."""
    _check_feasible(uset)
    if uset.has_zero_bars:
        return uset.nominal
    low, high = uset.box_low, uset.box_high
    free = np.zeros(len(low), dtype=bool)
    free[list(uset.active_region)] = True
    for _ in range(MAX_SAMPLE_RETRIES):
        mass = uset.nominal.mass.copy()
        mass[free] = rng.uniform(low[free], high[free])
        if not _redistribute(mass, low, high, free):
            continue
        if _smooth_ok(uset, mass):
            return RespiratoryPdf(uset.states, _frozen(mass))
    raise SamplingExhausted(f"no admissible member after {MAX_SAMPLE_RETRIES} draws")


def scenario_set(uset: UncertaintySet, per_state_value) -> list[RespiratoryPdf]:
    """[nominal, minimizing PDF, maximizing PDF] with duplicates dropped."""
    bundle = [
        uset.nominal,
        worst_case_pdf(uset, per_state_value, "minimize"),
        worst_case_pdf(uset, per_state_value, "maximize"),
    ]
    unique: list[RespiratoryPdf] = []
    for pdf in bundle:
        if not any(np.max(np.abs(pdf.mass - u.mass)) <= FIXED_TOL for u in unique):
            unique.append(pdf)
    return unique
