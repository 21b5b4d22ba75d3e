"""Strict YAML configuration for the planner.

Every key has a documented default (see ``config/planner.example.yaml``).
Unknown keys, wrong types and invariant violations raise SchemaError naming
the dotted key; unreadable YAML raises ParseError.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional

import yaml

from .errors import ParseError, PlanningError, SchemaError
from .evaluation import ClinicalGoals
from .motion import (
    SmoothnessBound,
    UncertaintySet,
    make_states,
    make_uncertainty_set,
    validate_pdf,
)
from .optimizers import BsoParams, CsoParams, FpaParams, LevyConfig
from .optimizers.levy import DEFAULT_LAMBDA
from .phantom import BeamletSet

ALGORITHM_NAMES = ("cso", "fpa", "bso")

Check = Callable[[Any], Optional[str]]


class Field:
    def __init__(self, default: Any, check: Check):
        self.default = default
        self.check = check


def _number(lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False, allow_none=False, allow_inf=False) -> Check:
    def check(v):
        if v is None and allow_none:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return f"expected a number, got {v!r}"
        if math.isnan(v) or (math.isinf(v) and not allow_inf):
            return f"expected a finite number, got {v!r}"
        if v < lo or (lo_open and v == lo) or v > hi or (hi_open and v == hi):
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            return f"{v!r} outside {left}{lo}, {hi}{right}"
        return None

    return check


def _integer(lo: int = 0) -> Check:
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            return f"expected an integer, got {v!r}"
        if v < lo:
            return f"{v} is below the minimum {lo}"
        return None

    return check


def _number_list(min_len: int = 1) -> Check:
    def check(v):
        if not isinstance(v, list) or len(v) < min_len:
            return f"expected a list of at least {min_len} numbers"
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                return f"non-numeric entry {x!r}"
        return None

    return check


def _optional_index_list(v):
    if v is None:
        return None
    if not isinstance(v, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in v):
        return "expected null or a list of state indices"
    return None


def _choice(*options) -> Check:
    return lambda v: None if v in options else f"expected one of {list(options)}, got {v!r}"


def _levy_fields() -> dict:
    return {
        "lambda": Field(DEFAULT_LAMBDA, _number(1.0, 2.0, lo_open=True)),
        "alpha_step": Field(None, _number(0.0, allow_none=True)),
        "s0": Field(0.0, _number(0.0)),
    }


SCHEMA: dict = {
    "phantom": {
        "rows": Field(64, _integer(16)),
        "cols": Field(64, _integer(16)),
        "voxel_size_mm": Field(3.0, _number(0.0, lo_open=True)),
        "preset": Field("default", _choice("default")),
    },
    "beams": {
        "angles_deg": Field([0.0, 72.0, 144.0, 216.0, 288.0], _number_list()),
        "beamlets_per_angle": Field(16, _integer(1)),
        "beamlet_width_mm": Field(5.0, _number(0.0, lo_open=True)),
        "mu_per_mm": Field(0.005, _number(0.0)),
        "sigma_factor": Field(0.6, _number(0.0, lo_open=True)),
        "w_max": Field(10.0, _number(0.0, lo_open=True)),
    },
    "motion": {
        "offsets_mm": Field([-10.0, -5.0, 0.0, 5.0, 10.0], _number_list()),
        "nominal": Field([0.1, 0.2, 0.4, 0.2, 0.1], _number_list()),
        "lower": Field([0.1, 0.1, 0.1, 0.1, 0.1], _number_list()),
        "upper": Field([0.1, 0.1, 0.1, 0.1, 0.1], _number_list()),
        "active_region": Field(None, _optional_index_list),
        "epsilon": Field(None, _number(0.0, allow_none=True, allow_inf=True)),
        "delta": Field(0.0, _number(0.0)),
    },
    "goals": {
        "tumor_low_gy": Field(72.0, _number(0.0, lo_open=True)),
        "tumor_high_gy": Field(80.0, _number(0.0, lo_open=True)),
        "w_under": Field(100.0, _number(0.0)),
        "w_over": Field(50.0, _number(0.0)),
        "w_lung": Field(1.0, _number(0.0)),
        "w_heart": Field(2.0, _number(0.0)),
    },
    "optimizer": {
        "algorithm": Field("cso", _choice(*ALGORITHM_NAMES)),
        "seed": Field(0, _integer(0)),
        "max_iterations": Field(None, lambda v: None if v is None else _integer(0)(v)),
        "cso": {
            "n_nests": Field(25, _integer(2)),
            "pa": Field(0.25, _number(0.0, 1.0)),
            "max_iterations": Field(2000, _integer(0)),
            "levy": _levy_fields(),
        },
        "fpa": {
            "n_flowers": Field(25, _integer(3)),
            "switch_p": Field(0.8, _number(0.0, 1.0)),
            "max_iterations": Field(2000, _integer(0)),
            "levy": _levy_fields(),
        },
        "bso": {
            "n_bats": Field(25, _integer(1)),
            "f_min": Field(0.0, _number()),
            "f_max": Field(2.0, _number()),
            "loudness_a0": Field(1.0, _number(0.0)),
            "loudness_min": Field(0.05, _number(0.0)),
            "pulse_r0": Field(0.5, _number(0.0, 1.0)),
            "alpha_loud": Field(0.9, _number(0.0, 1.0, lo_open=True, hi_open=True)),
            "gamma_pulse": Field(0.9, _number(0.0, lo_open=True)),
            "max_iterations": Field(2000, _integer(0)),
        },
    },
}


def _apply(schema: dict, given: Any, path: str) -> dict:
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise SchemaError(path.rstrip(".") or "<root>", "expected a mapping")
    for key in given:
        if key not in schema:
            raise SchemaError(f"{path}{key}", "unknown key")
    out = {}
    for key, entry in schema.items():
        dotted = f"{path}{key}"
        if isinstance(entry, dict):
            out[key] = _apply(entry, given.get(key), dotted + ".")
            continue
        value = given[key] if key in given else copy.deepcopy(entry.default)
        if isinstance(value, int) and not isinstance(value, bool) and isinstance(entry.default, float):
            value = float(value)
        problem = entry.check(value)
        if problem:
            raise SchemaError(dotted, problem)
        out[key] = value
    return out


def defaults() -> dict:
    return _apply(SCHEMA, {}, "")


@dataclass(frozen=True)
class PlannerConfig:
    raw: dict
    beams: BeamletSet
    uncertainty: UncertaintySet
    goals: ClinicalGoals
    algorithm: str
    seed: int
    params: dict  # algorithm name -> params dataclass

    @property
    def phantom(self) -> dict:
        return self.raw["phantom"]

    @property
    def engine(self) -> dict:
        return self.raw["beams"]

    def with_overrides(self, algorithm: str | None = None, seed: int | None = None) -> "PlannerConfig":
        raw = copy.deepcopy(self.raw)
        if algorithm is not None:
            raw["optimizer"]["algorithm"] = algorithm
        if seed is not None:
            raw["optimizer"]["seed"] = seed
        return build_config(raw)


def _guard(key: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, PlanningError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(key, str(exc)) from exc


def _levy(section: dict, key: str) -> LevyConfig:
    return _guard(key, LevyConfig, lam=section["lambda"], alpha_step=section["alpha_step"], s0=section["s0"])


def build_config(raw: dict) -> PlannerConfig:
    """Validate a fully-defaulted raw mapping and build the domain objects."""
    raw = _apply(SCHEMA, raw, "")
    m = raw["motion"]
    states = _guard("motion.offsets_mm", make_states, m["offsets_mm"])
    for key in ("nominal", "lower", "upper"):
        if len(m[key]) != len(states):
            raise SchemaError(f"motion.{key}", f"needs {len(states)} entries, one per offset")
    nominal = _guard("motion.nominal", validate_pdf, m["nominal"], states)
    epsilon = math.inf if m["epsilon"] is None else float(m["epsilon"])
    smooth = _guard("motion.epsilon", SmoothnessBound, epsilon, m["delta"])
    uset = _guard(
        "motion.lower",
        make_uncertainty_set,
        nominal,
        m["lower"],
        m["upper"],
        active_region=m["active_region"],
        smoothness=smooth,
    )
    if not uset.feasible:
        raise SchemaError("motion.lower", "error bars leave no PDF summing to one")

    b = raw["beams"]
    beams = _guard(
        "beams.angles_deg",
        BeamletSet,
        tuple(b["angles_deg"]),
        b["beamlets_per_angle"],
        b["beamlet_width_mm"],
    )

    g = raw["goals"]
    if not g["tumor_low_gy"] < g["tumor_high_gy"]:
        raise SchemaError("goals.tumor_low_gy", "tumor band needs tumor_low_gy < tumor_high_gy")
    goals = _guard("goals", ClinicalGoals, **g)

    o = raw["optimizer"]
    shared_iters = o["max_iterations"]

    def iters(section):
        return section["max_iterations"] if shared_iters is None else shared_iters

    c, f, bs = o["cso"], o["fpa"], o["bso"]
    if not bs["f_min"] < bs["f_max"]:
        raise SchemaError("optimizer.bso.f_min", "f_min must be below f_max")
    if not bs["loudness_min"] <= bs["loudness_a0"]:
        raise SchemaError("optimizer.bso.loudness_min", "loudness_min must not exceed loudness_a0")
    params = {
        "cso": _guard(
            "optimizer.cso",
            CsoParams,
            n_nests=c["n_nests"],
            pa=c["pa"],
            max_iterations=iters(c),
            levy=_levy(c["levy"], "optimizer.cso.levy"),
        ),
        "fpa": _guard(
            "optimizer.fpa",
            FpaParams,
            n_flowers=f["n_flowers"],
            switch_p=f["switch_p"],
            max_iterations=iters(f),
            levy=_levy(f["levy"], "optimizer.fpa.levy"),
        ),
        "bso": _guard("optimizer.bso", BsoParams, **{**bs, "max_iterations": iters(bs)}),
    }
    return PlannerConfig(
        raw=raw,
        beams=beams,
        uncertainty=uset,
        goals=goals,
        algorithm=o["algorithm"],
        seed=o["seed"],
        params=params,
    )


def parse_config(text: str) -> PlannerConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed configuration: {exc}") from exc
    if doc is None:
        doc = {}
    return build_config(doc)


def load_config(path) -> PlannerConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text)
