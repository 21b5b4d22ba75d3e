"""Dose-volume histograms, structure statistics and the planning objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyStructure
from .motion import RespiratoryPdf, UncertaintySet, scenario_set, worst_case_pdf
from .phantom import HEART, LABEL_CODES, LEFT_LUNG, TUMOR, DoseInfluence, Phantom

DVH_STEP_GY = 0.1
D95_FRACTION = 0.95


@dataclass(frozen=True)
class ClinicalGoals:
    tumor_low_gy: float = 72.0
    tumor_high_gy: float = 80.0
    w_under: float = 100.0
    w_over: float = 50.0
    w_lung: float = 1.0
    w_heart: float = 2.0

    def __post_init__(self):
        if not (0 < self.tumor_low_gy < self.tumor_high_gy):
            raise ValueError("tumor band needs 0 < tumor_low_gy < tumor_high_gy")
        for name in ("w_under", "w_over", "w_lung", "w_heart"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class DvhCurve:
    structure: str
    bin_edges_gy: np.ndarray
    volume_fraction: np.ndarray


@dataclass(frozen=True)
class DoseStats:
    mean_gy: float
    min_gy: float
    max_gy: float
    d95_gy: float


def _structure_dose(dose, phantom: Phantom, structure: str) -> np.ndarray:
    d = np.asarray(dose, dtype=float).ravel()
    if d.size != phantom.n_voxels:
        raise DimensionMismatch(f"dose has {d.size} voxels, phantom has {phantom.n_voxels}")
    if structure not in LABEL_CODES or not (mask := phantom.mask(structure)).any():
        raise EmptyStructure(f"structure {structure!r} has no voxels")
    return d[mask]


def dvh_from_values(values: np.ndarray, structure: str = "") -> DvhCurve:
    """Cumulative DVH of a set of voxel doses on the fixed 0.1 Gy grid.

    Thresholds run from 0 up to ceil(max dose); each fraction counts voxels
    with dose >= threshold.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyStructure(f"structure {structure!r} has no voxels")
    top = math.ceil(float(values.max()))
    # k / 10 keeps integer thresholds exact (76.0, not 76.00000000000001)
    edges = np.arange(int(round(top / DVH_STEP_GY)) + 1) / round(1 / DVH_STEP_GY)
    ordered = np.sort(values)
    below = np.searchsorted(ordered, edges, side="left")
    fraction = (values.size - below) / values.size
    return DvhCurve(structure, edges, fraction)


def dvh(dose, phantom: Phantom, structure: str) -> DvhCurve:
    return dvh_from_values(_structure_dose(dose, phantom, structure), structure)


def dose_stats(dose, phantom: Phantom, structure: str) -> DoseStats:
    values = _structure_dose(dose, phantom, structure)
    curve = dvh_from_values(values, structure)
    covered = curve.bin_edges_gy[curve.volume_fraction >= D95_FRACTION]
    return DoseStats(
        mean_gy=float(values.mean()),
        min_gy=float(values.min()),
        max_gy=float(values.max()),
        d95_gy=float(covered[-1]),
    )


def _band_penalty(tumor: np.ndarray, goals: ClinicalGoals) -> float:
    under = np.maximum(0.0, goals.tumor_low_gy - tumor)
    over = np.maximum(0.0, tumor - goals.tumor_high_gy)
    return goals.w_under * float(np.mean(under**2)) + goals.w_over * float(np.mean(over**2))


def clinical_penalty(dose, phantom: Phantom, goals: ClinicalGoals) -> float:
    """Quadratic tumor-band penalty plus weighted mean lung and heart dose."""
    tumor = _structure_dose(dose, phantom, TUMOR)
    lung = _structure_dose(dose, phantom, LEFT_LUNG)
    heart = _structure_dose(dose, phantom, HEART)
    return (
        _band_penalty(tumor, goals)
        + goals.w_lung * float(lung.mean())
        + goals.w_heart * float(heart.mean())
    )


class PlanObjective:
    """Robust fitness of a beamlet-weight vector, cached for optimizer loops.

    Only tumor, lung and heart voxels are evaluated, which is all the
    penalty reads.  The fitness is the worst clinical penalty over the
    scenario bundle of the uncertainty set, where the bundle's extreme PDFs
    are chosen from the plan's per-state mean tumor dose.
    """

    def __init__(self, influence: DoseInfluence, phantom: Phantom, uset: UncertaintySet, goals: ClinicalGoals):
        self.influence = influence
        self.phantom = phantom
        self.uset = uset
        self.goals = goals
        self._tumor = np.flatnonzero(phantom.mask(TUMOR))
        self._lung = np.flatnonzero(phantom.mask(LEFT_LUNG))
        self._heart = np.flatnonzero(phantom.mask(HEART))
        for name, idx in ((TUMOR, self._tumor), (LEFT_LUNG, self._lung), (HEART, self._heart)):
            if idx.size == 0:
                raise EmptyStructure(f"structure {name!r} has no voxels")
        voxels = np.concatenate([self._tumor, self._lung, self._heart])
        n_t, n_l = self._tumor.size, self._lung.size
        self._slices = (slice(0, n_t), slice(n_t, n_t + n_l), slice(n_t + n_l, None))
        # compact copy of just the reference rows these voxels ever read
        src = influence.source_index[:, voxels]
        rows = np.unique(src[src >= 0])
        self._sub = np.ascontiguousarray(influence.base[rows])
        self._gather = np.where(src >= 0, np.searchsorted(rows, src), rows.size)

    def state_doses(self, weights) -> np.ndarray:
        """Per-state dose on tumor, lung and heart voxels (in that order)."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self._sub.shape[1],):
            raise DimensionMismatch(f"plan has {w.shape} weights, engine has {self._sub.shape[1]} beamlets")
        return np.append(self._sub @ w, 0.0)[self._gather]

    def _tumor_means(self, per_state: np.ndarray) -> np.ndarray:
        return per_state[:, self._slices[0]].mean(axis=1)

    def scenarios(self, weights) -> list[RespiratoryPdf]:
        return scenario_set(self.uset, self._tumor_means(self.state_doses(weights)))

    def extreme_scenarios(self, weights) -> dict[str, RespiratoryPdf]:
        """Named nominal / underdose / overdose PDFs for reporting."""
        tumor_means = self._tumor_means(self.state_doses(weights))
        return {
            "nominal": self.uset.nominal,
            "underdose": worst_case_pdf(self.uset, tumor_means, "minimize"),
            "overdose": worst_case_pdf(self.uset, tumor_means, "maximize"),
        }

    def penalty_under(self, weights, pdf: RespiratoryPdf) -> float:
        return float(self._penalties(pdf.mass[None, :] @ self.state_doses(weights))[0])

    def _penalties(self, doses: np.ndarray) -> np.ndarray:
        """Clinical penalty of each row of ``doses`` (one row per scenario)."""
        g = self.goals
        t_sl, l_sl, h_sl = self._slices
        tumor = doses[:, t_sl]
        under = np.maximum(0.0, g.tumor_low_gy - tumor)
        over = np.maximum(0.0, tumor - g.tumor_high_gy)
        # overflow surfaces as a non-finite fitness, reported by the optimizer
        with np.errstate(over="ignore", invalid="ignore"):
            return (
                g.w_under * (under**2).mean(axis=1)
                + g.w_over * (over**2).mean(axis=1)
                + g.w_lung * doses[:, l_sl].mean(axis=1)
                + g.w_heart * doses[:, h_sl].mean(axis=1)
            )

    def __call__(self, weights) -> float:
        per_state = self.state_doses(weights)
        pdfs = scenario_set(self.uset, self._tumor_means(per_state))
        masses = np.array([p.mass for p in pdfs])
        return float(self._penalties(masses @ per_state).max())


def robust_fitness(plan, influence: DoseInfluence, uset: UncertaintySet, goals: ClinicalGoals, phantom: Phantom) -> float:
    """Worst clinical penalty over the plan's scenario bundle.

    ``phantom`` supplies the structure labels; it is needed to know which
    voxels are tumor, lung and heart.
    """
    weights = plan.weights if hasattr(plan, "weights") else plan
    return PlanObjective(influence, phantom, uset, goals)(weights)
