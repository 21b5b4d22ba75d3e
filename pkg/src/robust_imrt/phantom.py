"""Synthetic 2-D thorax phantom and a pencil-beam dose engine with rigid motion.

The slice is coronal: rows run superior to inferior (the breathing axis) and
columns run across the patient.  Each beamlet deposits dose along straight
rays with exponential depth attenuation and a Gaussian lateral penumbra.
Breathing is modelled as a rigid row shift of the whole dose pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, GridTooSmall, StateMismatch
from .motion import MotionState, RespiratoryPdf

TUMOR = "tumor"
LEFT_LUNG = "left_lung"
HEART = "heart"
NORMAL = "normal"
LABELS = (NORMAL, LEFT_LUNG, HEART, TUMOR)
LABEL_CODES = {name: code for code, name in enumerate(LABELS)}

MIN_GRID = 16
TUMOR_RADIUS_VOX = 4

DEFAULT_MU_PER_MM = 0.005
DEFAULT_SIGMA_FACTOR = 0.6
DEFAULT_W_MAX = 10.0
DEFAULT_ANGLES_DEG = (0.0, 72.0, 144.0, 216.0, 288.0)
DEFAULT_BEAMLETS_PER_ANGLE = 16
DEFAULT_BEAMLET_WIDTH_MM = 5.0


@dataclass(frozen=True)
class Phantom:
    labels: np.ndarray  # (rows, cols) int codes into LABELS
    voxel_size_mm: float
    preset: str = "default"

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    @property
    def n_voxels(self) -> int:
        return self.labels.size

    def mask(self, structure: str) -> np.ndarray:
        """Flat boolean mask of a structure's voxels (row-major order)."""
        return (self.labels == LABEL_CODES[structure]).ravel()

    def counts(self) -> dict[str, int]:
        return {name: int(np.count_nonzero(self.labels == code)) for name, code in LABEL_CODES.items()}

    def tumor_center(self) -> tuple[float, float]:
        rows, cols = np.nonzero(self.labels == LABEL_CODES[TUMOR])
        return float(rows.mean()), float(cols.mean())

    def to_csv(self) -> str:
        lines = ["row,col,label"]
        for r in range(self.labels.shape[0]):
            for c in range(self.labels.shape[1]):
                lines.append(f"{r},{c},{LABELS[self.labels[r, c]]}")
        return "\n".join(lines) + "\n"


def _ellipse(rr, cc, center, semi) -> np.ndarray:
    return ((rr - center[0]) / semi[0]) ** 2 + ((cc - center[1]) / semi[1]) ** 2 <= 1.0


def build_phantom(rows: int, cols: int, voxel_size_mm: float = 3.0, preset: str = "default") -> Phantom:
    """Build the thorax phantom for a named preset.

    ``default``: a left-lung ellipse on the image right, a heart ellipse placed
    medially and inferiorly, and a circular tumor of radius 4 voxels centred
    in the lower half of the lung.  Everything else is normal tissue.
    """
    if rows < MIN_GRID or cols < MIN_GRID:
        raise GridTooSmall(f"grid must be at least {MIN_GRID}x{MIN_GRID}, got {rows}x{cols}")
    if voxel_size_mm <= 0:
        raise ValueError("voxel_size_mm must be positive")
    if preset != "default":
        raise ValueError(f"unknown phantom preset {preset!r}")

    rr, cc = np.mgrid[0:rows, 0:cols].astype(float)
    lung_c = (0.45 * (rows - 1), 0.70 * (cols - 1))
    lung_s = (max(0.30 * rows, 6.0), max(0.14 * cols, 5.5))
    heart_c = (0.70 * (rows - 1), 0.45 * (cols - 1))
    heart_s = (max(0.12 * rows, 2.0), max(0.11 * cols, 2.0))
    # lower half of the lung, pulled up when the lung is too short to hold it
    tumor_c = (
        math.floor(min(lung_c[0] + 0.5 * lung_s[0], lung_c[0] + lung_s[0] - TUMOR_RADIUS_VOX)),
        math.floor(lung_c[1] + 0.5),
    )

    labels = np.full((rows, cols), LABEL_CODES[NORMAL], dtype=np.int8)
    labels[_ellipse(rr, cc, lung_c, lung_s)] = LABEL_CODES[LEFT_LUNG]
    labels[_ellipse(rr, cc, heart_c, heart_s)] = LABEL_CODES[HEART]
    tumor = (rr - tumor_c[0]) ** 2 + (cc - tumor_c[1]) ** 2 <= TUMOR_RADIUS_VOX**2
    labels[tumor] = LABEL_CODES[TUMOR]
    labels.setflags(write=False)

    phantom = Phantom(labels, float(voxel_size_mm), preset)
    _check_phantom(phantom, lung_c, lung_s)
    return phantom


def _check_phantom(phantom: Phantom, lung_c, lung_s) -> None:
    counts = phantom.counts()
    if counts[TUMOR] < 1 or counts[LEFT_LUNG] < 1 or counts[HEART] < 1:
        raise GridTooSmall(f"preset produced an empty structure: {counts}")
    rows, cols = np.nonzero(phantom.labels == LABEL_CODES[TUMOR])
    inside = (
        rows.min() >= lung_c[0] - lung_s[0]
        and rows.max() <= lung_c[0] + lung_s[0]
        and cols.min() >= lung_c[1] - lung_s[1]
        and cols.max() <= lung_c[1] + lung_s[1]
    )
    if not inside:
        raise GridTooSmall("tumor does not fit inside the lung region on this grid")


@dataclass(frozen=True)
class BeamletSet:
    angles_deg: tuple[float, ...] = DEFAULT_ANGLES_DEG
    beamlets_per_angle: int = DEFAULT_BEAMLETS_PER_ANGLE
    beamlet_width_mm: float = DEFAULT_BEAMLET_WIDTH_MM

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles_deg)
        object.__setattr__(self, "angles_deg", angles)
        if not angles:
            raise ValueError("at least one beam angle is required")
        if len(set(angles)) != len(angles):
            raise ValueError("beam angles must be distinct")
        if any(not (0.0 <= a < 360.0) for a in angles):
            raise ValueError("beam angles must lie in [0, 360)")
        if self.beamlets_per_angle < 1:
            raise ValueError("beamlets_per_angle must be >= 1")
        if self.beamlet_width_mm <= 0:
            raise ValueError("beamlet_width_mm must be positive")

    @property
    def n_beamlets(self) -> int:
        return len(self.angles_deg) * self.beamlets_per_angle

    def lateral_centers_mm(self) -> np.ndarray:
        n = self.beamlets_per_angle
        return (np.arange(n) - (n - 1) / 2.0) * self.beamlet_width_mm


@dataclass(frozen=True)
class FluencePlan:
    weights: np.ndarray

    @classmethod
    def of(cls, weights, w_max: float = DEFAULT_W_MAX) -> "FluencePlan":
        w = np.array(weights, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatch("plan weights must be a vector")
        if np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > w_max):
            raise ValueError(f"plan weights must lie in [0, {w_max}]")
        w.setflags(write=False)
        return cls(w)

    def __len__(self) -> int:
        return self.weights.shape[0]


def row_shift(offset_mm: float, voxel_size_mm: float) -> int:
    """Offset in whole rows, rounding halves away from zero."""
    x = offset_mm / voxel_size_mm
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def _shift_index(shape: tuple[int, int], shift: int) -> np.ndarray:
    """Flat source index per voxel for a +shift row displacement; -1 off-grid."""
    rows, cols = shape
    rr, cc = np.mgrid[0:rows, 0:cols]
    src = rr - shift
    idx = src * cols + cc
    idx[(src < 0) | (src >= rows)] = -1
    return idx.ravel()


def attenuation(depth_mm, mu_per_mm: float = DEFAULT_MU_PER_MM):
    return np.exp(-mu_per_mm * np.asarray(depth_mm, dtype=float))


@dataclass(frozen=True)
class DoseInfluence:
    """Per-state voxel x beamlet influence, in Gy per unit weight.

    Only the reference-state matrix is stored; state ``s`` reads row ``r`` of
    its matrix from row ``r - shift[s]`` of the reference (zero off-grid).
    """

    base: np.ndarray  # (n_voxels, n_beamlets)
    states: tuple[MotionState, ...]
    shifts: tuple[int, ...]
    source_index: np.ndarray  # (n_states, n_voxels), -1 = outside grid
    grid_shape: tuple[int, int]

    @property
    def n_beamlets(self) -> int:
        return self.base.shape[1]

    @property
    def n_voxels(self) -> int:
        return self.base.shape[0]

    def state_position(self, state: MotionState | int) -> int:
        if isinstance(state, MotionState):
            if state not in self.states:
                raise StateMismatch(f"{state} is not one of this engine's states")
            return state.index
        return int(state)

    def matrix(self, state: MotionState | int) -> np.ndarray:
        """Dense influence matrix for one motion state."""
        src = self.source_index[self.state_position(state)]
        out = np.zeros_like(self.base)
        ok = src >= 0
        out[ok] = self.base[src[ok]]
        return out

    def scaled(self, factor: float) -> "DoseInfluence":
        base = self.base * factor
        base.setflags(write=False)
        return DoseInfluence(base, self.states, self.shifts, self.source_index, self.grid_shape)

    def state_doses(self, weights, voxels: np.ndarray | None = None) -> np.ndarray:
        """Static dose of every state at once, shape (n_states, n_selected_voxels)."""
        w = _check_weights(self, weights)
        ref = self.base @ w
        padded = np.append(ref, 0.0)  # index -1 -> zero dose
        src = self.source_index if voxels is None else self.source_index[:, voxels]
        return padded[src]


def _check_weights(influence: DoseInfluence, weights) -> np.ndarray:
    w = np.asarray(weights.weights if isinstance(weights, FluencePlan) else weights, dtype=float)
    if w.shape != (influence.n_beamlets,):
        raise DimensionMismatch(f"plan has {w.shape} weights, engine has {influence.n_beamlets} beamlets")
    return w


def dose_influence(
    phantom: Phantom,
    beams: BeamletSet,
    states: Sequence[MotionState],
    mu_per_mm: float = DEFAULT_MU_PER_MM,
    sigma_factor: float = DEFAULT_SIGMA_FACTOR,
) -> DoseInfluence:
    """Pencil-beam influence matrices for every motion state.

    Beams are aimed at the tumor centroid.  Depth is measured along the ray
    from where it enters the box spanned by the outer voxel centres, so an
    entry voxel sits at depth zero.
    """
    rows, cols = phantom.shape
    h = phantom.voxel_size_mm
    sigma = sigma_factor * beams.beamlet_width_mm
    rr, cc = np.mgrid[0:rows, 0:cols]
    py = rr.ravel() * h
    px = cc.ravel() * h
    iso_r, iso_c = phantom.tumor_center()
    iso_y, iso_x = iso_r * h, iso_c * h
    y_hi, x_hi = (rows - 1) * h, (cols - 1) * h
    centers = beams.lateral_centers_mm()

    columns = []
    for angle in beams.angles_deg:
        th = math.radians(angle)
        dx, dy = math.cos(th), math.sin(th)
        depth = np.minimum(_back_distance(px, dx, x_hi), _back_distance(py, dy, y_hi))
        lateral = (px - iso_x) * -dy + (py - iso_y) * dx
        atten = attenuation(depth, mu_per_mm)
        for c in centers:
            columns.append(atten * np.exp(-((lateral - c) ** 2) / (2.0 * sigma**2)))
    base = np.ascontiguousarray(np.stack(columns, axis=1))
    base.setflags(write=False)

    shifts = tuple(row_shift(s.offset_mm, h) for s in states)
    source = np.stack([_shift_index((rows, cols), k) for k in shifts])
    source.setflags(write=False)
    return DoseInfluence(base, tuple(states), shifts, source, (rows, cols))


def _back_distance(p: np.ndarray, d: float, hi: float) -> np.ndarray:
    """Distance travelled backwards along direction ``d`` before leaving [0, hi]."""
    if abs(d) < 1e-12:
        return np.full_like(p, np.inf)
    if d > 0:
        return p / d
    return (hi - p) / -d


def normalize_influence(
    influence: DoseInfluence, phantom: Phantom, pdf: RespiratoryPdf, target_gy: float = 1.0
) -> DoseInfluence:
    """Rescale so a uniform plan of unit total fluence gives ``target_gy`` mean tumor dose.

    The mean is taken over the expected dose under ``pdf``.
    """
    n = influence.n_beamlets
    uniform = np.full(n, 1.0 / n)
    tumor = np.flatnonzero(phantom.mask(TUMOR))
    mean_tumor = float(np.mean(pdf.mass @ influence.state_doses(uniform, tumor)))
    if mean_tumor <= 0:
        raise ValueError("no beamlet reaches the tumor; cannot normalize")
    return influence.scaled(target_gy / mean_tumor)


def static_dose(influence: DoseInfluence, plan, state: MotionState | int) -> np.ndarray:
    w = _check_weights(influence, plan)
    return influence.matrix(state) @ w


def expected_dose(influence: DoseInfluence, plan, pdf: RespiratoryPdf) -> np.ndarray:
    """Motion-averaged dose: sum over states of pdf(x) times the state's static dose."""
    if len(pdf.states) != len(influence.states) or any(
        a != b for a, b in zip(pdf.states, influence.states)
    ):
        raise StateMismatch("PDF states differ from the engine's states")
    return pdf.mass @ influence.state_doses(plan)
