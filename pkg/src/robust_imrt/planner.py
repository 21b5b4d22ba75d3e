"""End-to-end planning runs: build the engine, optimize, write artifacts."""

from __future__ import annotations

import logging
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ALGORITHM_NAMES, PlannerConfig
from .errors import DimensionMismatch, FileFormat
from .evaluation import DoseStats, PlanObjective, dose_stats, dvh
from .motion import RespiratoryPdf
from .optimizers import ALGORITHMS, OptimizationResult, SearchSpace
from .phantom import (
    HEART,
    LEFT_LUNG,
    TUMOR,
    DoseInfluence,
    Phantom,
    build_phantom,
    dose_influence,
    expected_dose,
    normalize_influence,
)

log = logging.getLogger(__name__)

STRUCTURES = (TUMOR, LEFT_LUNG, HEART)
SCENARIOS = ("nominal", "underdose", "overdose")
STAT_FIELDS = ("mean_gy", "min_gy", "max_gy", "d95_gy")

WEIGHTS_FILE = "weights.csv"
CONVERGENCE_FILE = "convergence.csv"
REPORT_FILE = "report.txt"
COMPARISON_FILE = "comparison.csv"
PHANTOM_FILE = "phantom_labels.csv"
DVH_FILE = "dvh.csv"


def dvh_file(scenario: str) -> str:
    return f"dvh_{scenario}.csv"


@dataclass(frozen=True)
class Engine:
    phantom: Phantom
    influence: DoseInfluence
    config: PlannerConfig

    @property
    def n_beamlets(self) -> int:
        return self.influence.n_beamlets

    @property
    def w_max(self) -> float:
        return self.config.engine["w_max"]

    def objective(self) -> PlanObjective:
        cfg = self.config
        return PlanObjective(self.influence, self.phantom, cfg.uncertainty, cfg.goals)

    def search_space(self) -> SearchSpace:
        return SearchSpace.box(self.n_beamlets, 0.0, self.w_max)


def build_engine(cfg: PlannerConfig) -> Engine:
    p, b = cfg.phantom, cfg.engine
    phantom = build_phantom(p["rows"], p["cols"], p["voxel_size_mm"], p["preset"])
    raw = dose_influence(
        phantom,
        cfg.beams,
        cfg.uncertainty.states,
        mu_per_mm=b["mu_per_mm"],
        sigma_factor=b["sigma_factor"],
    )
    return Engine(phantom, normalize_influence(raw, phantom, cfg.uncertainty.nominal), cfg)


@dataclass
class RunReport:
    algorithm: str
    seed: int
    best_fitness: float
    evaluations: int
    wall_clock_s: float
    stats: dict[str, dict[str, DoseStats]]  # scenario -> structure -> stats
    weights: np.ndarray
    history: list[float]

    def to_text(self) -> str:
        """Flat ``key=value`` report; timing is left out so reruns are byte-identical."""
        lines = [
            f"algorithm={self.algorithm}",
            f"seed={self.seed}",
            f"best_fitness={self.best_fitness!r}",
            f"evaluations={self.evaluations}",
            f"n_beamlets={self.weights.size}",
        ]
        for scenario in SCENARIOS:
            for structure in STRUCTURES:
                st = self.stats[scenario][structure]
                for name in STAT_FIELDS:
                    lines.append(f"{scenario}.{structure}.{name}={getattr(st, name)!r}")
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dvh_csv(dose: np.ndarray, phantom: Phantom) -> str:
    lines = ["structure,dose_gy,volume_fraction"]
    for structure in sorted(STRUCTURES):
        curve = dvh(dose, phantom, structure)
        for t, v in zip(curve.bin_edges_gy, curve.volume_fraction):
            lines.append(f"{structure},{t:.1f},{float(v)!r}")
    return "\n".join(lines) + "\n"


def weights_csv(weights: np.ndarray) -> str:
    lines = ["beamlet_index,weight"]
    lines += [f"{i},{float(w)!r}" for i, w in enumerate(weights)]
    return "\n".join(lines) + "\n"


def convergence_csv(history) -> str:
    lines = ["iteration,best_value"]
    lines += [f"{i},{float(v)!r}" for i, v in enumerate(history)]
    return "\n".join(lines) + "\n"


def read_weights(path, n_beamlets: int) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormat(f"cannot read weights file {path}: {exc}") from exc
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0].strip() != "beamlet_index,weight":
        raise FileFormat("weights file must start with header 'beamlet_index,weight'")
    weights = []
    for n, line in enumerate(rows[1:]):
        parts = line.split(",")
        try:
            idx, w = int(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            raise FileFormat(f"bad weights row {n + 2}: {line!r}") from None
        if len(parts) != 2 or idx != n or not np.isfinite(w) or w < 0:
            raise FileFormat(f"bad weights row {n + 2}: {line!r}")
        weights.append(w)
    if len(weights) != n_beamlets:
        raise DimensionMismatch(f"weights file has {len(weights)} beamlets, engine has {n_beamlets}")
    return np.array(weights)


def optimize(engine: Engine, algorithm: str, seed: int) -> OptimizationResult:
    minimize, _ = ALGORITHMS[algorithm]
    params = engine.config.params[algorithm]
    return minimize(engine.objective(), engine.search_space(), params, seed=seed)


def scenario_doses(engine: Engine, weights: np.ndarray) -> dict[str, np.ndarray]:
    pdfs: dict[str, RespiratoryPdf] = engine.objective().extreme_scenarios(weights)
    return {name: expected_dose(engine.influence, weights, pdfs[name]) for name in SCENARIOS}


def run_optimize(cfg: PlannerConfig, out_dir, engine: Engine | None = None) -> RunReport:
    """Optimize the robust fitness with the configured algorithm and write all artifacts."""
    out = Path(out_dir)
    engine = engine or build_engine(cfg)
    log.info("optimizing with %s, seed %d", cfg.algorithm, cfg.seed)
    start = time.perf_counter()
    result = optimize(engine, cfg.algorithm, cfg.seed)
    elapsed = time.perf_counter() - start

    weights = result.best_point
    doses = scenario_doses(engine, weights)
    stats = {
        name: {s: dose_stats(d, engine.phantom, s) for s in STRUCTURES} for name, d in doses.items()
    }
    report = RunReport(
        algorithm=cfg.algorithm,
        seed=cfg.seed,
        best_fitness=result.best_value,
        evaluations=result.evaluations,
        wall_clock_s=elapsed,
        stats=stats,
        weights=weights,
        history=result.history,
    )
    write_atomic(out / WEIGHTS_FILE, weights_csv(weights))
    write_atomic(out / CONVERGENCE_FILE, convergence_csv(result.history))
    for name, d in doses.items():
        write_atomic(out / dvh_file(name), dvh_csv(d, engine.phantom))
    write_atomic(out / REPORT_FILE, report.to_text())
    log.info("%s finished in %.2f s, fitness %.6g", cfg.algorithm, elapsed, result.best_value)
    return report


def comparison_csv(reports: dict[str, RunReport]) -> str:
    lines = ["structure," + ",".join(ALGORITHM_NAMES)]
    for structure in STRUCTURES:
        cells = [repr(reports[a].stats["nominal"][structure].mean_gy) for a in ALGORITHM_NAMES]
        lines.append(f"{structure}," + ",".join(cells))
    lines.append("fitness," + ",".join(repr(reports[a].best_fitness) for a in ALGORITHM_NAMES))
    return "\n".join(lines) + "\n"


def run_compare(cfg: PlannerConfig, out_dir) -> dict[str, RunReport]:
    """Run all three algorithms with the same engine, seed and budget.

    Each run's artifacts land in ``<out>/<algorithm>/``; the nominal-scenario
    mean-dose table goes to ``<out>/comparison.csv``.
    """
    out = Path(out_dir)
    engine = build_engine(cfg)
    reports = {}
    for name in ALGORITHM_NAMES:
        sub = cfg.with_overrides(algorithm=name)
        reports[name] = run_optimize(sub, out / name, engine=Engine(engine.phantom, engine.influence, sub))
    write_atomic(out / COMPARISON_FILE, comparison_csv(reports))
    return reports


def run_dvh(cfg: PlannerConfig, weights_path, out_dir) -> Path:
    """Nominal-PDF DVH for a saved plan."""
    engine = build_engine(cfg)
    weights = read_weights(weights_path, engine.n_beamlets)
    dose = expected_dose(engine.influence, weights, cfg.uncertainty.nominal)
    path = Path(out_dir) / DVH_FILE
    write_atomic(path, dvh_csv(dose, engine.phantom))
    return path


def run_phantom(cfg: PlannerConfig, out_dir) -> Path:
    p = cfg.phantom
    phantom = build_phantom(p["rows"], p["cols"], p["voxel_size_mm"], p["preset"])
    path = Path(out_dir) / PHANTOM_FILE
    write_atomic(path, phantom.to_csv())
    return path
