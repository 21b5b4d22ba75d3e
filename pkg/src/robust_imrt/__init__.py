"""Motion-robust fluence-map planning with cuckoo, flower-pollination and bat search."""

from .config import PlannerConfig, load_config, parse_config
from .evaluation import ClinicalGoals, DoseStats, DvhCurve, clinical_penalty, dose_stats, dvh, robust_fitness
from .motion import (
    RespiratoryPdf,
    UncertaintySet,
    is_member,
    make_states,
    make_uncertainty_set,
    sample_member,
    scenario_set,
    validate_pdf,
    worst_case_pdf,
)
from .phantom import BeamletSet, FluencePlan, build_phantom, dose_influence, expected_dose, static_dose
from .planner import run_compare, run_dvh, run_optimize

__version__ = "0.1.0"
