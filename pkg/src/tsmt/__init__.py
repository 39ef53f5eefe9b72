"""Two-stage (select-then-test) multiple testing with independence filtering."""

from .asymptotics import (
    AsymptoticRegime,
    ThresholdReport,
    a,
    c_star,
    detection_threshold,
    g,
    g_inverse,
    optimal_gamma,
)
from .errors import ConfigurationError, DataError, DomainError, ParameterError, TsmtError
from .methods import ProcedureSpec, run_method
from .presets import scenario_preset
from .procedures import (
    HCCalibration,
    ProcedureResult,
    SelectionRule,
    classic_procedure,
    estimate_sigma2,
    higher_criticism_global,
    selection_threshold,
    simes_global,
    split_sample_procedure,
    summary_stats,
    two_stage_bonferroni,
    two_stage_holm,
)
from .simulation import MetricsReport, ScenarioConfig, estimate_metrics, generate_dataset, run_replication

__all__ = [
    "AsymptoticRegime",
    "ConfigurationError",
    "DataError",
    "DomainError",
    "HCCalibration",
    "MetricsReport",
    "ParameterError",
    "ProcedureResult",
    "ProcedureSpec",
    "ScenarioConfig",
    "SelectionRule",
    "ThresholdReport",
    "TsmtError",
    "a",
    "c_star",
    "classic_procedure",
    "detection_threshold",
    "estimate_metrics",
    "estimate_sigma2",
    "g",
    "g_inverse",
    "generate_dataset",
    "higher_criticism_global",
    "optimal_gamma",
    "run_method",
    "run_replication",
    "scenario_preset",
    "selection_threshold",
    "simes_global",
    "split_sample_procedure",
    "summary_stats",
    "two_stage_bonferroni",
    "two_stage_holm",
]
