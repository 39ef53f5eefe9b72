"""Named procedure configurations shared by the simulation harness and the CLI."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import procedures as proc
from .errors import ConfigurationError

METHOD_NAMES = ("ts-bonf", "ts-holm", "bonferroni", "holm", "hochberg", "bh", "simes", "hc", "ss-bonf")

LABELS = {
    "ts-bonf": "TS Bonf.",
    "ts-holm": "TS Holm",
    "bonferroni": "Bonf.",
    "holm": "Holm",
    "hochberg": "Hoch.",
    "bh": "BH",
    "simes": "Simes",
    "hc": "HC",
    "ss-bonf": "SS Bonf.",
}

_CLASSIC = {"bonferroni": "bonferroni", "holm": "holm", "hochberg": "hochberg", "bh": "benjamini_hochberg"}


@dataclass(frozen=True)
class ProcedureSpec:
    """One procedure with all of its tuning constants.

    ``selection_level``, when given, overrides ``gamma`` by solving
    ``m^(gamma - 1) = selection_level`` for the dataset's ``m``.
    """

    method: str
    alpha: float = 0.05
    gamma: float = 0.5
    sigma_mode: str = "known_unit"
    selection_level: Optional[float] = None
    split_r: float = 0.5
    split_df_rule: str = "n1-1"
    hc_reps: int = 10_000
    hc_seed: int = 0
    label: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHOD_NAMES:
            raise ConfigurationError(f"unknown method {self.method!r}; expected one of {METHOD_NAMES}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.sigma_mode not in ("known_unit", "estimated"):
            raise ConfigurationError(f"unknown sigma mode {self.sigma_mode!r}")
        if self.selection_level is not None and not 0.0 < self.selection_level <= 1.0:
            raise ConfigurationError(f"selection level must lie in (0, 1], got {self.selection_level}")
        if not 0.0 < self.split_r < 1.0:
            raise ConfigurationError(f"split fraction must lie in (0, 1), got {self.split_r}")
        if self.split_df_rule not in ("n1-1", "n1"):
            raise ConfigurationError(f"unknown split df rule {self.split_df_rule!r}")

    @property
    def display(self):
        return self.label or LABELS[self.method]

    def gamma_for(self, m):
        if self.selection_level is None:
            return self.gamma
        if self.selection_level >= 1.0:
            return 1.0
        return proc.gamma_for_level(m, self.selection_level)

    def calibration(self):
        return proc.HCCalibration(reps=self.hc_reps, seed=self.hc_seed)


def run_method(spec, data, stats=None):
    """Apply ``spec`` to ``data``; returns a :class:`~tsmt.procedures.ProcedureResult`.

    ``stats`` may carry precomputed full-sample statistics of ``data``.
    """
    data = np.asarray(data, dtype=float)
    if stats is None:
        stats = proc.compute_stats(data)
    m = stats.m
    method = spec.method
    if method in ("ts-bonf", "ts-holm"):
        rule = proc.SelectionRule(gamma=spec.gamma_for(m), sigma_mode=spec.sigma_mode)
        fn = proc.two_stage_bonferroni if method == "ts-bonf" else proc.two_stage_holm
        return fn(data, spec.alpha, rule, stats=stats)
    if method == "ss-bonf":
        return proc.split_sample_procedure(
            data, spec.alpha, spec.gamma_for(m), spec.split_r, spec.split_df_rule
        )
    everything = np.arange(m)
    no_cut = np.full(m, np.nan)
    if method in _CLASSIC:
        rejected = proc.classic_procedure(stats.p, spec.alpha, _CLASSIC[method])
        return proc.ProcedureResult(method, everything, rejected, stats.p, no_cut)
    if method == "simes":
        decision = proc.simes_global(stats.p, spec.alpha)
    else:
        decision = proc.higher_criticism_global(stats.p, spec.alpha, spec.calibration())
    return proc.ProcedureResult(
        method, everything, np.empty(0, dtype=np.intp), stats.p, no_cut, global_decision=decision
    )
