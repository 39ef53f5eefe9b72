"""Monte Carlo harness: data generation, replication, metric estimation.

Every replication draws from its own Philox stream keyed by
``(base_seed, replication_index)``, and results are aggregated in index
order, so estimates do not depend on how many worker threads ran them.
All procedures attached to a scenario see the same simulated dataset in a
given replication (common random numbers).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import os
from typing import Literal, NamedTuple, Optional

import numpy as np

from . import procedures as proc
from .errors import ConfigurationError
from .methods import ProcedureSpec, run_method

Dependence = Literal["independent", "equal_correlation", "block"]
VarianceMode = Literal["unit", "common_uniform", "per_hypothesis_uniform"]
MeanMode = Literal["uniform_pm1", "constant"]

THREADS_ENV = "TSMT_THREADS"

_REPLICATION_STREAM = 1
_FIXED_MEANS_STREAM = 2


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell.

    The first ``signal_count`` rows carry nonzero means; the rest are exactly
    zero. ``figure``/``panel``/``x_name``/``x`` are bookkeeping for output only.
    """

    m: int
    n: int
    procedures: tuple = ()
    signal_count: int = 0
    rho: float = 0.0
    dependence: Dependence = "independent"
    block_size: Optional[int] = None
    variance_mode: VarianceMode = "unit"
    variance_range: tuple = (0.5, 1.5)
    mean_mode: MeanMode = "uniform_pm1"
    mean_value: float = 1.0
    redraw_means: bool = True
    replications: int = 2000
    base_seed: int = 0
    scenario_id: str = ""
    figure: str = ""
    panel: str = ""
    x_name: str = ""
    x: float = float("nan")

    def __post_init__(self):
        if self.m < 1 or self.n < 2:
            raise ConfigurationError(f"need m >= 1 and n >= 2, got m={self.m}, n={self.n}")
        if not 0 <= self.signal_count <= self.m:
            raise ConfigurationError(f"signal_count must lie in [0, m], got {self.signal_count}")
        if not 0.0 <= self.rho < 1.0:
            raise ConfigurationError(f"rho must lie in [0, 1), got {self.rho}")
        if self.dependence not in ("independent", "equal_correlation", "block"):
            raise ConfigurationError(f"unknown dependence {self.dependence!r}")
        if self.dependence == "independent" and self.rho != 0.0:
            raise ConfigurationError("independent scenarios must have rho = 0")
        if self.dependence == "block":
            if self.block_size is None or not 1 <= self.block_size <= self.m:
                raise ConfigurationError(f"block dependence needs 1 <= block_size <= m, got {self.block_size}")
        if self.variance_mode not in ("unit", "common_uniform", "per_hypothesis_uniform"):
            raise ConfigurationError(f"unknown variance mode {self.variance_mode!r}")
        lo, hi = self.variance_range
        if not 0.0 < lo <= hi:
            raise ConfigurationError(f"variance range must satisfy 0 < lo <= hi, got {self.variance_range}")
        if self.mean_mode not in ("uniform_pm1", "constant"):
            raise ConfigurationError(f"unknown mean mode {self.mean_mode!r}")
        if self.replications < 1:
            raise ConfigurationError("need at least one replication")
        for spec in self.procedures:
            if not isinstance(spec, ProcedureSpec):
                raise ConfigurationError(f"procedures must be ProcedureSpec, got {type(spec).__name__}")


def replication_rng(base_seed, index):
    seq = np.random.SeedSequence(int(base_seed), spawn_key=(_REPLICATION_STREAM, int(index)))
    return np.random.Generator(np.random.Philox(seq))


def _fixed_means(config):
    seq = np.random.SeedSequence(int(config.base_seed), spawn_key=(_FIXED_MEANS_STREAM,))
    return np.random.Generator(np.random.Philox(seq)).uniform(-1.0, 1.0, config.signal_count)


def generate_dataset(config, replication_index):
    """Simulate one ``m x n`` dataset; returns ``(data, is_signal)``.

    ``X_ij = mu_i + sigma_i (sqrt(rho) W_j + sqrt(1 - rho) Z_ij)`` where the
    common factor ``W`` is shared by all rows (equal correlation) or by rows in
    the same block of ``block_size`` consecutive rows.
    """
    rng = replication_rng(config.base_seed, replication_index)
    m, n, k = config.m, config.n, config.signal_count
    lo, hi = config.variance_range
    if config.variance_mode == "unit":
        sigma = np.ones(m)
    elif config.variance_mode == "common_uniform":
        sigma = np.full(m, math.sqrt(rng.uniform(lo, hi)))
    else:
        sigma = np.sqrt(rng.uniform(lo, hi, m))

    mu = np.zeros(m)
    if k:
        if config.mean_mode == "constant":
            mu[:k] = config.mean_value
        elif config.redraw_means:
            mu[:k] = rng.uniform(-1.0, 1.0, k)
        else:
            mu[:k] = _fixed_means(config)

    noise = rng.standard_normal((m, n))
    rho = config.rho
    if rho > 0.0:
        if config.dependence == "equal_correlation":
            shared = rng.standard_normal(n)[None, :]
        else:
            n_blocks = -(-m // config.block_size)
            block_factor = rng.standard_normal((n_blocks, n))
            shared = block_factor[np.arange(m) // config.block_size]
        noise = math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * noise
    data = mu[:, None] + sigma[:, None] * noise
    is_signal = np.zeros(m, dtype=bool)
    is_signal[:k] = True
    return data, is_signal


class MethodOutcome(NamedTuple):
    rejected: tuple
    n_selected: int
    false_rejections: int
    true_rejections: int
    global_reject: bool


@dataclass(frozen=True)
class ReplicationOutcome:
    index: int
    outcomes: tuple
    n_signals: int
    n_nulls: int

    @property
    def power_fractions(self):
        """Per-method fraction of false nulls rejected; None without false nulls."""
        if self.n_signals == 0:
            return tuple(None for _ in self.outcomes)
        return tuple(o.true_rejections / self.n_signals for o in self.outcomes)


def run_replication(config, replication_index):
    """Simulate one dataset and apply every configured procedure to it."""
    data, is_signal = generate_dataset(config, replication_index)
    stats = proc.compute_stats(data)
    outcomes = []
    for spec in config.procedures:
        result = run_method(spec, data, stats)
        rej = result.rejected
        true_rej = int(np.count_nonzero(is_signal[rej]))
        outcomes.append(
            MethodOutcome(
                rejected=tuple(int(i) for i in rej),
                n_selected=result.n_selected,
                false_rejections=int(rej.size) - true_rej,
                true_rejections=true_rej,
                global_reject=result.rejects_global,
            )
        )
    k = int(is_signal.sum())
    return ReplicationOutcome(replication_index, tuple(outcomes), k, config.m - k)


@dataclass(frozen=True)
class MetricsReport:
    """Monte Carlo estimates for one procedure in one scenario.

    Estimates that are undefined for the scenario (power without false
    nulls, global type-1 rate with false nulls present) are None.
    """

    method: str
    replications_used: int
    fwer_hat: Optional[float]
    fwer_se: Optional[float]
    type1_global_hat: Optional[float]
    type1_global_se: Optional[float]
    avg_power_hat: Optional[float]
    avg_power_se: Optional[float]
    global_power_hat: Optional[float]
    global_power_se: Optional[float]
    mean_selected: float
    mean_selected_se: float

    def estimates(self):
        """(name, value, se) for every defined estimate, in a fixed order."""
        rows = [
            ("fwer", self.fwer_hat, self.fwer_se),
            ("type1_global", self.type1_global_hat, self.type1_global_se),
            ("avg_power", self.avg_power_hat, self.avg_power_se),
            ("global_power", self.global_power_hat, self.global_power_se),
            ("mean_selected", self.mean_selected, self.mean_selected_se),
        ]
        return [r for r in rows if r[1] is not None]


def proportion_se(p_hat, reps):
    return math.sqrt(p_hat * (1.0 - p_hat) / reps)


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def worker_count(workers=None):
    """Thread count: explicit argument, else ``TSMT_THREADS``, else CPU count."""
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {workers}")
    return workers


def run_replications(config, workers=None):
    """All replication outcomes, ordered by replication index."""
    for spec in config.procedures:
        if spec.method == "hc":
            # calibrate once up front rather than racing inside the pool
            spec.calibration().critical_value(config.m, spec.alpha)
    workers = min(worker_count(workers), config.replications)
    indices = range(config.replications)
    if workers == 1:
        return [run_replication(config, i) for i in indices]
    chunks = [indices[w::workers] for w in range(workers)]

    def run_chunk(chunk):
        return [run_replication(config, i) for i in chunk]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run_chunk, chunks))
    merged = [out for part in parts for out in part]
    merged.sort(key=lambda o: o.index)
    return merged


def summarize(config, outcomes):
    """Aggregate replication outcomes into one :class:`MetricsReport` per procedure."""
    reps = len(outcomes)
    k = config.signal_count
    reports = []
    for j, spec in enumerate(config.procedures):
        per = [o.outcomes[j] for o in outcomes]
        fwer = fwer_se = t1 = t1_se = pw = pw_se = gp = gp_se = None
        if k < config.m:
            fwer = sum(o.false_rejections > 0 for o in per) / reps
            fwer_se = proportion_se(fwer, reps)
        global_rate = sum(o.global_reject for o in per) / reps
        if k == 0:
            t1, t1_se = global_rate, proportion_se(global_rate, reps)
        else:
            gp, gp_se = global_rate, proportion_se(global_rate, reps)
            pw, pw_se = _mean_se([o.true_rejections / k for o in per])
        sel, sel_se = _mean_se([o.n_selected for o in per])
        reports.append(
            MetricsReport(spec.display, reps, fwer, fwer_se, t1, t1_se, pw, pw_se, gp, gp_se, sel, sel_se)
        )
    return reports


def estimate_metrics(config, workers=None):
    """Run every replication of ``config`` and return per-procedure metrics."""
    return summarize(config, run_replications(config, workers))


def pooled_se(*ses):
    return math.sqrt(sum(s * s for s in ses))


@dataclass(frozen=True)
class ThresholdGrid:
    """Pure-calculator scenario: asymptotic thresholds over a d-grid."""

    d_values: tuple
    figure: str = "fig4_1"
    extra: dict = field(default_factory=dict)
