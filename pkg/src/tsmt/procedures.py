"""Finite-sample testing procedures.

The two-stage procedures screen hypotheses by the sum of squares
``S_i = sum_j X_ij^2`` and test the survivors with the one-sample t statistic
``T_i = sqrt(n) mean_i / sd_i``. Under ``H_i: mu_i = 0`` the two statistics are
independent, so a Bonferroni (or Holm) correction over the selected set alone
keeps the familywise error rate at ``alpha``.

Conventions used throughout:

* a hypothesis is selected when ``S_i > u`` (strict);
* stage-two rejection uses ``|T_i| >= t_{n-1}(1 - alpha / (2 |S|))``;
* rows with zero sample variance get ``T = sign(mean) * inf`` and ``p = 0``,
  or ``T = 0`` and ``p = 1`` when the mean is zero as well.
"""

from dataclasses import dataclass, field
import math
import threading
from typing import Literal, NamedTuple, Optional

import numpy as np

from . import distributions as dist
from .errors import ConfigurationError, DomainError

SigmaMode = Literal["known_unit", "estimated"]
ClassicMethod = Literal["bonferroni", "holm", "hochberg", "benjamini_hochberg"]
CLASSIC_METHODS = ("bonferroni", "holm", "hochberg", "benjamini_hochberg")


class HypothesisStats(NamedTuple):
    index: int
    s_stat: float
    t_stat: float
    p_value: float


@dataclass(frozen=True)
class StatTable:
    """Per-hypothesis statistics in array form."""

    s: np.ndarray
    t: np.ndarray
    p: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    n: int

    @property
    def m(self):
        return self.s.shape[0]

    def records(self):
        return [
            HypothesisStats(i, float(s), float(t), float(p))
            for i, (s, t, p) in enumerate(zip(self.s, self.t, self.p))
        ]


def _as_dataset(data):
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise ConfigurationError(f"dataset must be an m x n matrix, got shape {x.shape}")
    if x.shape[1] < 2:
        raise ConfigurationError(f"need n >= 2 observations per hypothesis, got n={x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ConfigurationError("dataset contains non-finite values")
    return x


def compute_stats(data, with_p=True):
    """Sum of squares, t statistic and two-sided p-value for every row.

    ``with_p=False`` skips the p-values (left as NaN).
    """
    x = _as_dataset(data)
    n = x.shape[1]
    s = np.einsum("ij,ij->i", x, x)
    mean = x.mean(axis=1)
    constant = np.all(x == x[:, :1], axis=1)
    var = x.var(axis=1, ddof=1)
    var[constant] = 0.0
    mean = np.where(constant, x[:, 0], mean)
    t = np.empty_like(mean)
    ok = var > 0.0
    t[ok] = math.sqrt(n) * mean[ok] / np.sqrt(var[ok])
    t[~ok] = np.where(mean[~ok] == 0.0, 0.0, np.copysign(np.inf, mean[~ok]))
    if with_p:
        p = dist.t_two_sided_pvalues(t, n - 1)
        p[~ok & (mean == 0.0)] = 1.0
    else:
        p = np.full_like(t, np.nan)
    return StatTable(s=s, t=t, p=p, mean=mean, var=var, n=n)


def summary_stats(data):
    """List of :class:`HypothesisStats`, one per row of ``data``."""
    return compute_stats(data).records()


def estimate_sigma2(data, estimator="mean"):
    """Pooled variance estimate: mean (default) or median of the row variances."""
    if isinstance(data, StatTable):
        var = data.var
    else:
        x = _as_dataset(data)
        var = x.var(axis=1, ddof=1)
        var[np.all(x == x[:, :1], axis=1)] = 0.0
    if estimator == "mean":
        return float(np.mean(var))
    if estimator == "median":
        return float(np.median(var))
    raise ConfigurationError(f"unknown sigma^2 estimator {estimator!r}")


def selection_level(m, gamma):
    """``beta = m^(gamma - 1)``, the null selection probability."""
    if not 0.0 < gamma <= 1.0:
        raise ConfigurationError(f"gamma must lie in (0, 1], got {gamma}")
    return m ** (gamma - 1.0)


def gamma_for_level(m, beta):
    """The gamma for which ``m^(gamma - 1) = beta``."""
    if not 0.0 < beta <= 1.0:
        raise ConfigurationError(f"selection level must lie in (0, 1], got {beta}")
    if m < 2:
        raise ConfigurationError("gamma is undetermined for m < 2")
    return 1.0 + math.log(beta) / math.log(m)


def selection_threshold(n, m, gamma, sigma_mode="known_unit", sigma2_hat=None):
    """Stage-one cutoff ``chi2_n(1 - m^(gamma-1))``, times ``sigma2_hat`` when estimated."""
    if sigma_mode not in ("known_unit", "estimated"):
        raise ConfigurationError(f"unknown sigma mode {sigma_mode!r}")
    beta = selection_level(m, gamma)
    u = 0.0 if beta >= 1.0 else dist.upper_quantile(dist.chi_square(n), beta)
    if sigma_mode == "known_unit":
        return u
    if sigma2_hat is None or not sigma2_hat >= 0.0:
        raise ConfigurationError("estimated sigma mode needs sigma2_hat >= 0")
    return sigma2_hat * u


@dataclass(frozen=True)
class SelectionRule:
    """How stage one picks hypotheses.

    ``gamma`` fixes the null selection level ``m^(gamma - 1)``. Setting
    ``fixed_threshold`` bypasses the quantile and selects ``S_i > fixed_threshold``
    (times the pooled variance in estimated mode).
    """

    gamma: float = 0.5
    sigma_mode: SigmaMode = "known_unit"
    sigma2_estimator: str = "mean"
    fixed_threshold: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.sigma_mode not in ("known_unit", "estimated"):
            raise ConfigurationError(f"unknown sigma mode {self.sigma_mode!r}")
        if self.fixed_threshold is not None and self.fixed_threshold < 0:
            raise ConfigurationError("fixed selection threshold must be nonnegative")

    def threshold(self, stats):
        """Return ``(u, sigma2_hat)`` for the given statistics."""
        sigma2_hat = None
        if self.sigma_mode == "estimated":
            sigma2_hat = estimate_sigma2(stats, self.sigma2_estimator)
        if self.fixed_threshold is not None:
            scale = 1.0 if sigma2_hat is None else sigma2_hat
            return scale * self.fixed_threshold, sigma2_hat
        u = selection_threshold(stats.n, stats.m, self.gamma, self.sigma_mode, sigma2_hat)
        return u, sigma2_hat


class HypothesisDecision(NamedTuple):
    index: int
    selected: bool
    rejected: bool
    p_value: float
    critical_value: Optional[float]


@dataclass
class ProcedureResult:
    """Outcome of one procedure on one dataset.

    ``critical`` holds the cutoff each hypothesis was compared with: a t
    quantile for Bonferroni-type stages, a p-value level for stepwise ones,
    NaN where no comparison took place.
    """

    method: str
    selected: np.ndarray
    rejected: np.ndarray
    p_values: np.ndarray
    critical: np.ndarray
    selection_threshold: Optional[float] = None
    sigma2_hat: Optional[float] = None
    extra: dict = field(default_factory=dict)
    global_decision: Optional[bool] = None

    @property
    def rejects_global(self):
        """Global-null decision: the test's own verdict, else 'any rejection'."""
        if self.global_decision is not None:
            return self.global_decision
        return bool(self.rejected.size)

    @property
    def m(self):
        return self.p_values.shape[0]

    @property
    def n_selected(self):
        return int(self.selected.size)

    @property
    def selected_mask(self):
        mask = np.zeros(self.m, dtype=bool)
        mask[self.selected] = True
        return mask

    @property
    def rejected_mask(self):
        mask = np.zeros(self.m, dtype=bool)
        mask[self.rejected] = True
        return mask

    @property
    def per_hypothesis(self):
        sel, rej = self.selected_mask, self.rejected_mask
        return [
            HypothesisDecision(
                i,
                bool(sel[i]),
                bool(rej[i]),
                float(self.p_values[i]),
                None if math.isnan(self.critical[i]) else float(self.critical[i]),
            )
            for i in range(self.m)
        ]


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")


def t_critical(df, alpha, k):
    """``t_df(1 - alpha / (2k))``."""
    return dist.upper_quantile(dist.student_t(df), alpha / (2.0 * k))


def _select(data, rule, stats):
    if stats is None:
        stats = compute_stats(data)
    u, sigma2_hat = rule.threshold(stats)
    selected = np.flatnonzero(stats.s > u)
    return stats, u, sigma2_hat, selected


def two_stage_bonferroni(data, alpha, rule, stats=None):
    """Select ``S_i > u``, then Bonferroni over the selected set using t quantiles."""
    _check_alpha(alpha)
    stats, u, sigma2_hat, selected = _select(data, rule, stats)
    critical = np.full(stats.m, np.nan)
    rejected = np.empty(0, dtype=np.intp)
    if selected.size:
        c = t_critical(stats.n - 1, alpha, selected.size)
        critical[selected] = c
        rejected = selected[np.abs(stats.t[selected]) >= c]
    return ProcedureResult("two_stage_bonferroni", selected, rejected, stats.p, critical, u, sigma2_hat)


def _holm_order(p):
    order = np.argsort(p, kind="stable")
    k = p.size
    levels = 1.0 / (k - np.arange(k))
    return order, levels


def _holm_reject(p, alpha):
    """Positions in ``p`` rejected by Holm's step-down, plus per-position levels."""
    k = p.size
    if k == 0:
        return np.empty(0, dtype=np.intp), np.empty(0)
    order, levels = _holm_order(p)
    levels = alpha * levels
    passed = p[order] <= levels
    n_rej = k if passed.all() else int(np.argmin(passed))
    crit = np.empty(k)
    crit[order] = levels
    return np.sort(order[:n_rej]), crit


def two_stage_holm(data, alpha, rule, stats=None):
    """Select ``S_i > u``, then Holm's step-down over the selected p-values.

    Unselected hypotheses carry p-value one and are never rejected.
    """
    _check_alpha(alpha)
    stats, u, sigma2_hat, selected = _select(data, rule, stats)
    critical = np.full(stats.m, np.nan)
    p_tilde = np.ones(stats.m)
    p_tilde[selected] = stats.p[selected]
    rej_pos, crit = _holm_reject(stats.p[selected], alpha)
    critical[selected] = crit
    rejected = selected[rej_pos]
    return ProcedureResult(
        "two_stage_holm", selected, rejected, stats.p, critical, u, sigma2_hat,
        extra={"p_tilde": p_tilde},
    )


def classic_procedure(p_values, alpha, method):
    """Indices rejected by a standard FWER/FDR procedure applied to ``p_values``."""
    _check_alpha(alpha)
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size and (np.any(p < 0.0) | np.any(p > 1.0) | np.any(np.isnan(p))):
        raise DomainError("p-values must lie in [0, 1]")
    k = p.size
    if k == 0:
        return np.empty(0, dtype=np.intp)
    if method == "bonferroni":
        return np.flatnonzero(p <= alpha / k)
    if method == "holm":
        return _holm_reject(p, alpha)[0]
    order = np.argsort(p, kind="stable")
    ranks = np.arange(1, k + 1)
    if method == "hochberg":
        levels = alpha / (k - ranks + 1)
    elif method == "benjamini_hochberg":
        levels = alpha * ranks / k
    else:
        raise ConfigurationError(f"unknown method {method!r}; expected one of {CLASSIC_METHODS}")
    ok = np.flatnonzero(p[order] <= levels)
    if ok.size == 0:
        return np.empty(0, dtype=np.intp)
    cutoff = p[order[ok[-1]]]
    return np.flatnonzero(p <= cutoff)


def simes_global(p_values, alpha):
    """Reject the global null iff ``min_i k p_(i) / i <= alpha``."""
    _check_alpha(alpha)
    p = np.sort(np.asarray(p_values, dtype=float).ravel())
    if p.size == 0:
        return False
    k = p.size
    return bool(np.min(k * p / np.arange(1, k + 1)) <= alpha)


def hc_statistic(p_values):
    """``max_{i <= m/2} sqrt(m) (i/m - p_(i)) / sqrt(p_(i) (1 - p_(i)))``.

    Accepts a 1-D array or a 2-D array (one row per replication).
    """
    p = np.sort(np.asarray(p_values, dtype=float), axis=-1)
    m = p.shape[-1]
    half = m // 2
    if half == 0:
        return np.full(p.shape[:-1], -np.inf) if p.ndim > 1 else -math.inf
    p = p[..., :half]
    i = np.arange(1, half + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = math.sqrt(m) * (i / m - p) / np.sqrt(p * (1.0 - p))
    # p == 0 gives +inf (numerator positive); p == 1 gives -inf
    z = np.where(np.isnan(z), -np.inf, z)
    out = z.max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


_HC_CACHE = {}
_HC_LOCK = threading.Lock()


@dataclass(frozen=True)
class HCCalibration:
    """Level-alpha critical values for HC* from simulated uniform p-values.

    Critical values depend on ``(m, alpha, seed, reps)`` only and are cached
    process-wide.
    """

    reps: int = 10_000
    seed: int = 0
    chunk: int = 500

    def null_sample(self, m):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(m,))))
        out = np.empty(self.reps)
        for start in range(0, self.reps, self.chunk):
            stop = min(self.reps, start + self.chunk)
            out[start:stop] = hc_statistic(rng.random((stop - start, m)))
        return out

    def critical_value(self, m, alpha):
        _check_alpha(alpha)
        key = (int(m), float(alpha), self.seed, self.reps)
        with _HC_LOCK:
            if key in _HC_CACHE:
                return _HC_CACHE[key]
        value = float(np.quantile(self.null_sample(int(m)), 1.0 - alpha, method="higher"))
        with _HC_LOCK:
            _HC_CACHE.setdefault(key, value)
            return _HC_CACHE[key]


def higher_criticism_global(p_values, alpha, calibration):
    """Reject the global null iff HC* exceeds the calibrated critical value."""
    if calibration is None:
        raise ConfigurationError("higher criticism needs a calibration")
    p = np.asarray(p_values, dtype=float).ravel()
    return bool(hc_statistic(p) > calibration.critical_value(p.size, alpha))


SplitDfRule = Literal["n1-1", "n1"]


def split_sizes(n, r):
    if not 0.0 < r < 1.0:
        raise ConfigurationError(f"split fraction must lie in (0, 1), got {r}")
    n1 = int(math.floor(r * n))
    n2 = n - n1
    if n1 < 2 or n2 < 2:
        raise ConfigurationError(f"split of n={n} at r={r} gives subsamples ({n1}, {n2}); both need >= 2")
    return n1, n2


def split_selection_cutoff(n1, m, gamma, df_rule="n1-1"):
    """``t_{n1-1}(1 - m^(gamma-1)/2)``; ``df_rule='n1'`` uses ``n1`` degrees of freedom."""
    if df_rule not in ("n1-1", "n1"):
        raise ConfigurationError(f"unknown split df rule {df_rule!r}")
    beta = selection_level(m, gamma)
    df = n1 - 1 if df_rule == "n1-1" else n1
    if beta >= 1.0:
        return 0.0
    return dist.upper_quantile(dist.student_t(df), beta / 2.0)


def split_sample_procedure(data, alpha, gamma, r=0.5, df_rule="n1-1"):
    """Select on the first ``floor(r n)`` observations, test on the rest.

    Selection keeps ``|T^(1)_i| > t_{n1-1}(1 - m^(gamma-1)/2)``; rejection needs
    ``|T^(2)_i| >= t_{n2-1}(1 - alpha / (2 |S|))``.
    """
    _check_alpha(alpha)
    x = _as_dataset(data)
    m, n = x.shape
    n1, n2 = split_sizes(n, r)
    first = compute_stats(x[:, :n1], with_p=False)
    second = compute_stats(x[:, n1:], with_p=False)
    u = split_selection_cutoff(n1, m, gamma, df_rule)
    selected = np.flatnonzero(np.abs(first.t) > u)
    critical = np.full(m, np.nan)
    rejected = np.empty(0, dtype=np.intp)
    # p-values only where a second-stage test actually happens
    p_second = np.full(m, np.nan)
    if selected.size:
        p_second[selected] = dist.t_two_sided_pvalues(second.t[selected], n2 - 1)
        c = t_critical(n2 - 1, alpha, selected.size)
        critical[selected] = c
        rejected = selected[np.abs(second.t[selected]) >= c]
    return ProcedureResult(
        "split_sample", selected, rejected, p_second, critical, u, None,
        extra={"n1": n1, "n2": n2, "first_t": first.t, "second_t": second.t},
    )
