"""Asymptotic detection thresholds for the squared alternative mean.

All thresholds live in the regime ``log(m) / n -> d``. For the two-stage
procedure with selection level ``beta = m^(gamma - 1)`` the boundary is

    max(exp(2 gamma d) - 1,  2 (1 - gamma) d + c*(gamma, d) sqrt((1 - gamma) d))

where ``c*`` solves ``a(c) = (1 - gamma) d`` with ``a(c) = [g^{-1}(2/c^2) / c]^2``
and ``g(x) = (e^x - 1 - x) / x^2``. The detection branch comes from the
Bonferroni critical value over roughly ``m^gamma`` selected hypotheses, the
selection branch from the extreme chi-square quantile.
"""

from dataclasses import dataclass
import math
from typing import Literal, Optional

from .errors import ConfigurationError, DomainError
from .roots import bisect, golden_section, newton_bisect

Method = Literal["two_stage", "bonferroni_t", "bonferroni_z", "split_sample"]
METHODS = ("two_stage", "bonferroni_t", "bonferroni_z", "split_sample")

GAMMA_SEARCH = (0.01, 1.0)
GAMMA_TOL = 1e-4
C_TOL = 1e-13
G_INV_TOL = 1e-12


def exp_remainder_ratio(x):
    """``(e^x - 1 - x) / x^2`` with its continuous extension ``1/2`` at zero."""
    x = float(x)
    if x < 0.0:
        raise DomainError(f"defined on [0, inf), got {x}")
    if x < 1e-2:
        # Taylor series sum_k x^k / (k + 2)!
        term, total = 0.5, 0.5
        for k in range(1, 10):
            term *= x / (k + 2)
            total += term
        return total
    return (math.expm1(x) - x) / (x * x)


def _g_prime(x):
    if x < 1e-2:
        return 1.0 / 6.0 + x / 12.0 + x * x / 40.0
    return (x * math.expm1(x) - 2.0 * (math.expm1(x) - x)) / x**3


def exp_remainder_ratio_inverse(y):
    """Unique ``x >= 0`` with ``exp_remainder_ratio(x) = y`` for ``y >= 1/2``."""
    y = float(y)
    if y < 0.5:
        raise DomainError(f"g takes values in [1/2, inf), got {y}")
    if y == 0.5:
        return 0.0
    hi = 1.0
    while exp_remainder_ratio(hi) < y:
        hi *= 2.0
    return newton_bisect(lambda x: exp_remainder_ratio(x) - y, _g_prime, 0.0, hi, xtol=1e-15, xabs=G_INV_TOL)


def tail_rate(c):
    """``[g^{-1}(2/c^2) / c]^2`` for ``0 < c < 2``, extended by zero for ``c >= 2``.

    ``g`` is :func:`exp_remainder_ratio`. This is the value of ``log(1/beta) / n``
    at which ``n + 2 log(1/beta) + c sqrt(n log(1/beta))`` matches the exact
    chi-square quantile asymptotically.
    """
    c = float(c)
    if c <= 0.0:
        raise DomainError(f"tail_rate needs c > 0, got {c}")
    if c >= 2.0:
        return 0.0
    return (exp_remainder_ratio_inverse(2.0 / (c * c)) / c) ** 2


def c_star(gamma, d):
    """Root of ``tail_rate(c) = (1 - gamma) d`` in ``(0, 2]``; 2 when ``(1 - gamma) d = 0``."""
    if d < 0.0:
        raise DomainError(f"d must be nonnegative, got {d}")
    if not 0.0 < gamma <= 1.0:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    v = (1.0 - gamma) * d
    if v <= 0.0:
        return 2.0
    lo = 1.0
    while tail_rate(lo) <= v:
        lo *= 0.5
        if lo < 1e-12:
            raise DomainError(f"(1 - gamma) d = {v} is too large for c* to be resolved")
    return bisect(lambda c: tail_rate(c) - v, lo, 2.0, xtol=C_TOL)


# short names used by the formulas above
g = exp_remainder_ratio
g_inverse = exp_remainder_ratio_inverse
a = tail_rate


def d_from_sizes(m, n):
    """Plug-in ``d = log(m) / n`` linking a finite problem to the asymptotic regime."""
    if m < 1 or n < 1:
        raise DomainError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    return math.log(m) / n


@dataclass(frozen=True)
class AsymptoticRegime:
    d: float
    gamma: Optional[float] = None
    r: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.d >= 0.0:
            raise ConfigurationError(f"d must be nonnegative, got {self.d}")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.r is not None and not 0.0 < self.r < 1.0:
            raise ConfigurationError(f"split fraction r must lie in (0, 1), got {self.r}")
        if self.epsilon is not None and not 0.0 < self.epsilon <= 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @property
    def selected_count_regime(self):
        """True when ``epsilon + gamma > 1``, where |S_n| / m^gamma -> 1."""
        if self.gamma is None or self.epsilon is None:
            return None
        return self.epsilon + self.gamma > 1.0


@dataclass(frozen=True)
class ThresholdReport:
    method: str
    mu_squared_threshold: float
    detection_branch: Optional[float] = None
    selection_branch: Optional[float] = None


def two_stage_branches(gamma, d):
    """(detection, selection) branches of the two-stage boundary."""
    detection = math.expm1(2.0 * gamma * d)
    v = (1.0 - gamma) * d
    selection = 2.0 * v + c_star(gamma, d) * math.sqrt(v)
    return detection, selection


def detection_threshold(method, regime):
    """Squared-mean detection boundary for ``method`` under ``regime``."""
    d = regime.d
    if method == "two_stage":
        if regime.gamma is None:
            raise ConfigurationError("two_stage threshold needs gamma")
        det, sel = two_stage_branches(regime.gamma, d)
        return ThresholdReport(method, max(det, sel), det, sel)
    if method == "bonferroni_t":
        return ThresholdReport(method, math.expm1(2.0 * d))
    if method == "bonferroni_z":
        return ThresholdReport(method, 2.0 * d)
    if method == "split_sample":
        if regime.r is None or regime.gamma is None:
            raise ConfigurationError("split_sample threshold needs both r and gamma")
        r, gamma = regime.r, regime.gamma
        exponent = max(2.0 * (1.0 - gamma) * d / r, 2.0 * gamma * d / (1.0 - r))
        return ThresholdReport(method, math.expm1(exponent))
    raise ConfigurationError(f"unknown threshold method {method!r}; expected one of {METHODS}")


def optimal_gamma(d):
    """Selection exponent minimizing the two-stage threshold at ``d``.

    Returns ``(gamma_star, threshold)``. Golden-section search over
    ``[0.01, 1]`` to 1e-4 in gamma; ``d = 0`` returns ``(1.0, 0.0)``.
    """
    if d < 0.0:
        raise DomainError(f"d must be nonnegative, got {d}")
    if d == 0.0:
        return 1.0, 0.0

    def objective(gamma):
        return max(two_stage_branches(gamma, d))

    return golden_section(objective, *GAMMA_SEARCH, tol=GAMMA_TOL)


def figure_grid(start=0.05, stop=1.0, step=0.05):
    """d-grid used for the tuning figure: 0.05, 0.10, ..., 1.00."""
    count = int(round((stop - start) / step)) + 1
    return [round(start + k * step, 10) for k in range(count)]
