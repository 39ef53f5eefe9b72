"""CDFs and quantiles for the normal, chi-square and Student t families.

Chi-square probabilities come from the regularized incomplete gamma function
and Student t probabilities from the regularized incomplete beta function,
each evaluated by power series or a Lentz continued fraction depending on
which side of the usual crossover the argument falls. Tail probabilities are
also available in log space so that chi-square quantiles at levels far below
double-precision underflow (``beta = exp(-4500)``) can still be computed.

The module also carries closed-form quantile bounds:

* ``chi2_quantile_bound`` -- ``n + 2 log(1/beta) + c sqrt(n log(1/beta))``,
  an upper bound for ``c = 2`` and a lower bound for ``c = 1/4`` when
  ``n >= 17`` and ``beta <= 1/17``;
* ``t_quantile_bracket`` -- a two-sided bracket for the t quantile matching
  a normal quantile ``u``;
* ``normal_tail_bracket`` -- ``sqrt((1 - delta) 2 log m) <= z_{1-alpha/m} <=
  sqrt(2 log m)`` for large ``m``.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
from typing import Literal, Optional

import numpy as np

from .errors import DomainError, ParameterError
from .roots import newton_bisect

Family = Literal["normal", "chi_square", "student_t"]

_FPMIN = 1e-300
_EPS = 1e-16
_MAXITER = 100_000
_LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class DistSpec:
    family: Family
    df: Optional[int] = None

    def __post_init__(self):
        if self.family not in ("normal", "chi_square", "student_t"):
            raise ParameterError(f"unknown distribution family {self.family!r}")
        if self.family == "normal":
            if self.df is not None:
                raise ParameterError("the normal family takes no degrees of freedom")
            return
        if self.df is None or isinstance(self.df, bool) or int(self.df) != self.df or self.df < 1:
            raise ParameterError(f"{self.family} needs an integer df >= 1, got {self.df!r}")


NORMAL = DistSpec("normal")


def chi_square(df):
    return DistSpec("chi_square", df)


def student_t(df):
    return DistSpec("student_t", df)


@dataclass(frozen=True)
class QuantileBracket:
    lower: float
    upper: float

    def __contains__(self, x):
        return self.lower <= x <= self.upper


# ---------------------------------------------------------------------------
# incomplete gamma


def _gamma_series(a, x):
    # sum_{k>=0} x^k / (a (a+1) ... (a+k)); P(a, x) = exp(prefix) * sum
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x):
    # Lentz evaluation of the continued fraction for Q(a, x) / exp(prefix)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def log_gamma_pq(a, x):
    """Return ``(log P(a, x), log Q(a, x))`` for the regularized incomplete gamma."""
    if x <= 0.0:
        return -math.inf, 0.0
    if math.isinf(x):
        return 0.0, -math.inf
    prefix = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        log_p = prefix + math.log(_gamma_series(a, x))
        log_p = min(log_p, 0.0)
        return log_p, _log1mexp(log_p)
    log_q = prefix + math.log(_gamma_cf(a, x))
    log_q = min(log_q, 0.0)
    return _log1mexp(log_q), log_q


def _log1mexp(log_v):
    """log(1 - exp(log_v)) for log_v <= 0, accurate at both ends."""
    if log_v == 0.0:
        return -math.inf
    if log_v > -0.6931471805599453:
        return math.log(-math.expm1(log_v))
    return math.log1p(-math.exp(log_v))


# ---------------------------------------------------------------------------
# incomplete beta


def _beta_cf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta fraction did not converge (a={a}, b={b}, x={x})")


def betainc_pair(a, b, x, y=None):
    """Return ``(I_x(a, b), 1 - I_x(a, b))``.

    ``y`` may carry ``1 - x`` when the caller can form it without cancellation.
    """
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return 0.0, 1.0
    if y <= 0.0:
        return 1.0, 0.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        lower = math.exp(log_front) * _beta_cf(a, b, x) / a
        return lower, 1.0 - lower
    upper = math.exp(log_front) * _beta_cf(b, a, y) / b
    return 1.0 - upper, upper


# ---------------------------------------------------------------------------
# per-family tails


def _check(dist):
    if not isinstance(dist, DistSpec):
        raise ParameterError(f"expected a DistSpec, got {type(dist).__name__}")
    return dist


def _t_tails(df, x):
    """(cdf, sf) of Student t with ``df`` degrees of freedom at ``x``."""
    if math.isinf(x):
        return (1.0, 0.0) if x > 0 else (0.0, 1.0)
    x2 = x * x
    z = df / (df + x2)
    half_two_sided, _ = betainc_pair(0.5 * df, 0.5, z, x2 / (df + x2))
    tail = 0.5 * half_two_sided
    if x >= 0:
        return 1.0 - tail, tail
    return tail, 1.0 - tail


def cdf(dist, x):
    """P(X <= x) for ``X ~ dist``."""
    dist = _check(dist)
    x = float(x)
    if math.isnan(x):
        raise DomainError("cdf argument is NaN")
    if dist.family == "normal":
        return 0.5 * math.erfc(-x / math.sqrt(2.0))
    if dist.family == "chi_square":
        return math.exp(log_gamma_pq(0.5 * dist.df, 0.5 * x)[0])
    return _t_tails(dist.df, x)[0]


def sf(dist, x):
    """P(X > x) for ``X ~ dist``, computed without forming ``1 - cdf``."""
    dist = _check(dist)
    x = float(x)
    if math.isnan(x):
        raise DomainError("sf argument is NaN")
    if dist.family == "normal":
        return 0.5 * math.erfc(x / math.sqrt(2.0))
    if dist.family == "chi_square":
        return math.exp(log_gamma_pq(0.5 * dist.df, 0.5 * x)[1])
    return _t_tails(dist.df, x)[1]


def log_sf(dist, x):
    """log P(X > x); finite far beyond the underflow point of ``sf``."""
    dist = _check(dist)
    x = float(x)
    if dist.family == "chi_square":
        return log_gamma_pq(0.5 * dist.df, 0.5 * x)[1]
    if dist.family == "normal":
        if x < 5.0:
            return math.log(sf(dist, x))
        return _log_normal_tail(x)
    if x < 0.0:
        return math.log(sf(dist, x))
    if math.isinf(x):
        return -math.inf
    # log of 0.5 * I_z(df/2, 1/2) via its leading factor when the value underflows
    tail = _t_tails(dist.df, x)[1]
    if tail > 1e-280:
        return math.log(tail)
    nu = dist.df
    x2 = x * x
    z = nu / (nu + x2)
    a, b = 0.5 * nu, 0.5
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(z) + b * math.log(x2 / (nu + x2))
    )
    return _LOG_HALF + log_front + math.log(_beta_cf(a, b, z) / a)


def _log_normal_tail(x):
    # continued fraction for the Mills ratio, good for x >= 5
    cf = x
    for k in range(60, 0, -1):
        cf = x + k / cf
    return -0.5 * x * x - 0.5 * math.log(2.0 * math.pi) - math.log(cf)


def pdf(dist, x):
    dist = _check(dist)
    return math.exp(log_pdf(dist, x))


def log_pdf(dist, x):
    dist = _check(dist)
    x = float(x)
    if dist.family == "normal":
        return -0.5 * x * x - 0.5 * math.log(2.0 * math.pi)
    nu = dist.df
    if dist.family == "chi_square":
        if x < 0.0:
            return -math.inf
        if x == 0.0:
            if nu == 1:
                return math.inf
            return math.log(0.5) if nu == 2 else -math.inf
        k = 0.5 * nu
        return (k - 1.0) * math.log(x) - 0.5 * x - k * math.log(2.0) - math.lgamma(k)
    return (
        math.lgamma(0.5 * (nu + 1)) - math.lgamma(0.5 * nu) - 0.5 * math.log(nu * math.pi)
        - 0.5 * (nu + 1) * math.log1p(x * x / nu)
    )


# ---------------------------------------------------------------------------
# quantiles


def _expand_upper(f, start):
    hi = start
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("could not bracket quantile")
    return hi


def _upper_quantile_log(dist, log_q):
    """x >= median solving log P(X > x) = log_q, for log_q <= log(1/2)."""

    def f(x):
        return log_sf(dist, x) - log_q

    def fprime(x):
        # d/dx log sf = -pdf / sf
        return -math.exp(log_pdf(dist, x) - log_sf(dist, x))

    if dist.family == "chi_square":
        lo = max(0.0, dist.df - 1.0) if log_q < math.log(0.3) else 0.0
        if f(lo) <= 0.0:
            lo = 0.0
        hi = _expand_upper(f, max(2.0 * dist.df, dist.df - 4.0 * log_q, 1.0))
    else:
        lo = 0.0
        hi = _expand_upper(f, 1.0)
    return newton_bisect(f, fprime, lo, hi, xtol=1e-14, ftol=1e-15)


def _chi2_lower_quantile_log(df, log_p):
    def f(x):
        return log_gamma_pq(0.5 * df, 0.5 * x)[0] - log_p

    def fprime(x):
        dist = chi_square(df)
        return math.exp(log_pdf(dist, x) - log_gamma_pq(0.5 * df, 0.5 * x)[0])

    hi = _expand_upper(lambda x: -f(x), max(float(df), 1.0))
    return newton_bisect(f, fprime, 0.0, hi, xtol=1e-14, ftol=1e-15)


def _check_probability(p):
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    return p


@lru_cache(maxsize=4096)
def _quantile_cached(dist, p):
    if dist.family == "chi_square":
        if p <= 0.5:
            return _chi2_lower_quantile_log(dist.df, math.log(p))
        return _upper_quantile_log(dist, math.log1p(-p))
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -_upper_quantile_log(dist, math.log(p))
    return _upper_quantile_log(dist, math.log1p(-p))


def quantile(dist, p):
    """Inverse of :func:`cdf`: the x with ``cdf(dist, x) = p``."""
    return _quantile_cached(_check(dist), _check_probability(p))


def upper_quantile(dist, q):
    """The x with ``sf(dist, x) = q``; more accurate than ``quantile(1 - q)`` for small q."""
    return _upper_quantile_cached(_check(dist), _check_probability(q))


@lru_cache(maxsize=4096)
def _upper_quantile_cached(dist, q):
    if q <= 0.5:
        return _upper_quantile_log(dist, math.log(q))
    return quantile(dist, 1.0 - q)


def chi2_upper_quantile_log(df, log_beta):
    """Chi-square quantile ``chi2_df(1 - beta)`` given ``log(beta)``.

    Works for ``beta`` far below the smallest representable double.
    """
    dist = chi_square(df)
    log_beta = float(log_beta)
    if not log_beta < 0.0:
        raise DomainError(f"log(beta) must be negative, got {log_beta}")
    if log_beta <= _LOG_HALF:
        return _upper_quantile_log(dist, log_beta)
    return quantile(dist, -math.expm1(log_beta))


# ---------------------------------------------------------------------------
# vectorised two-sided t p-values (hot path of the simulation harness)


def _beta_cf_vec(a, b, x):
    # same recurrence as _beta_cf, iterating only over unconverged entries
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    out = np.empty_like(x)
    live = np.arange(x.size)
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d[np.abs(d) < _FPMIN] = _FPMIN
        c = 1.0 + aa / c
        c[np.abs(c) < _FPMIN] = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d[np.abs(d) < _FPMIN] = _FPMIN
        c = 1.0 + aa / c
        c[np.abs(c) < _FPMIN] = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        done = np.abs(delta - 1.0) < _EPS
        if done.any():
            out[live[done]] = h[done]
            keep = ~done
            live, x, c, d, h = live[keep], x[keep], c[keep], d[keep], h[keep]
            if live.size == 0:
                return out
    raise ArithmeticError("vectorised incomplete beta fraction did not converge")


def t_two_sided_pvalues(t, df):
    """``2 * P(T_df > |t|)`` elementwise; infinite ``t`` maps to 0."""
    t = np.abs(np.asarray(t, dtype=float))
    if int(df) != df or df < 1:
        raise ParameterError(f"t distribution needs integer df >= 1, got {df}")
    out = np.zeros(t.shape, dtype=float)
    finite = np.isfinite(t)
    if not finite.any():
        return out
    tf = t[finite]
    t2 = tf * tf
    x = df / (df + t2)
    y = t2 / (df + t2)
    a, b = 0.5 * df, 0.5
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    res = np.empty_like(x)
    direct = x < (a + 1.0) / (a + b + 2.0)
    with np.errstate(divide="ignore"):
        if direct.any():
            xd, yd = x[direct], y[direct]
            front = np.exp(lbeta + a * np.log(xd) + b * np.log(yd))
            res[direct] = front * _beta_cf_vec(a, b, xd) / a
        swap = ~direct
        if swap.any():
            xs, ys = x[swap], y[swap]
            front = np.exp(lbeta + a * np.log(xs) + b * np.log(ys))
            upper = np.where(ys > 0.0, front * _beta_cf_vec(b, a, ys) / b, 0.0)
            res[swap] = 1.0 - upper
    out[finite] = np.clip(res, 0.0, 1.0)
    return out


# ---------------------------------------------------------------------------
# closed-form bounds


def chi2_quantile_bound(n, beta, c):
    """``n + 2 log(1/beta) + c sqrt(n log(1/beta))``.

    Upper bound on ``chi2_n(1 - beta)`` at ``c = 2`` for every n; lower bound at
    ``c = 1/4`` for ``n >= 17`` and ``exp(-560 n) <= beta <= 1/17``.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if not c > 0.0:
        raise DomainError(f"c must be positive, got {c}")
    return chi2_quantile_bound_log(n, math.log(beta), c)


def chi2_quantile_bound_log(n, log_beta, c):
    """Same as :func:`chi2_quantile_bound` with ``beta`` passed as its logarithm."""
    t = -float(log_beta)
    if t < 0.0:
        raise DomainError(f"log(beta) must be <= 0, got {log_beta}")
    return n + 2.0 * t + c * math.sqrt(n * t)


def t_quantile_bracket(n, u):
    """Bracket ``(L_n(u), U_n(u))`` for the t_n quantile at probability ``Phi(u)``.

    ``L_n(u) = sqrt(n (exp(u^2/n) - 1))``, ``U_n(u) = sqrt(n (exp(u^2/(n - 1/2)) - 1))``.
    """
    if not u > 0.0:
        raise DomainError(f"u must be positive, got {u}")
    if not n > 0.5:
        raise DomainError(f"n must exceed 1/2, got {n}")
    lower = math.sqrt(n * math.expm1(u * u / n))
    upper = math.sqrt(n * math.expm1(u * u / (n - 0.5)))
    return QuantileBracket(lower, upper)


def normal_tail_bracket(m, alpha, delta):
    """Bracket ``(sqrt((1-delta) 2 log m), sqrt(2 log m))`` for ``z_{1-alpha/m}``.

    Containment only holds for ``m`` large enough given ``alpha`` and ``delta``;
    the formula itself is returned unconditionally.
    """
    if not m > 1:
        raise DomainError(f"m must exceed 1, got {m}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"delta must lie in [0, 1), got {delta}")
    two_log_m = 2.0 * math.log(m)
    return QuantileBracket(math.sqrt((1.0 - delta) * two_log_m), math.sqrt(two_log_m))
