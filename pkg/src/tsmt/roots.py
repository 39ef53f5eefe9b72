"""Scalar root finding and one-dimensional minimization."""

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def bisect(f, lo, hi, xtol=1e-12, maxiter=500):
    """Root of ``f`` on ``[lo, hi]`` by bisection.

    ``f(lo)`` and ``f(hi)`` must have opposite signs (or one of them be zero).
    """
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid in (lo, hi):
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def newton_bisect(f, fprime, lo, hi, xtol=1e-12, ftol=0.0, xabs=0.0, maxiter=400):
    """Safeguarded Newton iteration inside a sign-change bracket.

    A Newton step is taken whenever it lands strictly inside the current
    bracket, otherwise the bracket is bisected. Stops once the bracket is
    narrower than ``max(xtol * |x|, xabs)`` or ``|f(x)| <= ftol``.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"root not bracketed: f({lo})={flo}, f({hi})={fhi}")
    lo_positive = flo > 0
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fx = f(x)
        if abs(fx) <= ftol:
            return x
        if (fx > 0) == lo_positive:
            lo = x
        else:
            hi = x
        if hi - lo <= max(xtol * abs(x), xabs):
            return 0.5 * (lo + hi)
        step_ok = False
        d = fprime(x)
        if d != 0.0 and math.isfinite(d):
            x_new = x - fx / d
            step_ok = lo < x_new < hi
        x = x_new if step_ok else 0.5 * (lo + hi)
    return x


def golden_section(f, lo, hi, tol=1e-4, maxiter=200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(argmin, fmin)``. The endpoints are compared against the interior
    optimum so that minima sitting on the boundary are reported exactly.
    """
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    x_best = 0.5 * (a + b)
    f_best = f(x_best)
    for edge in (lo, hi):
        f_edge = f(edge)
        if f_edge < f_best:
            x_best, f_best = edge, f_edge
    return x_best, f_best
