"""Scalar root finding: Newton's method safeguarded by bisection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .exceptions import RootFindingError

MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class Root:
    x: float
    fx: float
    iterations: int


def safeguarded_newton(
    f: Callable[[float], float],
    df: Callable[[float], float],
    lo: float,
    hi: float,
    x0: float | None = None,
    xtol: float = 1e-12,
    maxiter: int = 200,
) -> Root:
    """Find a root of ``f`` inside the sign-change bracket ``[lo, hi]``.

    A Newton step is rejected in favour of bisection when it leaves the
    current bracket or when it is not shrinking fast enough compared with
    the step before last. The bracket is updated after every evaluation,
    so the iterate can never escape it.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return Root(lo, 0.0, 0)
    if fhi == 0.0:
        return Root(hi, 0.0, 0)
    if (flo > 0) == (fhi > 0):
        raise RootFindingError(f"no sign change on [{lo:.6g}, {hi:.6g}]: f={flo:.3g}, {fhi:.3g}")

    x = 0.5 * (lo + hi) if x0 is None or not lo < x0 < hi else x0
    dx_old = hi - lo
    dx = dx_old
    fx = f(x)
    for it in range(1, maxiter + 1):
        if fx == 0.0:
            return Root(x, fx, it)
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        d = df(x)
        newton_ok = d != 0.0 and math.isfinite(d)
        if newton_ok:
            xn = x - fx / d
            newton_ok = lo < xn < hi and abs(2.0 * fx) <= abs(dx_old * d)
        dx_old = dx
        if not newton_ok:
            xn = 0.5 * (lo + hi)
        dx = xn - x
        x = xn
        fx = f(x)
        if abs(dx) <= xtol * abs(x) or hi - lo <= xtol * abs(x):
            return Root(x, fx, it)
    raise RootFindingError(f"no convergence after {maxiter} iterations on [{lo:.6g}, {hi:.6g}]")


def expand_until(
    predicate: Callable[[float], bool], start: float, factor: float, max_steps: int = MAX_DOUBLINGS
) -> float:
    """Multiply ``start`` by ``factor`` until ``predicate`` holds; return that point."""
    x = start
    for _ in range(max_steps + 1):
        if predicate(x):
            return x
        x *= factor
    raise RootFindingError(
        f"bracket expansion from {start:.6g} by factor {factor} failed after {max_steps} steps"
    )
