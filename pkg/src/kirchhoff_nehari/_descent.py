"""Projected gradient descent on the unit sphere of the discrete H^1_0 norm.

Used for the mesh Sobolev constant, the N^- minimization and the extremal
searches. The step length follows Barzilai-Borwein with a nonmonotone
Armijo test against the worst of the last few accepted values, which is
robust for the mildly nonconvex, badly scaled objectives met here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import KirchhoffError

# objective(u) -> (value, riesz_gradient); raise KirchhoffError or return
# (inf, None) for points outside the admissible set.
Objective = Callable[[np.ndarray], "tuple[float, np.ndarray | None]"]


@dataclass
class DescentResult:
    u: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _safe_eval(objective: Objective, u: np.ndarray):
    try:
        val, g = objective(u)
    except (KirchhoffError, FloatingPointError, ZeroDivisionError, OverflowError):
        return math.inf, None
    if g is None or not math.isfinite(val):
        return math.inf, None
    return val, g


def sphere_descent(
    objective: Objective,
    u0: np.ndarray,
    kmul: Callable[[np.ndarray], np.ndarray],
    tol_level: float = 1e-10,
    tol_grad: float = 1e-8,
    maxiter: int = 5000,
    memory: int = 10,
    armijo: float = 1e-4,
    first_step: float = 0.05,
    max_backtracks: int = 60,
) -> DescentResult:
    """Minimize ``objective`` over ``{u : u^T K u = 1}``.

    ``kmul`` applies the stiffness matrix ``K``; gradients returned by the
    objective are Riesz representatives in the ``K`` inner product. The
    iteration stops when the value changes by less than ``tol_level`` and
    the projected gradient norm is below ``tol_grad``, both relative to
    ``max(1, |value|)``.
    """

    def knorm(v):
        return math.sqrt(max(float(v @ kmul(v)), 0.0))

    def project(u, g):
        return g - float(g @ kmul(u)) * u

    u = u0 / knorm(u0)
    val, g = _safe_eval(objective, u)
    if g is None:
        raise KirchhoffError("descent start point is not admissible")
    g = project(u, g)
    gn = knorm(g)
    eta = first_step / max(gn, 1e-300)
    hist = [val]
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        scale = max(1.0, abs(val))
        if gn <= tol_grad * scale and it > 1 and abs(hist[-1] - hist[-2]) <= tol_level * scale:
            converged = True
            it -= 1
            break
        ref = max(hist[-memory:])
        for _ in range(max_backtracks):
            trial = u - eta * g
            trial = trial / knorm(trial)
            tval, tg = _safe_eval(objective, trial)
            if tg is not None and tval <= ref - armijo * eta * gn * gn:
                break
            eta *= 0.5
        else:
            # no acceptable step: stagnation at working precision
            converged = gn <= tol_grad * scale
            break
        tg = project(trial, tg)
        s_vec = trial - u
        y_vec = tg - g
        sy = float(s_vec @ kmul(y_vec))
        ss = float(s_vec @ kmul(s_vec))
        u, g, val = trial, tg, tval
        gn = knorm(g)
        hist.append(val)
        eta = ss / sy if sy > 0 else first_step / max(gn, 1e-300)
        if gn <= tol_grad * max(1.0, abs(val)) and abs(hist[-1] - hist[-2]) <= tol_level * max(1.0, abs(val)):
            converged = True
            break
    return DescentResult(u=u, value=val, grad_norm=gn, iterations=it, converged=converged, history=hist)
