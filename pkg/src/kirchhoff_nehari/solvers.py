"""Nehari-manifold and global minimization, extremal searches, sweeps and continuation."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._descent import sphere_descent
from .discretize import (
    DiscreteFunction,
    RadialMesh,
    bubble,
    discrete_sobolev_constant,
    energy_and_gradient,
    functionals,
    polynomial_profile,
    random_profile,
    sobolev_minimizer,
)
from .exceptions import ConvergenceError, KirchhoffError, NehariEmptyError
from .fiber import (
    FiberClass,
    FiberInput,
    FiberMap,
    ProblemParams,
    c0_level,
    classify_fiber,
    extremal_gradient,
    hyperbola_regime,
    hyperbola_value,
    lambda0_of_u,
    sharp_sobolev_constant,
    sigma_lower_bound,
    threshold_constants,
)

TOL_LEVEL = 1e-10
TOL_GRAD = 1e-8
DEGENERATE_LEVEL_GAP = 1e-6
DIVERGENCE_LEVEL = -1e12
C_MINUS_OPEN_QUESTION = "c- is the N- infimum; equality with the mountain-pass level is not established"


# --------------------------------------------------------------------------
# helpers


def parallel_map(fn, items, workers: int = 1) -> list:
    """Ordered map; with ``workers > 1`` the calls run in separate processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def default_starts(mesh: RadialMesh, n_starts: int = 8, seed: int = 0) -> list[DiscreteFunction]:
    """Deterministic start directions: bubbles, polynomial profiles, random profiles."""
    rng = np.random.default_rng(seed)
    starts = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for eps in (1e-1, 1e-2, 1e-3):
            starts.append(bubble(mesh, eps))
    for k in (1, 2, 3):
        starts.append(polynomial_profile(mesh, k))
    while len(starts) < n_starts:
        starts.append(random_profile(mesh, rng))
    return starts[:n_starts]


def mesh_thresholds(mesh: RadialMesh) -> tuple[float, float, float]:
    """``(S_h, C1_h, C2_h)`` for a mesh."""
    S_h = discrete_sobolev_constant(mesh)
    C1, C2 = threshold_constants(mesh.N, S_h)
    return S_h, C1, C2


def _direction_input(x: np.ndarray, mesh: RadialMesh, params: ProblemParams) -> FiberInput:
    u = DiscreteFunction.from_free(mesh, x)
    fv = functionals(u, params)
    return FiberInput(fv.A, fv.C, fv.P, params)


# --------------------------------------------------------------------------
# result records


@dataclass
class NehariResult:
    """A minimization outcome.

    ``minimizer`` is scaled so that ``t = 1`` is the relevant critical point of
    its own fiber (or is the global minimizer itself for ``branch="Global"``).
    ``flags`` collects diagnostics such as ``"above_c0"`` or
    ``"degenerate-level"``.
    """

    level: float
    minimizer: DiscreteFunction
    branch: str
    t_projection: float
    iterations: int
    converged: bool
    grad_norm: float
    params: ProblemParams
    gap_to_c0: float | None = None
    flags: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "branch": self.branch,
            "t_projection": self.t_projection,
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "gap_to_c0": self.gap_to_c0,
            "flags": list(self.flags),
            "notes": list(self.notes),
            "params": asdict(self.params),
        }


@dataclass(frozen=True)
class VerificationReport:
    pde_residual: float
    pohozaev_defect: float
    energy: float

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# Nehari minus


def _nehari_objective(mesh: RadialMesh, params: ProblemParams):
    wf = mesh.weights[:-1]
    state = {}

    def objective(x):
        inp = _direction_input(x, mesh, params)
        rep = classify_fiber(inp)
        if rep.t_minus is None:
            raise NehariEmptyError(f"fiber is {rep.fiber_class.value}")
        t = rep.t_minus
        v = t * x
        A = inp.A * t * t
        f = np.abs(v) ** (params.crit - 2.0) * v
        if params.lam:
            f = f + params.lam * np.abs(v) ** (params.p - 2.0) * v
        g = t * ((params.a + params.b * A) * v - mesh.ksolve(wf * f))
        state["t"] = t
        state["report"] = rep
        return rep.energy_minus, g

    return objective, state


def _level_flags(level: float, params: ProblemParams) -> tuple[float | None, list]:
    if params.b <= 0:
        return None, []
    c0 = c0_level(params.a, params.b, params.N)
    flags = []
    if level > c0:
        flags.append("above_c0")
    if abs(level - c0) <= DEGENERATE_LEVEL_GAP * c0:
        flags.append("degenerate-level")
    return level - c0, flags


def nehari_minus_minimize(
    params: ProblemParams,
    mesh: RadialMesh,
    start: DiscreteFunction | None = None,
    tol_level: float = TOL_LEVEL,
    tol_grad: float = TOL_GRAD,
    maxiter: int = 5000,
) -> NehariResult:
    """Minimize the energy over the local-maximum part of the Nehari set.

    Each direction ``u`` with unit H^1_0 norm is sent to ``t^-(u) u`` where
    ``t^-`` is the local maximum of its fiber; the reduced functional
    ``J(u) = Phi(t^- u)`` is minimized by projected gradient descent on the
    sphere. By the envelope property its gradient is ``t^- grad Phi(t^- u)``.

    Raises
    ------
    NehariEmptyError
        If the fiber of ``start`` has no local maximum.
    """
    if mesh.N != params.N:
        raise ValueError("mesh and params disagree on N")
    if start is None:
        start = bubble(mesh, 1e-2)
    start.mesh.check(mesh)
    objective, state = _nehari_objective(mesh, params)
    inp = _direction_input(start.free, mesh, params)
    rep = classify_fiber(inp)
    if rep.t_minus is None:
        raise NehariEmptyError(f"Nehari set is empty along the start direction (fiber {rep.fiber_class.value})")

    res = sphere_descent(objective, start.free, mesh.kmul, tol_level=tol_level, tol_grad=tol_grad, maxiter=maxiter)
    objective(res.u)  # refresh the fiber state at the final iterate
    t = state["t"]
    u = DiscreteFunction.from_free(mesh, t * res.u)
    gap, flags = _level_flags(res.value, params)
    fm = FiberMap(FiberInput(*_afp(u, params), params))
    if abs(fm.dpsi(1.0)) > TOL_GRAD * fm.dpsi_scale(1.0):
        flags.append("fiber-residual")
    if fm.d2psi(1.0) >= 0:
        flags.append("wrong-branch")
    if not res.converged:
        flags.append("not-converged")
    return NehariResult(
        level=res.value,
        minimizer=u,
        branch="Nminus",
        t_projection=t,
        iterations=res.iterations,
        converged=res.converged,
        grad_norm=res.grad_norm,
        params=params,
        gap_to_c0=gap,
        flags=flags,
        notes=[C_MINUS_OPEN_QUESTION],
    )


def _afp(u: DiscreteFunction, params: ProblemParams):
    fv = functionals(u, params)
    return fv.A, fv.C, fv.P


def nehari_minus_multistart(
    params: ProblemParams, mesh: RadialMesh, n_starts: int = 8, seed: int = 0, workers: int = 1
) -> NehariResult:
    """Best :func:`nehari_minus_minimize` over the default starts.

    Ties are broken by lower level, then fewer iterations.
    """
    starts = default_starts(mesh, n_starts, seed)
    runs = parallel_map(_NehariTask(params, mesh), starts, workers)
    good = [r for r in runs if r is not None]
    if not good:
        raise NehariEmptyError("Nehari set is empty along every start direction")
    return min(good, key=lambda r: (r.level, r.iterations))


@dataclass(frozen=True)
class _NehariTask:
    params: ProblemParams
    mesh: RadialMesh

    def __call__(self, start):
        try:
            return nehari_minus_minimize(self.params, self.mesh, start)
        except NehariEmptyError:
            return None


# --------------------------------------------------------------------------
# global minimization


def global_minimize(
    params: ProblemParams,
    mesh: RadialMesh,
    start: DiscreteFunction | None = None,
    tol_level: float = TOL_LEVEL,
    tol_grad: float = TOL_GRAD,
    maxiter: int = 10000,
    n_starts: int = 8,
    seed: int = 0,
) -> NehariResult:
    """Minimize the energy over all grid functions.

    Each start direction is moved to the global minimum of its fiber; when
    that minimum is not negative the ray gives no descent from zero and the
    direction is skipped. Otherwise Sobolev gradient descent with
    Barzilai-Borwein steps and a nonmonotone Armijo test runs in the full
    space. Without ``start`` the default starts and the mesh Sobolev
    minimizer are all tried, together with the minimizing direction of
    :func:`extremal_lambda0` when it is defined. The trivial minimizer with level 0 is
    returned when no descent reaches negative energy.

    Raises
    ------
    ValueError
        For ``b = 0``: the energy is then unbounded below.
    ConvergenceError
        If the energy drops below ``-1e12`` (divergence).
    """
    if params.b <= 0:
        raise ValueError("global minimization needs b > 0; for b = 0 the energy is unbounded below")
    if start is None:
        starts = [sobolev_minimizer(mesh).minimizer] + default_starts(mesh, n_starts, seed)
        try:
            # the direction realizing the estimate of lambda_0^* is the first
            # one whose fiber dips below zero as lambda grows
            starts.insert(0, extremal_lambda0(params, mesh, n_starts, seed).direction)
        except (ValueError, KirchhoffError):
            pass
    else:
        start.mesh.check(mesh)
        starts = [start]
    best = None
    for st in starts:
        res = _global_descent(params, mesh, st, tol_level, tol_grad, maxiter)
        if res is not None and (best is None or (res.level, res.iterations) < (best.level, best.iterations)):
            best = res
    if best is None:
        zero = DiscreteFunction.zeros(mesh)
        return NehariResult(0.0, zero, "Global", 0.0, 0, True, 0.0, params, flags=["trivial"])
    return best


def _global_descent(params, mesh, start, tol_level, tol_grad, maxiter):
    rep = classify_fiber(FiberInput(*_afp(start, params), params))
    if rep.inf_energy >= 0.0:
        return None

    def phi_grad(x):
        eg = energy_and_gradient(DiscreteFunction.from_free(mesh, x), params)
        if eg.phi <= DIVERGENCE_LEVEL:
            raise ConvergenceError("energy diverged to -infinity", best=eg.phi)
        return eg.phi, eg.grad.free

    x = rep.t_plus * start.free
    val, g = phi_grad(x)
    hist = [val]
    gn = math.sqrt(g @ mesh.kmul(g))
    eta = 0.1 * math.sqrt(x @ mesh.kmul(x)) / max(gn, 1e-300)
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        ref = max(hist[-10:])
        for _ in range(60):
            trial = x - eta * g
            tval, tg = phi_grad(trial)
            if tval <= ref - 1e-4 * eta * gn * gn:
                break
            eta *= 0.5
        else:
            converged = gn <= tol_grad * max(1.0, abs(val))
            break
        s_vec, y_vec = trial - x, tg - g
        sy = float(s_vec @ mesh.kmul(y_vec))
        x, g, val = trial, tg, tval
        gn = math.sqrt(g @ mesh.kmul(g))
        hist.append(val)
        eta = float(s_vec @ mesh.kmul(s_vec)) / sy if sy > 0 else 0.1 / max(gn, 1e-300)
        scale = max(1.0, abs(val))
        if gn <= tol_grad * scale and abs(hist[-1] - hist[-2]) <= tol_level * scale:
            converged = True
            break
    if val >= 0.0:
        return None
    u = DiscreteFunction.from_free(mesh, x)
    return NehariResult(val, u, "Global", 1.0, it, converged, gn, params, flags=[] if converged else ["not-converged"])


# --------------------------------------------------------------------------
# extremal parameters


@dataclass
class ExtremalResult:
    """Best value of ``lambda_0(u)`` or ``lambda(u)`` found over directions.

    Being the value at an explicit direction, ``value`` is an upper bound on
    the infimum over all grid functions.
    """

    which: str
    value: float
    direction: DiscreteFunction
    start_values: list
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "upper_bound": self.value,
            "start_values": list(self.start_values),
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _extremal_objective(mesh: RadialMesh, params: ProblemParams, which: str):
    wf = mesh.weights[:-1]
    s, p = params.crit, params.p

    def objective(x):
        inp = _direction_input(x, mesh, params)
        val, dA, dC, dP = extremal_gradient(inp, which)
        if not val > 0 or not math.isfinite(dA):
            raise KirchhoffError("direction left the admissible cone")
        ax = np.abs(x)
        gC = mesh.ksolve(wf * s * ax ** (s - 2.0) * x)
        gP = mesh.ksolve(wf * p * ax ** (p - 2.0) * x)
        return val, 2.0 * dA * x + dC * gC + dP * gP

    return objective


def _extremal_search(which, params, mesh, n_starts, seed, maxiter, extra_starts=()):
    params = params.replace(lam=0.0)
    objective = _extremal_objective(mesh, params, which)
    starts = list(extra_starts) + default_starts(mesh, n_starts, seed)
    best = None
    start_values = []
    for st in starts:
        try:
            v0, _ = objective(st.free)
        except KirchhoffError:
            start_values.append(math.nan)
            continue
        res = sphere_descent(objective, st.free, mesh.kmul, maxiter=maxiter)
        start_values.append(res.value)
        if best is None or (res.value, res.iterations) < (best.value, best.iterations):
            best = res
    if best is None:
        raise KirchhoffError(f"no start direction has a positive {which}(u)")
    u = DiscreteFunction.from_free(mesh, best.u)
    return ExtremalResult(which, best.value, u, start_values, best.converged, best.iterations)


def _check_above_c1(params: ProblemParams, mesh: RadialMesh) -> None:
    _, C1h, _ = mesh_thresholds(mesh)
    if hyperbola_value(params.a, params.b, params.N) < C1h * (1.0 - 1e-9):
        raise ValueError("extremal searches need a^((N-4)/2) b >= C1 (mesh-level constant)")


def extremal_lambda0(
    params: ProblemParams, mesh: RadialMesh, n_starts: int = 8, seed: int = 0, maxiter: int = 3000
) -> ExtremalResult:
    """Upper bound on ``inf_u lambda_0(u)`` by multi-start descent.

    The descent uses the analytic gradient of ``u -> lambda_0(u)`` obtained
    from the partial derivatives in ``(A, C, P)`` at the optimal ``t``.
    The mesh Sobolev minimizer is included among the starts since minimizing
    sequences concentrate near the C1 hyperbola.
    """
    _check_above_c1(params, mesh)
    extra = [sobolev_minimizer(mesh).minimizer]
    return _extremal_search("lambda0", params, mesh, n_starts, seed, maxiter, extra)


def extremal_lambda(
    params: ProblemParams, mesh: RadialMesh, n_starts: int = 8, seed: int = 0, maxiter: int = 3000
) -> ExtremalResult:
    """Upper bound on ``inf_u lambda(u)``; see :func:`extremal_lambda0`."""
    _check_above_c1(params, mesh)
    extra = [sobolev_minimizer(mesh).minimizer]
    return _extremal_search("lambda", params, mesh, n_starts, seed, maxiter, extra)


# --------------------------------------------------------------------------
# phase diagram


PHASE_COLUMNS = (
    "a",
    "b",
    "hyperbola_value",
    "regime",
    "regime_exact",
    "lambda0_star_est",
    "nehari_empty_at_lambda0",
    "min_inf_phi0",
    "error",
)


@dataclass(frozen=True)
class PhaseCell:
    """One ``(a, b)`` cell.

    ``regime`` uses the mesh-level constants and ``regime_exact`` the sharp
    ones. ``lambda0_star_est`` is the smallest ``lambda_0(u)`` over the
    sampled directions (an upper bound on the infimum), present only when
    every sampled direction has a positive value. ``min_inf_phi0`` is the
    smallest fiber infimum at ``lambda = 0``; it is negative exactly when a
    sampled direction has negative energy.
    """

    a: float
    b: float
    hyperbola_value: float
    regime: str
    regime_exact: str
    lambda0_star_est: float | None
    nehari_empty_at_lambda0: bool
    min_inf_phi0: float
    error: str = ""

    def row(self) -> list:
        return [getattr(self, c) for c in PHASE_COLUMNS]


@dataclass(frozen=True)
class _PhaseTask:
    N: int
    p: float
    directions: tuple
    C1: float
    C2: float
    C1_exact: float
    C2_exact: float
    estimate: bool

    def __call__(self, ab):
        a, b = ab
        x = hyperbola_value(a, b, self.N)
        regime = hyperbola_regime(a, b, self.N, self.C1, self.C2)
        regime_exact = hyperbola_regime(a, b, self.N, self.C1_exact, self.C2_exact)
        try:
            params = ProblemParams(self.N, a, b, 0.0, self.p)
            empty = True
            min_inf = math.inf
            lam0 = math.inf
            for A, C, P in self.directions:
                inp = FiberInput(A, C, P, params)
                rep = classify_fiber(inp)
                if rep.fiber_class in (FiberClass.TWO_CRITICAL, FiberClass.SINGLE_MAX):
                    empty = False
                # inf of the lambda = 0 fiber is -inf when b = 0
                min_inf = min(min_inf, -math.inf if b == 0 else rep.inf_energy)
                if self.estimate:
                    ev = lambda0_of_u(inp, check=False)
                    lam0 = min(lam0, ev.value)
            est = lam0 if self.estimate and lam0 > 0 and math.isfinite(lam0) else None
            return PhaseCell(a, b, x, regime, regime_exact, est, empty, min_inf)
        except KirchhoffError as exc:
            return PhaseCell(a, b, x, regime, regime_exact, None, False, math.nan, str(exc))


def phase_diagram(
    a_values,
    b_values,
    mesh: RadialMesh,
    p: float = 3.0,
    lambda_policy: str = "sampled",
    n_starts: int = 8,
    seed: int = 0,
    workers: int = 1,
) -> list[PhaseCell]:
    """Classify every ``(a, b)`` cell of a grid against the critical hyperbolas.

    Sample directions (the default starts plus the mesh Sobolev minimizer)
    are reduced to their ``(A, C, P)`` once; each cell then only does scalar
    fiber work. ``lambda_policy="sampled"`` adds the smallest sampled
    ``lambda_0(u)``; ``"none"`` skips it. Cells are returned in row-major
    order (``a`` outer) regardless of ``workers``.
    """
    if lambda_policy not in ("sampled", "none"):
        raise ValueError(f"unknown lambda policy {lambda_policy!r}")
    N = mesh.N
    probe = ProblemParams(N, 1.0, 0.0, 0.0, p)
    dirs = [sobolev_minimizer(mesh).minimizer] + default_starts(mesh, n_starts, seed)
    directions = tuple(_afp(u, probe) for u in dirs)
    _, C1h, C2h = mesh_thresholds(mesh)
    C1, C2 = threshold_constants(N, sharp_sobolev_constant(N))
    task = _PhaseTask(N, p, directions, C1h, C2h, C1, C2, lambda_policy == "sampled")
    cells = [(float(a), float(b)) for a in a_values for b in b_values]
    return parallel_map(task, cells, workers)


# --------------------------------------------------------------------------
# verification


def verify_solution(u: DiscreteFunction, params: ProblemParams) -> VerificationReport:
    """Residual of the discrete equation and the Pohozaev defect of ``u``.

    With ``kappa = a + b A`` frozen, a radial solution of
    ``-kappa Lap u = f(u)`` on the unit ball satisfies

        (N-2)/2 kappa A - N int F(u) + kappa/2 |S^(N-1)| u'(1)^2 = 0.

    The defect is the absolute value of the left side divided by its
    largest term.
    """
    eg = energy_and_gradient(u, params)
    fv = eg.values
    if fv.A == 0.0:
        return VerificationReport(0.0, 0.0, 0.0)
    N = params.N
    kappa = params.a + params.b * fv.A
    potential = fv.C / params.crit + params.lam * fv.P / params.p
    boundary = 0.5 * kappa * N * u.mesh.omega_N * u.boundary_slope() ** 2
    terms = ((N - 2) / 2.0 * kappa * fv.A, N * potential, boundary)
    defect = abs(terms[0] - terms[1] + terms[2]) / max(terms)
    return VerificationReport(eg.grad_norm, defect, eg.phi)


# --------------------------------------------------------------------------
# continuation in b


@dataclass
class ContinuationResult:
    b_values: list
    results: list
    verification: VerificationReport | None
    aborted_at: int | None = None
    error: str = ""

    @property
    def levels(self) -> list:
        return [r.level for r in self.results]

    def to_dict(self) -> dict:
        return {
            "b_values": list(self.b_values),
            "levels": self.levels,
            "results": [r.to_dict() for r in self.results],
            "verification": self.verification.to_dict() if self.verification else None,
            "aborted_at": self.aborted_at,
            "error": self.error,
        }


def continuation_b_to_zero(
    b_values,
    lam: float,
    mesh: RadialMesh,
    a: float = 1.0,
    p: float = 3.0,
    n_starts: int = 8,
    seed: int = 0,
) -> ContinuationResult:
    """Track the N^- minimizer along a decreasing sequence of ``b``.

    The first problem is solved from every default start and the lowest level
    kept; later problems are warm-started from the previous minimizer. If
    the Nehari set becomes empty along the way the run stops and
    ``aborted_at`` holds the failing index. The last minimizer is checked
    with :func:`verify_solution` at its own ``b``.
    """
    b_values = [float(b) for b in b_values]
    if not lam > 0:
        raise ValueError("continuation needs lambda > 0")
    if any(b2 >= b1 for b1, b2 in zip(b_values, b_values[1:])) or min(b_values) < 0:
        raise ValueError("b values must be non-negative and strictly decreasing")
    N = mesh.N
    results: list[NehariResult] = []
    prev = None
    for k, b in enumerate(b_values):
        params = ProblemParams(N, a, b, lam, p)
        try:
            if prev is None:
                res = nehari_minus_multistart(params, mesh, n_starts, seed)
            else:
                res = nehari_minus_minimize(params, mesh, prev.normalized())
        except NehariEmptyError as exc:
            last = results[-1] if results else None
            ver = verify_solution(last.minimizer, last.params) if last else None
            return ContinuationResult(b_values, results, ver, aborted_at=k, error=str(exc))
        results.append(res)
        prev = res.minimizer
    ver = verify_solution(results[-1].minimizer, results[-1].params)
    return ContinuationResult(b_values, results, ver)


# --------------------------------------------------------------------------
# second-solution gate


@dataclass(frozen=True)
class GateResult:
    branch: str
    exists_hint: bool
    estimate: float | None
    c_minus: float | None
    sigma: float | None
    flags: tuple = ()

    def to_dict(self) -> dict:
        return asdict(self)


def second_solution_gate(
    params: ProblemParams,
    mesh: RadialMesh,
    branch: str = "p0",
    n_starts: int = 8,
    seed: int = 0,
    lambda_max: float = 1e6,
    rtol: float = 1e-3,
) -> GateResult:
    """Check the level condition that yields a second solution.

    ``branch="p0"`` computes ``c^-(a, b, 0)`` and solves
    ``(p-2)^2 a^2 / (4 p (4-p) b) = c^-`` for ``p0`` in ``(2, 2*)``; the hint
    is ``p > p0``. ``branch="lambda_tilde"`` bisects in ``lam`` for the first
    value where ``c^-(a, b, lam)`` drops below the same bound at the given
    ``p``; the hint is ``params.lam`` exceeding it.
    """
    if params.b <= 0:
        raise ValueError("the gate needs b > 0")
    a, b, s = params.a, params.b, params.crit
    sigma = sigma_lower_bound(params)
    c0 = c0_level(a, b, params.N)
    if branch == "p0":
        try:
            cm = nehari_minus_multistart(params.replace(lam=0.0), mesh, n_starts, seed).level
        except NehariEmptyError:
            return GateResult("p0", False, None, None, sigma, ("nehari-empty",))
        if cm >= c0:
            return GateResult("p0", False, None, cm, sigma, ("inconsistent: c- >= c0",))

        def eq(q):
            return (q - 2.0) ** 2 * a * a / (4.0 * q * (4.0 - q) * b) - cm

        p0 = brentq(eq, 2.0, s, xtol=1e-14)
        return GateResult("p0", params.p > p0, p0, cm, sigma)
    if branch == "lambda_tilde":

        def c_minus(lam):
            try:
                return nehari_minus_multistart(params.replace(lam=lam), mesh, n_starts, seed).level
            except NehariEmptyError:
                return math.inf

        hi = 1.0
        while c_minus(hi) >= sigma:
            hi *= 2.0
            if hi > lambda_max:
                return GateResult("lambda_tilde", False, None, None, sigma, ("no-crossing",))
        lo = 0.0
        if c_minus(lo) < sigma:
            return GateResult("lambda_tilde", True, 0.0, c_minus(lo), sigma)
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if c_minus(mid) < sigma:
                hi = mid
            else:
                lo = mid
        return GateResult("lambda_tilde", params.lam > hi, hi, c_minus(hi), sigma)
    raise ValueError(f"unknown gate branch {branch!r}")
