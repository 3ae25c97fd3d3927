"""Scalar analysis of the fiber maps of the critical Kirchhoff energy.

Everything here works on the reduced data of a direction ``u``:

    A = ||grad u||_2^2,   C = ||u||_{2*}^{2*},   P = ||u||_p^p

because the fiber map ``psi(t) = Phi(t u)`` depends on ``u`` only through
these three numbers (for the pure power perturbation)::

    psi(t) = a/2 A t^2 + b/4 A^2 t^4 - C t^{2*} / 2* - lam/p P t^p

No discretization is involved; the functions are pure and cheap, so the
solvers call them inside their inner loops.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Protocol

from ._roots import expand_until, safeguarded_newton
from .exceptions import RootFindingError

TOL_ROOT = 1e-12
TOL_RESIDUAL = 1e-10
TOL_DEGENERATE = 1e-9
HYPERBOLA_BAND = 1e-9


def critical_exponent(N: int) -> float:
    return 2.0 * N / (N - 2.0)


@dataclass(frozen=True)
class ProblemParams:
    """Parameters ``(N, a, b, lam, p)`` of the Kirchhoff problem.

    ``lam`` is the perturbation parameter (``lambda`` is a Python keyword).
    ``b = 0`` is admitted for the Brezis-Nirenberg limit.
    """

    N: int = 5
    a: float = 1.0
    b: float = 0.0
    lam: float = 0.0
    p: float = 3.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 5:
            raise ValueError(f"dimension N must be an integer >= 5, got {self.N}")
        crit = critical_exponent(self.N)
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.b >= 0:
            raise ValueError(f"b must be non-negative, got {self.b}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if not 2.0 < self.p < crit:
            raise ValueError(f"p must lie in (2, {crit:.6g}), got {self.p}")

    @property
    def crit(self) -> float:
        """The critical Sobolev exponent 2N/(N-2)."""
        return critical_exponent(self.N)

    @property
    def hyperbola_value(self) -> float:
        return hyperbola_value(self.a, self.b, self.N)

    def replace(self, **changes) -> "ProblemParams":
        values = asdict(self)
        values.update(changes)
        return ProblemParams(**values)


def hyperbola_value(a: float, b: float, N: int) -> float:
    """The combination ``a^((N-4)/2) b`` compared against C1 and C2."""
    return a ** ((N - 4) / 2.0) * b


# --------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class Constants:
    """Sobolev and threshold constants of dimension ``N``.

    ``omega_N`` is the volume of the unit ball in R^N (used by the radial
    quadrature); ``sphere_area`` is the area of the unit sphere S^N in
    R^(N+1), which is what enters the sharp Sobolev constant.
    """

    N: int
    S_N: float
    omega_N: float
    sphere_area: float
    C1: float
    C2: float

    @property
    def ratio(self) -> float:
        return self.C1 / self.C2

    def hyperbola_b(self, a: float) -> tuple[float, float]:
        """Values of ``b`` on the C1 and C2 hyperbolas for the given ``a``."""
        scale = a ** (-(self.N - 4) / 2.0)
        return self.C1 * scale, self.C2 * scale


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


def sharp_sobolev_constant(N: int) -> float:
    """Best constant in ``S ||u||_{2*}^2 <= ||grad u||_2^2`` on R^N."""
    area = 2.0 * math.pi ** ((N + 1) / 2.0) / math.gamma((N + 1) / 2.0)
    return N * (N - 2) / 4.0 * area ** (2.0 / N)


def c1_scaled(N: int) -> float:
    """``S^(N/2) C1(N)``, which does not depend on the Sobolev constant."""
    return 4.0 * (N - 4) ** ((N - 4) / 2.0) / N ** ((N - 2) / 2.0)


def c2_scaled(N: int) -> float:
    """``S^(N/2) C2(N)``."""
    return 2.0 * (N - 4) ** ((N - 4) / 2.0) / (N - 2) ** ((N - 2) / 2.0)


def threshold_constants(N: int, S: float) -> tuple[float, float]:
    """C1 and C2 computed with an arbitrary Sobolev constant ``S``.

    Passing the mesh-level constant gives thresholds that are consistent
    with discrete functionals.
    """
    denom = S ** (N / 2.0)
    return c1_scaled(N) / denom, c2_scaled(N) / denom


def sobolev_constant(N: int) -> Constants:
    """Return the Sobolev constant, ball volume and critical constants for ``N``.

    Raises
    ------
    ValueError
        For ``N <= 4``: the thresholds involve ``(N-4)^((N-4)/2)`` and the
        quartic Kirchhoff term no longer dominates the critical one.
    """
    if int(N) != N or N <= 4:
        raise ValueError(f"constants are defined for integer N > 4, got {N}")
    N = int(N)
    S = sharp_sobolev_constant(N)
    C1, C2 = threshold_constants(N, S)
    area = 2.0 * math.pi ** ((N + 1) / 2.0) / math.gamma((N + 1) / 2.0)
    return Constants(N=N, S_N=S, omega_N=unit_ball_volume(N), sphere_area=area, C1=C1, C2=C2)


def hyperbola_regime(a: float, b: float, N: int, C1: float, C2: float, band: float = HYPERBOLA_BAND) -> str:
    """Locate ``(a, b)`` relative to the two critical hyperbolas."""
    x = hyperbola_value(a, b, N)
    if abs(x - C1) <= band * C1:
        return "OnC1"
    if abs(x - C2) <= band * C2:
        return "OnC2"
    if x < C1:
        return "BelowC1"
    if x < C2:
        return "Between"
    return "AboveC2"


# --------------------------------------------------------------------------
# the auxiliary functions g and h


@dataclass(frozen=True)
class GHAnalysis:
    t0_g: float
    g_min: float
    t0_h: float
    h_min: float
    t_ab_minus: float | None
    t_ab_plus: float | None
    t_ab_degenerate: float | None
    c0_level: float


def c0_level(a: float, b: float, N: int) -> float:
    """Energy of every point of the degenerate Nehari set when ``lam = 0``."""
    s = critical_exponent(N)
    return (s - 2.0) ** 2 * a**2 / (4.0 * s * (4.0 - s) * b)


def g_h_analysis(params: ProblemParams, S: float | None = None, band: float = HYPERBOLA_BAND) -> GHAnalysis:
    """Minimizers of ``g``, ``h`` and the critical points of ``t^2 g(t)``.

    ``g(t) = a/2 + b/4 t^2 - S^(-2*/2) t^(2*-2) / 2*`` and
    ``h(t) = a + b t^2 - S^(-2*/2) t^(2*-2)``. The critical points of
    ``t^2 g(t)`` are the zeros of ``h``, which exist exactly when ``h`` has a
    negative minimum.

    ``S`` defaults to the sharp Sobolev constant; pass the mesh-level
    constant to analyse a discretized problem.
    """
    if params.b <= 0:
        raise ValueError("g/h analysis needs b > 0: the minimizer t0 is undefined for b = 0")
    a, b, s = params.a, params.b, params.crit
    if S is None:
        S = sharp_sobolev_constant(params.N)
    k = S ** (-s / 2.0)

    def g(t):
        return a / 2.0 + b / 4.0 * t * t - k * t ** (s - 2.0) / s

    def h(t):
        return a + b * t * t - k * t ** (s - 2.0)

    def dh(t):
        return 2.0 * b * t - k * (s - 2.0) * t ** (s - 3.0)

    t0_g = (s * b * S ** (s / 2.0) / (2.0 * (s - 2.0))) ** (1.0 / (s - 4.0))
    t0_h = (2.0 * b * S ** (s / 2.0) / (s - 2.0)) ** (1.0 / (s - 4.0))
    g_min, h_min = g(t0_g), h(t0_h)

    t_minus = t_plus = t_deg = None
    if abs(h_min) <= band * a:
        t_deg = t0_h
    elif h_min < 0:
        lo = expand_until(lambda t: h(t) > 0, t0_h / 2.0, 0.5)
        hi = expand_until(lambda t: h(t) > 0, 2.0 * t0_h, 2.0)
        t_minus = safeguarded_newton(h, dh, lo, t0_h, xtol=TOL_ROOT).x
        t_plus = safeguarded_newton(h, dh, t0_h, hi, xtol=TOL_ROOT).x
    return GHAnalysis(
        t0_g=t0_g,
        g_min=g_min,
        t0_h=t0_h,
        h_min=h_min,
        t_ab_minus=t_minus,
        t_ab_plus=t_plus,
        t_ab_degenerate=t_deg,
        c0_level=c0_level(a, b, params.N),
    )


def sigma_lower_bound(params: ProblemParams) -> float:
    """Lower bound ``(p-2)^2 a^2 / (4 p (4-p) b)`` on the degenerate Nehari levels."""
    if params.b <= 0:
        raise ValueError("sigma lower bound needs b > 0")
    p, a, b = params.p, params.a, params.b
    return (p - 2.0) ** 2 * a**2 / (4.0 * p * (4.0 - p) * b)


# --------------------------------------------------------------------------
# fiber maps


class Perturbation(Protocol):
    """Hook for the subcritical term along a ray.

    ``value(t)`` is ``int F(x, t u) dx``; ``d1`` and ``d2`` are its first two
    derivatives in ``t``. Only the pure power case is shipped.
    """

    def value(self, t: float) -> float: ...

    def d1(self, t: float) -> float: ...

    def d2(self, t: float) -> float: ...


@dataclass(frozen=True)
class PowerPerturbation:
    P: float
    p: float

    def value(self, t):
        return self.P * t**self.p / self.p

    def d1(self, t):
        return self.P * t ** (self.p - 1.0)

    def d2(self, t):
        return (self.p - 1.0) * self.P * t ** (self.p - 2.0)

    def d3(self, t):
        return (self.p - 1.0) * (self.p - 2.0) * self.P * t ** (self.p - 3.0)


@dataclass(frozen=True)
class FiberInput:
    """Reduced data ``(A, C, P)`` of a direction plus the problem parameters.

    The Sobolev inequality ``C <= S^(-2*/2) A^(2*/2)`` holds for inputs that
    come from actual functions, but it is not enforced: abstract inputs such
    as ``A = C = 1`` are useful for exercising the scalar algebra. Use
    :meth:`sobolev_consistent` to check it.
    """

    A: float
    C: float
    P: float
    params: ProblemParams
    perturbation: Perturbation | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.A > 0 and math.isfinite(self.A)):
            raise ValueError(f"A must be positive and finite, got {self.A}")
        if not (self.C > 0 and math.isfinite(self.C)):
            raise ValueError(f"C must be positive and finite, got {self.C}")
        if not (self.P >= 0 and math.isfinite(self.P)):
            raise ValueError(f"P must be non-negative and finite, got {self.P}")

    def sobolev_consistent(self, S: float | None = None, rtol: float = 1e-12) -> bool:
        if S is None:
            S = sharp_sobolev_constant(self.params.N)
        s = self.params.crit
        return self.C <= S ** (-s / 2.0) * self.A ** (s / 2.0) * (1.0 + rtol)

    def scaled(self, mu: float) -> "FiberInput":
        """Reduced data of ``mu * u``."""
        s, p = self.params.crit, self.params.p
        return FiberInput(mu * mu * self.A, mu**s * self.C, mu**p * self.P, self.params)

    def with_params(self, **changes) -> "FiberInput":
        return FiberInput(self.A, self.C, self.P, self.params.replace(**changes), self.perturbation)

    def fiber(self) -> "FiberMap":
        return FiberMap(self)


class FiberMap:
    """``psi(t) = Phi(t u)`` and its derivatives for one :class:`FiberInput`."""

    def __init__(self, inp: FiberInput, lam: float | None = None):
        prm = inp.params
        self.A, self.C = inp.A, inp.C
        self.a, self.b, self.s = prm.a, prm.b, prm.crit
        self.lam = prm.lam if lam is None else lam
        self.pert = inp.perturbation or PowerPerturbation(inp.P, prm.p)
        self.is_power = isinstance(self.pert, PowerPerturbation)

    def psi(self, t):
        A, C, s = self.A, self.C, self.s
        return (
            0.5 * self.a * A * t * t
            + 0.25 * self.b * A * A * t**4
            - C * t**s / s
            - self.lam * self.pert.value(t)
        )

    def dpsi(self, t):
        A, C, s = self.A, self.C, self.s
        return self.a * A * t + self.b * A * A * t**3 - C * t ** (s - 1.0) - self.lam * self.pert.d1(t)

    def d2psi(self, t):
        A, C, s = self.A, self.C, self.s
        return (
            self.a * A
            + 3.0 * self.b * A * A * t * t
            - (s - 1.0) * C * t ** (s - 2.0)
            - self.lam * self.pert.d2(t)
        )

    def dpsi_scale(self, t):
        """Sum of the magnitudes of the terms of ``psi'``; the yardstick for residuals."""
        A, C, s = self.A, self.C, self.s
        return self.a * A * t + self.b * A * A * t**3 + C * t ** (s - 1.0) + abs(self.lam * self.pert.d1(t))

    # psi'(t) = t (aA - phi(t))
    def phi(self, t):
        A, C, s = self.A, self.C, self.s
        return -self.b * A * A * t * t + C * t ** (s - 2.0) + self.lam * self.pert.d1(t) / t

    def dphi(self, t):
        A, C, s = self.A, self.C, self.s
        pert = self.lam * (self.pert.d2(t) * t - self.pert.d1(t)) / (t * t)
        return -2.0 * self.b * A * A * t + (s - 2.0) * C * t ** (s - 3.0) + pert

    def d2phi(self, t):
        A, C, s = self.A, self.C, self.s
        base = -2.0 * self.b * A * A + (s - 2.0) * (s - 3.0) * C * t ** (s - 4.0)
        if self.is_power:
            P, p = self.pert.P, self.pert.p
            return base + self.lam * (p - 2.0) * (p - 3.0) * P * t ** (p - 4.0)
        h = 1e-6 * t
        return (self.dphi(t + h) - self.dphi(t - h)) / (2.0 * h)

    def reduced_dpsi(self, t):
        """``psi'(t) / t = aA - phi(t)``."""
        return self.a * self.A - self.phi(t)


class FiberClass(str, enum.Enum):
    INCREASING = "Increasing"
    INFLECTION_CRITICAL = "InflectionCritical"
    TWO_CRITICAL = "TwoCritical"
    SINGLE_MAX = "SingleMax"


@dataclass(frozen=True)
class FiberReport:
    """Outcome of :func:`classify_fiber`.

    ``margin`` is ``(aA - max phi) / max(aA, |max phi|)``: positive for
    increasing fibers, negative when two critical points exist, and within
    the degenerate band for inflection fibers. ``residuals`` holds
    ``|psi'(t)| / scale`` at every reported root.
    """

    fiber_class: FiberClass
    t_minus: float | None = None
    t_plus: float | None = None
    t_degenerate: float | None = None
    t_star: float | None = None
    energy_minus: float | None = None
    energy_plus: float | None = None
    energy_degenerate: float | None = None
    margin: float | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def has_local_max(self) -> bool:
        return self.t_minus is not None

    @property
    def inf_energy(self) -> float:
        """``inf_{t>0} psi(t)``; zero unless the local minimum dips below 0."""
        if self.energy_plus is not None:
            return min(0.0, self.energy_plus)
        return 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["fiber_class"] = self.fiber_class.value
        return out


def _root_on(fm: FiberMap, lo: float, hi: float, x0: float | None = None) -> float:
    return safeguarded_newton(fm.reduced_dpsi, lambda t: -fm.dphi(t), lo, hi, x0=x0, xtol=TOL_ROOT).x


def _check_residual(fm: FiberMap, t: float, name: str, residuals: dict) -> None:
    res = abs(fm.dpsi(t)) / fm.dpsi_scale(t)
    residuals[name] = res
    if res > TOL_RESIDUAL:
        raise RootFindingError(f"root {name}={t:.6g} has scaled residual {res:.3g} > {TOL_RESIDUAL}")


def _argmax_phi(fm: FiberMap) -> float:
    """Unique maximizer of ``phi`` (requires ``b > 0``)."""
    A, C, s = fm.A, fm.C, fm.s
    guess = ((s - 2.0) * C / (2.0 * fm.b * A * A)) ** (1.0 / (4.0 - s))
    lo = expand_until(lambda t: fm.dphi(t) > 0, guess, 0.5)
    hi = expand_until(lambda t: fm.dphi(t) < 0, max(guess, lo) * 2.0, 2.0)
    return safeguarded_newton(fm.dphi, fm.d2phi, lo, hi, xtol=TOL_ROOT).x


def classify_fiber(inp: FiberInput, tol_degenerate: float = TOL_DEGENERATE) -> FiberReport:
    """Classify the fiber map of ``inp`` and locate its critical points.

    The critical points of ``psi`` on ``(0, inf)`` solve ``aA = phi(t)`` with
    ``phi(t) = -b A^2 t^2 + C t^(2*-2) + lam P t^(p-2)``. For ``b > 0``
    ``phi`` has a unique maximizer ``t*``; comparing ``aA`` with ``phi(t*)``
    gives the class, and the roots on either side of ``t*`` are the local
    maximum ``t_minus`` and the local minimum ``t_plus``. For ``b = 0``
    ``phi`` is increasing and the single root is a local maximum.

    Raises
    ------
    RootFindingError
        If a root cannot be bracketed or its residual is too large.
    """
    prm = inp.params
    if prm.lam < 0:
        raise ValueError("negative lambda is not supported")
    fm = FiberMap(inp)
    residuals: dict = {}
    aA = fm.a * fm.A

    if fm.b == 0.0:
        guess = (aA / fm.C) ** (1.0 / (fm.s - 2.0))
        hi = expand_until(lambda t: fm.reduced_dpsi(t) < 0, guess, 2.0)
        lo = expand_until(lambda t: fm.reduced_dpsi(t) > 0, hi / 2.0, 0.5)
        t_minus = _root_on(fm, lo, hi)
        _check_residual(fm, t_minus, "t_minus", residuals)
        return FiberReport(
            FiberClass.SINGLE_MAX,
            t_minus=t_minus,
            energy_minus=fm.psi(t_minus),
            residuals=residuals,
        )

    t_star = _argmax_phi(fm)
    phi_star = fm.phi(t_star)
    margin = (aA - phi_star) / max(aA, abs(phi_star))
    if abs(margin) <= tol_degenerate:
        return FiberReport(
            FiberClass.INFLECTION_CRITICAL,
            t_degenerate=t_star,
            t_star=t_star,
            energy_degenerate=fm.psi(t_star),
            margin=margin,
        )
    if margin > 0:
        return FiberReport(FiberClass.INCREASING, t_star=t_star, margin=margin)

    lo = expand_until(lambda t: fm.reduced_dpsi(t) > 0, t_star / 2.0, 0.5)
    hi = expand_until(lambda t: fm.reduced_dpsi(t) > 0, t_star * 2.0, 2.0)
    t_minus = _root_on(fm, lo, t_star)
    t_plus = _root_on(fm, t_star, hi)
    _check_residual(fm, t_minus, "t_minus", residuals)
    _check_residual(fm, t_plus, "t_plus", residuals)
    return FiberReport(
        FiberClass.TWO_CRITICAL,
        t_minus=t_minus,
        t_plus=t_plus,
        t_star=t_star,
        energy_minus=fm.psi(t_minus),
        energy_plus=fm.psi(t_plus),
        margin=margin,
        residuals=residuals,
    )


# --------------------------------------------------------------------------
# extremal values lambda_0(u) and lambda(u)


@dataclass(frozen=True)
class ExtremalValue:
    """Extremal parameter of one direction.

    ``status`` is ``"ok"`` when the value is positive, and
    ``"subcritical-threshold"`` when the ``lam = 0`` fiber already fails
    the corresponding positivity (then ``value <= 0``, possibly ``-inf``).
    """

    value: float
    t: float | None
    status: str = "ok"
    probes_consistent: bool | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _bracket_increasing_root(q, guess: float) -> tuple[float, float]:
    """Bracket the root of a function that is negative near 0 and positive at infinity."""
    if q(guess) < 0:
        lo = guess
        hi = expand_until(lambda t: q(t) > 0, guess * 2.0, 2.0)
    else:
        hi = guess
        lo = expand_until(lambda t: q(t) < 0, guess / 2.0, 0.5)
    return lo, hi


def _require_p(inp: FiberInput) -> None:
    if not inp.P > 0:
        raise ValueError("extremal values need P = ||u||_p^p > 0")


def _newton_2d(F, x0, tol=1e-13, maxiter=100):
    """Newton's method in two unknowns with a central-difference Jacobian."""
    x = list(x0)
    for _ in range(maxiter):
        f = F(x)
        J = [[0.0, 0.0], [0.0, 0.0]]
        for j in range(2):
            h = 1e-6 * max(abs(x[j]), 1e-8)
            xp, xm = list(x), list(x)
            xp[j] += h
            xm[j] -= h
            fp, fm_ = F(xp), F(xm)
            J[0][j] = (fp[0] - fm_[0]) / (2 * h)
            J[1][j] = (fp[1] - fm_[1]) / (2 * h)
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
        if det == 0.0:
            raise RootFindingError("singular Jacobian in 2-D Newton")
        dx0 = (f[0] * J[1][1] - f[1] * J[0][1]) / det
        dx1 = (J[0][0] * f[1] - J[1][0] * f[0]) / det
        step = 1.0
        while x[0] - step * dx0 <= 0:
            step *= 0.5
        x = [x[0] - step * dx0, x[1] - step * dx1]
        if abs(step * dx0) <= tol * abs(x[0]) and abs(step * dx1) <= tol * max(abs(x[1]), 1e-300):
            return x
    raise RootFindingError("2-D Newton did not converge")


def _probe_lambda0(inp: FiberInput, lam0: float, delta: float = 1e-4) -> bool:
    below = classify_fiber(inp.with_params(lam=lam0 * (1.0 - delta)))
    above = classify_fiber(inp.with_params(lam=lam0 * (1.0 + delta)))
    return below.inf_energy == 0.0 and above.inf_energy < 0.0


def lambda0_of_u(inp: FiberInput, check: bool = True) -> ExtremalValue:
    """The unique ``lam`` at which the fiber has a zero-energy global minimum.

    ``lam`` in ``inp.params`` is ignored. With the power perturbation the
    conditions ``psi = psi' = 0`` are linear in ``lam``; eliminating it gives

        lam = p E(t) / (P t^p),   E(t) = a/2 A t^2 + b/4 A^2 t^4 - C t^(2*) / 2*

    and ``lam_0(u)`` is the minimum of this ratio over ``t > 0``, found as
    the single sign change of ``t E'(t) - p E(t)``.

    When ``check`` is set the result is cross-checked by classifying the
    fibers at ``lam_0 (1 -+ 1e-4)``: the infimum of ``psi`` must be zero below
    and negative above.
    """
    prm = inp.params
    a, b, s, p = prm.a, prm.b, prm.crit, prm.p
    A, C = inp.A, inp.C
    if b == 0.0:
        return ExtremalValue(-math.inf, None, "subcritical-threshold")
    if inp.perturbation is not None:
        return _lambda0_general(inp)
    _require_p(inp)
    P = inp.P

    def energy(t):
        return 0.5 * a * A * t * t + 0.25 * b * A * A * t**4 - C * t**s / s

    def q(t):
        return -(p - 2.0) / 2.0 * a * A + (4.0 - p) / 4.0 * b * A * A * t * t - (s - p) / s * C * t ** (s - 2.0)

    def dq(t):
        return (4.0 - p) / 2.0 * b * A * A * t - (s - p) * (s - 2.0) / s * C * t ** (s - 3.0)

    guess = (s * a * A / ((4.0 - s) * C)) ** (1.0 / (s - 2.0))
    lo, hi = _bracket_increasing_root(q, guess)
    t0 = safeguarded_newton(q, dq, lo, hi, xtol=TOL_ROOT).x
    lam0 = p * energy(t0) / (P * t0**p)
    if lam0 <= 0:
        return ExtremalValue(lam0, t0, "subcritical-threshold")
    probes = _probe_lambda0(inp, lam0) if check else None
    return ExtremalValue(lam0, t0, "ok", probes)


def _lambda0_general(inp: FiberInput) -> ExtremalValue:
    prm = inp.params
    pert = inp.perturbation
    forms = closed_form_thresholds(inp.A, inp.C, prm.a, prm.N)
    t_init = forms.t0_u
    fm0 = FiberMap(inp, lam=0.0)
    lam_init = fm0.psi(t_init) / pert.value(t_init)

    def F(x):
        fm = FiberMap(inp, lam=x[1])
        return fm.psi(x[0]), x[0] * fm.dpsi(x[0])

    t, lam = _newton_2d(F, [t_init, lam_init])
    return ExtremalValue(lam, t, "ok" if lam > 0 else "subcritical-threshold")


def lambda_of_u(inp: FiberInput) -> ExtremalValue:
    """The unique ``lam`` at which the fiber has a degenerate critical point.

    Same elimination as :func:`lambda0_of_u`, applied to ``psi' = psi'' = 0``:
    ``lam(u)`` is the minimum over ``t`` of ``psi_0'(t) / (P t^(p-1))``.
    Below it the fiber is increasing.
    """
    prm = inp.params
    a, b, s, p = prm.a, prm.b, prm.crit, prm.p
    A, C = inp.A, inp.C
    if b == 0.0:
        return ExtremalValue(-math.inf, None, "subcritical-threshold")
    if inp.perturbation is not None:
        return _lambda_general(inp)
    _require_p(inp)
    P = inp.P

    def q(t):
        return -(p - 2.0) * a * A + (4.0 - p) * b * A * A * t * t - (s - p) * C * t ** (s - 2.0)

    def dq(t):
        return 2.0 * (4.0 - p) * b * A * A * t - (s - p) * (s - 2.0) * C * t ** (s - 3.0)

    guess = (2.0 * a * A / ((4.0 - s) * C)) ** (1.0 / (s - 2.0))
    lo, hi = _bracket_increasing_root(q, guess)
    t1 = safeguarded_newton(q, dq, lo, hi, xtol=TOL_ROOT).x
    lam1 = (a * A * t1 + b * A * A * t1**3 - C * t1 ** (s - 1.0)) / (P * t1 ** (p - 1.0))
    return ExtremalValue(lam1, t1, "ok" if lam1 > 0 else "subcritical-threshold")


def _lambda_general(inp: FiberInput) -> ExtremalValue:
    prm = inp.params
    pert = inp.perturbation
    t_init = closed_form_thresholds(inp.A, inp.C, prm.a, prm.N).t_u
    lam_init = FiberMap(inp, lam=0.0).dpsi(t_init) / pert.d1(t_init)

    def F(x):
        fm = FiberMap(inp, lam=x[1])
        return fm.dpsi(x[0]), x[0] * fm.d2psi(x[0])

    t, lam = _newton_2d(F, [t_init, lam_init])
    return ExtremalValue(lam, t, "ok" if lam > 0 else "subcritical-threshold")


def extremal_gradient(inp: FiberInput, which: str = "lambda0") -> tuple[float, float, float, float]:
    """Value and partial derivatives ``(d/dA, d/dC, d/dP)`` of an extremal map.

    At the minimizing ``t`` of the eliminated ratio the ``t``-derivative
    vanishes, so the partials are those of the ratio at fixed ``t``.
    Power perturbation only.
    """
    prm = inp.params
    a, b, s, p = prm.a, prm.b, prm.crit, prm.p
    A, P = inp.A, inp.P
    if which == "lambda0":
        ev = lambda0_of_u(inp, check=False)
        if not ev.ok:
            return ev.value, math.nan, math.nan, math.nan
        t = ev.t
        dA = p * (0.5 * a * t * t + 0.5 * b * A * t**4) / (P * t**p)
        dC = -p * t**s / (s * P * t**p)
    elif which == "lambda":
        ev = lambda_of_u(inp)
        if not ev.ok:
            return ev.value, math.nan, math.nan, math.nan
        t = ev.t
        dA = (a * t + 2.0 * b * A * t**3) / (P * t ** (p - 1.0))
        dC = -(t ** (s - 1.0)) / (P * t ** (p - 1.0))
    else:
        raise ValueError(f"unknown extremal map {which!r}")
    return ev.value, dA, dC, -ev.value / P


# --------------------------------------------------------------------------
# closed forms for lam = 0


@dataclass(frozen=True)
class ClosedForms:
    t0_u: float
    b0_u: float
    t_u: float
    b_u: float


def closed_form_thresholds(A: float, C: float, a: float, N: int) -> ClosedForms:
    """Solutions in ``(t, b)`` of ``psi = psi' = 0`` and ``psi' = psi'' = 0`` at ``lam = 0``.

    ``b0_u`` is the largest ``b`` for which the ``lam = 0`` fiber dips to
    zero energy; ``b_u`` is the largest ``b`` for which it has critical
    points at all. Both are written without the Sobolev constant, which
    cancels against C1 and C2.
    """
    if not (A > 0 and C > 0 and a > 0):
        raise ValueError("A, C and a must be positive")
    s = critical_exponent(N)
    t0 = (s * a / (4.0 - s) * A / C) ** (1.0 / (s - 2.0))
    t1 = (2.0 * a / (4.0 - s) * A / C) ** (1.0 / (s - 2.0))
    shape = (C ** (1.0 / s) / math.sqrt(A)) ** N
    pre = a ** ((4.0 - N) / 2.0)
    return ClosedForms(t0_u=t0, b0_u=pre * c1_scaled(N) * shape, t_u=t1, b_u=pre * c2_scaled(N) * shape)
