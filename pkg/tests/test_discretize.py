import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from kirchhoff_nehari.discretize import (
    DiscreteFunction,
    RadialMesh,
    bubble,
    discrete_sobolev_constant,
    energy,
    energy_and_gradient,
    functionals,
    make_mesh,
    polynomial_profile,
    random_profile,
    smooth_cutoff,
    sobolev_minimizer,
    sobolev_quotient,
)
from kirchhoff_nehari.exceptions import MeshMismatchError
from kirchhoff_nehari.fiber import FiberMap, ProblemParams, sobolev_constant

OMEGA5 = 8 * math.pi**2 / 15
P = ProblemParams(5, 1.0, 1e-4, 0.5, 3.0)


@pytest.fixture(scope="module")
def mesh():
    return make_mesh(5, 256)


def radial_integral(f, N=5):
    return N * sobolev_constant(N).omega_N * quad(lambda r: f(r) * r ** (N - 1), 0, 1, epsabs=0, epsrel=1e-13)[0]


# --- mesh --------------------------------------------------------------------


@pytest.mark.parametrize("grading", ["uniform", "graded"])
@pytest.mark.parametrize("M", [64, 200, 1024])
def test_weights_sum_to_ball_volume(M, grading):
    m = make_mesh(5, M, grading)
    assert m.weights.sum() == pytest.approx(OMEGA5, rel=1e-12)
    assert np.all(m.weights[1:] > 0) and np.all(np.diff(m.nodes) > 0)
    assert m.nodes[0] == 0.0 and m.nodes[-1] == 1.0


def test_mesh_validation():
    with pytest.raises(ValueError):
        make_mesh(5, 32)
    with pytest.raises(ValueError):
        make_mesh(5, 128, "chebyshev")
    with pytest.raises(ValueError):
        RadialMesh.from_nodes(5, np.r_[0.0, 0.5, 0.4, np.linspace(0.6, 1, 80)])
    with pytest.raises(ValueError):
        make_mesh(4, 128)


def test_mesh_arrays_are_read_only(mesh):
    with pytest.raises(ValueError):
        mesh.nodes[3] = 0.1


def test_graded_mesh_is_finer_at_ends():
    h = np.diff(make_mesh(5, 256, "graded").nodes)
    assert h[0] < 0.5 * h[128] and h[-1] < 0.5 * h[128]


def test_q2_of_parabola(mesh):
    u = DiscreteFunction(mesh, 1 - mesh.nodes**2)
    assert u.lp(2) == pytest.approx(radial_integral(lambda r: (1 - r * r) ** 2), rel=1e-6)


@pytest.mark.parametrize("k", [2, 3, 4, 6])
def test_quadrature_second_order_on_graded_mesh(k):
    exact = radial_integral(lambda r: r**k)
    errs = []
    for M in (128, 256, 512):
        m = make_mesh(5, M, "graded")
        # the last weight is adjusted to the ball volume, so integrate a function vanishing at r=1
        errs.append(abs(m.integrate(m.nodes**k * (1 - m.nodes)) - radial_integral(lambda r: r**k * (1 - r))))
    assert exact > 0
    for e1, e2 in zip(errs, errs[1:]):
        assert 3.5 < e1 / e2 < 4.5


def test_stiffness_second_order():
    exact = radial_integral(lambda r: 4 * r * r)
    errs = [abs(DiscreteFunction(m, 1 - m.nodes**2).grad_sq - exact) for m in (make_mesh(5, M) for M in (128, 256, 512))]
    assert 3.8 < errs[0] / errs[1] < 4.2 and 3.8 < errs[1] / errs[2] < 4.2


def test_stiffness_exact_for_linear_cells(mesh):
    # a function linear on each cell has exact energy sum s_i (du_i)^2
    u = DiscreteFunction(mesh, 1 - mesh.nodes)
    assert u.grad_sq == pytest.approx(radial_integral(lambda r: 1.0), rel=1e-12)


def test_mesh_csv_round_trip(mesh):
    back = RadialMesh.from_csv(mesh.to_csv(), 5)
    assert back == mesh and hash(back) == hash(mesh)
    assert np.array_equal(back.weights, mesh.weights)


def test_ksolve_inverts_kmul(mesh):
    x = np.random.default_rng(1).normal(size=mesh.M)
    assert np.allclose(mesh.ksolve(mesh.kmul(x)), x, rtol=1e-9, atol=1e-9)


# --- grid functions ------------------------------------------------------------


def test_zero_function_gives_zero_functionals(mesh):
    fv = functionals(DiscreteFunction.zeros(mesh), P)
    assert (fv.A, fv.C, fv.P, fv.Q2) == (0.0, 0.0, 0.0, 0.0)
    eg = energy_and_gradient(DiscreteFunction.zeros(mesh), P)
    assert eg.phi == 0.0 and eg.grad_norm == 0.0


def test_boundary_value_is_pinned(mesh):
    u = DiscreteFunction(mesh, np.ones(mesh.M + 1))
    assert u.values[-1] == 0.0
    with pytest.raises(ValueError):
        u.values[0] = 2.0


def test_mismatch_and_nonfinite(mesh):
    with pytest.raises(MeshMismatchError):
        DiscreteFunction(mesh, np.ones(10))
    with pytest.raises(ValueError):
        DiscreteFunction(mesh, np.full(mesh.M + 1, np.nan))
    other = make_mesh(5, 128)
    with pytest.raises(MeshMismatchError):
        polynomial_profile(mesh, 1) + polynomial_profile(other, 1)
    with pytest.raises(MeshMismatchError):
        functionals(polynomial_profile(mesh, 1), ProblemParams(N=6, p=2.5))
    assert issubclass(MeshMismatchError, ValueError)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.01, 50.0), seed=st.integers(0, 10**6))
def test_functionals_homogeneous(mesh, t, seed):
    u = random_profile(mesh, np.random.default_rng(seed))
    f1, ft = functionals(u, P), functionals(t * u, P)
    assert ft.A == pytest.approx(t**2 * f1.A, rel=1e-12)
    assert ft.C == pytest.approx(t ** (10 / 3) * f1.C, rel=1e-12)
    assert ft.P == pytest.approx(t**3 * f1.P, rel=1e-12)
    assert ft.Q2 == pytest.approx(t**2 * f1.Q2, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_discrete_sobolev_inequality(mesh, seed):
    u = random_profile(mesh, np.random.default_rng(seed))
    s_h = discrete_sobolev_constant(mesh)
    fv = functionals(u, P)
    assert fv.C <= s_h ** (-5 / 3) * fv.A ** (5 / 3) * (1 + 1e-10)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_energy_matches_fiber_map(mesh, t):
    u = polynomial_profile(mesh, 2)
    fm = FiberMap(functionals(u, P).fiber_input(P))
    assert energy(t * u, P) == pytest.approx(fm.psi(t), rel=1e-13)


def test_gradient_is_riesz_derivative(mesh):
    u = 3.0 * random_profile(mesh, np.random.default_rng(4))
    v = random_profile(mesh, np.random.default_rng(5))
    eg = energy_and_gradient(u, P)
    h = 1e-5
    fd = (energy(u + h * v, P) - energy(u - h * v, P)) / (2 * h)
    assert eg.grad.inner(v) == pytest.approx(fd, rel=1e-7)


def test_inner_product_and_norms(mesh):
    u = polynomial_profile(mesh, 1)
    assert u.h1_norm() == pytest.approx(1.0, rel=1e-14)
    assert u.inner(u) == pytest.approx(u.grad_sq, rel=1e-14)
    assert (u - u).h1_norm() == 0.0
    with pytest.raises(ValueError):
        DiscreteFunction.zeros(mesh).normalized()


def test_boundary_slope_of_parabola():
    m = make_mesh(5, 1024)
    assert DiscreteFunction(m, 1 - m.nodes**2).boundary_slope() == pytest.approx(-2.0, rel=1e-2)


def test_function_csv_round_trip(mesh):
    u = random_profile(mesh, np.random.default_rng(2))
    back = DiscreteFunction.from_csv(u.to_csv(), 5)
    assert np.array_equal(back.values, u.values) and back.mesh == mesh
    assert np.array_equal(DiscreteFunction.from_csv(u.to_csv(), 5, mesh).values, u.values)
    with pytest.raises(MeshMismatchError):
        DiscreteFunction.from_csv(u.to_csv(), 5, make_mesh(5, 128))


# --- profiles ----------------------------------------------------------------------


def test_smooth_cutoff_shape():
    r = np.linspace(0, 1, 1001)
    c = smooth_cutoff(r, 0.5)
    assert np.all(c[r <= 0.25] == 1.0) and np.all(c[r >= 0.5] == 0.0)
    assert np.all(np.diff(c) <= 0)


def test_bubble_normalized_and_flagged(mesh):
    b = bubble(mesh, 1e-2)
    assert b.h1_norm() == pytest.approx(1.0, rel=1e-13) and not b.flags
    with pytest.warns(RuntimeWarning):
        tiny = bubble(mesh, 1e-6)
    assert "under-resolved" in tiny.flags
    with pytest.raises(ValueError):
        bubble(mesh, 0.0)


def test_bubble_concentration_rates():
    m = make_mesh(5, 4096, "graded")
    eps = [1e-2, 1e-3, 1e-4]
    bs = [bubble(m, e) for e in eps]
    # the Rayleigh quotient decreases to the sharp constant
    q = [sobolev_quotient(b) for b in bs]
    assert q[0] > q[1] > q[2] > sobolev_constant(5).S_N
    # subcritical mass decays like eps^((2p - N(p-2))/4) = eps^(1/4)
    slope = math.log(bs[1].lp(3) / bs[2].lp(3)) / math.log(10)
    assert slope == pytest.approx(0.25, abs=0.03)


# --- Sobolev constant -------------------------------------------------------------------


def test_discrete_sobolev_constant_converges_from_above():
    S = sobolev_constant(5).S_N
    vals = [discrete_sobolev_constant(make_mesh(5, M)) for M in (128, 256, 512)]
    assert S < vals[2] < vals[1] < vals[0]
    assert vals[2] - S < 0.05


def test_sobolev_minimizer_is_scale_invariant(mesh):
    est = sobolev_minimizer(mesh)
    for mu in (0.1, 7.0):
        assert sobolev_quotient(mu * est.minimizer) == pytest.approx(est.S_h, rel=1e-12)
    assert est.converged
    assert sobolev_minimizer(mesh) is est
