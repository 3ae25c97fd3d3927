import math

import pytest

from kirchhoff_nehari._roots import MAX_DOUBLINGS, expand_until, safeguarded_newton
from kirchhoff_nehari.exceptions import RootFindingError


def test_newton_finds_sqrt2():
    r = safeguarded_newton(lambda x: x * x - 2, lambda x: 2 * x, 0.0, 2.0)
    assert abs(r.x - math.sqrt(2)) < 1e-14
    assert r.iterations < 10


def test_newton_survives_flat_derivative():
    # Newton from the midpoint of atan overshoots wildly; bisection must take over
    r = safeguarded_newton(math.atan, lambda x: 1 / (1 + x * x), -10.0, 30.0)
    assert abs(r.x) < 1e-12


def test_newton_with_zero_derivative():
    r = safeguarded_newton(lambda x: (x - 1) ** 3, lambda x: 0.0, 0.0, 3.0, xtol=1e-10)
    assert abs(r.x - 1) < 1e-9


def test_newton_requires_sign_change():
    with pytest.raises(RootFindingError):
        safeguarded_newton(lambda x: x * x + 1, lambda x: 2 * x, -1.0, 1.0)


def test_newton_endpoint_root():
    assert safeguarded_newton(lambda x: x - 1, lambda x: 1.0, 1.0, 3.0).x == 1.0


def test_expand_until_doubles():
    assert expand_until(lambda x: x > 100, 1.0, 2.0) == 128.0


def test_expand_until_gives_up():
    with pytest.raises(RootFindingError):
        expand_until(lambda x: False, 1.0, 2.0)
    assert MAX_DOUBLINGS == 60
