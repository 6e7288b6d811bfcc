import numpy as np
import pytest
from hypothesis import given, strategies as st

from folddecay.catalog import BUILTIN, get_surface
from folddecay.fields import FunctionField, Polynomial2, RadialBump, ZeroField, flat_top

coord = st.floats(-0.5, 0.5, allow_nan=False)


@pytest.mark.parametrize("name", sorted(BUILTIN))
@given(u=coord, v=coord)
def test_partial_00_is_eval(name, u, v):
    h = get_surface(name).h
    assert h.partial(0, 0, u, v) == h(u, v)


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_mixed_partials_commute_exactly(name):
    h = get_surface(name).h
    u, v = np.meshgrid(np.linspace(-0.4, 0.4, 7), np.linspace(-0.4, 0.4, 7))
    for i, j in [(1, 2), (2, 1), (1, 3), (2, 2)]:
        a = Polynomial2(h._dcoef(i, 0))._dcoef(0, j)
        b = Polynomial2(h._dcoef(0, j))._dcoef(i, 0)
        assert np.array_equal(a, b)
        assert np.array_equal(h.partial(i, j, u, v), Polynomial2(b)(u, v))


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_finite_difference_mixed_partial(name):
    h = get_surface(name).h
    step = 5e-4
    f = FunctionField(lambda u, v: h(u, v), step=step)
    g = FunctionField(lambda u, v: h(v, u), step=step)
    u, v = np.meshgrid(np.linspace(-0.3, 0.3, 5), np.linspace(-0.3, 0.3, 5))
    swapped = g.partial(1, 1, v, u)
    assert np.max(np.abs(f.partial(1, 1, u, v) - swapped)) <= 10 * step
    assert np.max(np.abs(f.partial(1, 1, u, v) - h.partial(1, 1, u, v))) <= 10 * step


def test_finite_difference_high_orders():
    h = get_surface("perturbed-fold").h
    f = FunctionField(lambda u, v: h(u, v), step=5e-4)
    for i, j in [(3, 0), (2, 1), (4, 0), (0, 3)]:
        assert abs(f.partial(i, j, 0.1, -0.05) - h.partial(i, j, 0.1, -0.05)) < 1e-5


def test_polynomial_broadcasts():
    h = Polynomial2.from_dict({(2, 0): 1.0, (0, 1): 2.0})
    out = h(np.zeros((3, 1)), np.arange(4.0)[None, :])
    assert out.shape == (3, 4)
    assert np.allclose(out[0], 2 * np.arange(4.0))


@given(st.floats(-3, 3, allow_nan=False), st.floats(0.0, 0.9))
def test_flat_top_range(x, plateau):
    y = float(flat_top(abs(x), plateau))
    assert 0.0 <= y <= 1.0
    if abs(x) <= plateau:
        assert y == 1.0
    if abs(x) >= 1.0:
        assert y == 0.0


def test_flat_top_monotone():
    x = np.linspace(0, 1.2, 2001)
    assert np.all(np.diff(flat_top(x, 0.3)) <= 0)


def test_radial_bump_and_zero_field():
    b = RadialBump(0.45)
    assert b(0.0, 0.0) == 1.0
    assert b(0.45, 0.0) == 0.0
    assert b.support_radius == 0.45
    z = ZeroField()
    assert z(0.3, 0.1) == 0.0
    assert not np.any(z.coef)
