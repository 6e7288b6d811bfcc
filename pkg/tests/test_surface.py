import json

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy.optimize import brentq

from folddecay.catalog import BUILTIN, EXPECTED_KIND, get_surface
from folddecay.errors import DegenerateError, DomainError, RegularPointError, UnknownSurfaceError
from folddecay.fields import Polynomial2
from folddecay.surface import (SurfacePatch, Tolerances, classify_point, critical_direction,
                               gauss_curvature, gauss_map, normal_form_data, normalization_residuals,
                               normalize_at, psi_curve, trace_zero_curvature, zero_curvature_function)

SQ2 = np.sqrt(2.0)


def patch(terms, radius=0.5):
    return SurfacePatch(Polynomial2.from_dict(terms), radius)


PARA = {(2, 0): 1.0, (0, 2): 1.0}
FOLD = {(0, 2): 1.0, (3, 0): 1.0}
CUSP = {(0, 2): 1.0, (2, 1): 1.0}


# gauss map and curvature

def test_gauss_map_examples():
    assert np.array_equal(gauss_map(patch(PARA), (0, 0)), [0, 0, 1])
    assert np.array_equal(gauss_map(patch(FOLD), (0, 0)), [0, 0, 1])
    n = gauss_map(patch(PARA), (0.5, 0.0))
    assert np.allclose(n, np.array([-1.0, 0.0, 1.0]) / SQ2, atol=1e-15)
    assert abs(np.linalg.norm(n) - 1) < 1e-14


def test_gauss_map_sign_pattern():
    n = gauss_map(patch(PARA), (0.1, 0.2))
    assert np.allclose(n * np.sqrt(1 + 0.04 + 0.16), [-0.2, 0.4, 1.0])


def test_gauss_map_outside_domain():
    with pytest.raises(DomainError):
        gauss_map(patch(PARA), (0.6, 0.0))


@given(st.floats(-0.45, 0.45))
def test_gauss_curvature_fold_closed_form(u):
    K = gauss_curvature(patch(FOLD), (u, 0.0))
    assert K == pytest.approx(12 * u / (1 + 9 * u ** 4) ** 2, abs=1e-14)


def test_gauss_curvature_examples():
    assert gauss_curvature(patch(PARA), (0, 0)) == 4.0
    assert gauss_curvature(patch(FOLD), (0, 0)) == 0.0


# zero-curvature curve

def test_trace_fold_axis():
    tr = trace_zero_curvature(patch(FOLD))
    assert len(tr) == 1
    assert np.max(np.abs(tr[0].points[:, 0])) <= 1e-8
    assert tr[0].closure == "hits_boundary"


def test_trace_paraboloid_empty():
    assert trace_zero_curvature(patch(PARA)) == []


def test_trace_cusp_matches_grid_scan():
    p = patch(CUSP)
    tr = trace_zero_curvature(p)
    assert len(tr) == 1
    pts = tr[0].points
    h = p.h
    # oracle: sign changes of J along v on a 2000 x 2000 grid, linear interpolation
    g = np.linspace(-0.5, 0.5, 2000)
    U, V = np.meshgrid(g, g, indexing="ij")
    J = zero_curvature_function(h, U, V)
    i, j = np.nonzero(np.sign(J[:, :-1]) != np.sign(J[:, 1:]))
    t = J[i, j] / (J[i, j] - J[i, j + 1])
    scan = np.column_stack([g[i], g[j] + t * (g[1] - g[0])])
    inside = np.hypot(pts[:, 0], pts[:, 1]) < 0.45
    d = np.min(np.hypot(pts[inside, None, 0] - scan[None, :, 0], pts[inside, None, 1] - scan[None, :, 1]),
               axis=1)
    # trace points lie between grid columns: compare against v = u^2 read off the scan
    coef = np.polyfit(scan[:, 0], scan[:, 1], 2)
    assert np.max(np.abs(np.polyval(coef, pts[inside, 0]) - pts[inside, 1])) <= 1e-6
    assert np.max(d) <= 1e-3


def test_trace_invariants():
    p = get_surface("perturbed-fold")
    for tr in trace_zero_curvature(p):
        J = zero_curvature_function(p.h, tr.points[:, 0], tr.points[:, 1])
        assert np.max(np.abs(J)) <= 1e-8
        steps = np.hypot(*np.diff(tr.points, axis=0).T)
        assert np.max(steps) <= p.domain_radius / 200 * (1 + 1e-6)
        assert np.allclose(np.hypot(tr.tangent[:, 0], tr.tangent[:, 1]), 1.0)


# normalization

def test_normalize_fold():
    n = normalize_at(patch(FOLD), (0, 0))
    r = normalization_residuals(n)
    assert r["h"] <= 1e-12 and r["grad"] <= 1e-10
    assert r["h_uu"] <= 1e-8 and r["h_uv"] <= 1e-8 and r["h_vv"] <= 1e-8
    assert n.normalized


def test_normalize_sheared_fold_matches_fold():
    p = patch({(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0, (3, 0): 1.0})
    n = normalize_at(p, (0, 0))
    assert max(normalization_residuals(n).values()) <= 1e-8
    assert classify_point(p, (0, 0)).kind == classify_point(patch(FOLD), (0, 0)).kind == "Fold"
    # the explicit map u -> u, v -> v - u turns h into v^2 + u^3
    q = patch({(0, 2): 1.0, (3, 0): 1.0})
    s = np.linspace(-0.2, 0.2, 9)
    for w in (-0.1, 0.0, 0.3):
        assert np.allclose(p.h(s, w - s), q.h(s, w), atol=1e-15)


def test_normalize_regular_point():
    with pytest.raises(RegularPointError):
        normalize_at(patch(PARA), (0, 0))


def test_normalize_rank_zero():
    with pytest.raises(DegenerateError):
        normalize_at(get_surface("monkey-saddle"), (0, 0))


# psi curve and normal form (normalized coordinates v = s / sqrt 2)

def test_psi_examples():
    u = np.linspace(-0.4, 0.4, 9)
    assert np.max(np.abs(psi_curve(normalize_at(patch(FOLD), (0, 0)))(u))) <= 1e-14
    psi = psi_curve(normalize_at(patch(CUSP), (0, 0)))
    assert np.allclose(psi(u), SQ2 * (-u ** 2 / 2), atol=1e-12)
    assert abs(psi(0.0)) <= 1e-8 and abs(psi.derivative(0.0, 1)) <= 1e-8


def test_psi_bisection_oracle():
    n = normalize_at(patch({(0, 2): 1.0, (3, 0): 1.0, (0, 3): 1.0}), (0, 0))
    psi = psi_curve(n)
    eps = n.domain_radius
    for u in (-eps / 2, 0.0, eps / 2):
        ref = brentq(lambda v: n.h.partial(0, 1, u, v), -eps, eps, xtol=1e-15)
        assert abs(psi(u) - ref) <= 1e-10


def test_psi_requires_normalized():
    with pytest.raises(DomainError):
        psi_curve(patch(FOLD))


def test_normal_form_examples():
    u = np.linspace(-0.3, 0.3, 7)
    v = np.linspace(-0.2, 0.2, 7)
    nf = normal_form_data(normalize_at(patch(FOLD), (0, 0)))
    assert np.allclose(nf.a(u, v), 0.5, atol=1e-12)
    assert np.allclose(nf.b(u), u ** 3, atol=1e-14)
    nf = normal_form_data(normalize_at(patch(CUSP), (0, 0)))
    assert np.allclose(nf.a(u, v), 0.5, atol=1e-12)
    assert np.allclose(nf.b(u), -u ** 4 / 4, atol=1e-14)
    n = normalize_at(patch({(0, 2): 1.0, (3, 0): 1.0, (1, 2): 1.0}), (0, 0))
    nf = normal_form_data(n)
    uu = u * n.domain_radius / 0.5
    assert np.allclose(nf.a(uu, v * 0.1), (1 + uu) / 2, atol=1e-12)
    assert np.allclose(nf.b(uu), uu ** 3, atol=1e-14)
    assert abs(nf.a(0.0, 0.0) - 0.5) <= 1e-8


@pytest.mark.parametrize("name", ["fold-cubic", "cusp-standard", "perturbed-fold"])
def test_normal_form_residual_and_psi_consistency(name):
    n = normalize_at(get_surface(name), (0, 0))
    nf = normal_form_data(n)
    e = n.domain_radius / np.sqrt(2)
    g = np.linspace(-e, e, 100)
    U, V = np.meshgrid(g, g)
    res = n.h(U, V) - nf.a(U, V) * (V - nf.psi(U.ravel()).reshape(U.shape)) ** 2 - nf.b(U)
    assert np.max(np.abs(res)) <= 1e-10
    assert np.max(np.abs(n.h.partial(0, 1, g, nf.psi(g)))) <= 1e-10


def test_normal_form_function_field_taylor_branch():
    from folddecay.fields import FunctionField
    base = get_surface("perturbed-fold").h
    p = SurfacePatch(FunctionField(lambda u, v: base(u, v), step=1e-3), 0.5)
    n = normalize_at(p, (0, 0))
    nf = normal_form_data(n)
    u = 0.01
    on = nf.a(u, nf.psi(u))
    near = nf.a(u, nf.psi(u) + 1e-3)
    assert abs(on - near) < 1e-2
    assert abs(nf.a(0.0, 0.0) - 0.5) <= 1e-6


# classification

def test_classify_examples():
    r = classify_point(patch(FOLD), (0, 0))
    assert r.kind == "Fold" and r.witnesses["h_uuu"] == pytest.approx(6.0)
    r = classify_point(patch(CUSP), (0, 0))
    assert r.kind == "Cusp"
    assert r.witnesses["h_uuv"] == pytest.approx(2.0)
    assert r.witnesses["cusp_discriminant"] == pytest.approx(-12.0)
    r = classify_point(get_surface("monkey-saddle"), (0, 0))
    assert r.kind == "Degenerate" and not r.in_class_C and r.diagnostic
    r = classify_point(patch(PARA), (0, 0))
    assert r.kind == "Regular" and r.in_class_C


def test_report_json_roundtrip():
    d = classify_point(patch(CUSP), (0, 0)).to_dict()
    assert json.loads(json.dumps(d)) == d


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_catalog_ground_truth(name):
    assert classify_point(get_surface(name), (0, 0)).kind == EXPECTED_KIND[name]


@pytest.mark.parametrize("name", sorted(BUILTIN))
@given(st.floats(-0.45, 0.45), st.floats(-0.45, 0.45))
def test_curvature_classification_consistency(name, u, v):
    assume(np.hypot(u, v) < 0.5)
    p = get_surface(name)
    r = classify_point(p, (u, v))
    assert (r.kind == "Regular") == (abs(r.witnesses["K"]) > r.witnesses["curvature_tol"])
    assert r.in_class_C == (r.kind != "Degenerate")


def well_conditioned():
    return st.tuples(*[st.floats(-2, 2) for _ in range(4)]).map(
        lambda t: np.array(t).reshape(2, 2)).filter(
        lambda M: abs(np.linalg.det(M)) > 0.1 and np.linalg.cond(M) <= 10)


@pytest.mark.parametrize("name", sorted(BUILTIN))
@given(M=well_conditioned())
def test_affine_invariance(name, M):
    p = get_surface(name)
    h = p.h.pullback((0.0, 0.0), M, subtract_tangent=False)
    q = SurfacePatch(h, p.domain_radius / np.linalg.norm(M, 2))
    assert classify_point(q, (0, 0)).kind == EXPECTED_KIND[name]


def test_tolerances_positive():
    with pytest.raises(ValueError):
        Tolerances(third=0.0)


# critical direction

def test_critical_direction_examples():
    assert np.allclose(critical_direction(patch(FOLD), (0, 0)), [0, 0, 1])
    n = critical_direction(patch(FOLD), (0.0, 0.2))
    assert abs(n[1]) > 0.1
    assert np.allclose(critical_direction(patch(CUSP), (0, 0)), [0, 0, 1])


def test_critical_direction_off_gamma():
    with pytest.raises(DomainError):
        critical_direction(patch(FOLD), (0.2, 0.0))


# catalog files

def test_catalog_file_override(tmp_path, monkeypatch):
    f = tmp_path / "cat.toml"
    f.write_text('[[surfaces]]\nname = "tilted"\ncoefficients = [[0, 2, 1.0], [3, 0, 2.0]]\n'
                 'domain_radius = 0.3\n')
    monkeypatch.setenv("FOLDDECAY_CATALOG", str(f))
    p = get_surface("tilted")
    assert p.domain_radius == 0.3 and classify_point(p, (0, 0)).kind == "Fold"
    g = tmp_path / "cat.json"
    g.write_text(json.dumps({"surfaces": [{"name": "para2", "coefficients": {"2,0": 1, "0,2": 1}}]}))
    assert classify_point(get_surface("para2", g), (0, 0)).kind == "Regular"


def test_catalog_rejects_unknown(tmp_path):
    g = tmp_path / "bad.json"
    g.write_text(json.dumps({"surfaces": [{"name": "x", "coefficients": [], "colour": "red"}]}))
    with pytest.raises(DomainError):
        get_surface("x", g)
    with pytest.raises(UnknownSurfaceError):
        get_surface("no-such-surface")
