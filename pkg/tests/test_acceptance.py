"""Acceptance criteria 1-14.  Each test prints one PASS/FAIL line via ``record``
and the full list is repeated in the terminal summary.
"""
import time
from fractions import Fraction as F

import numpy as np
import pytest

from folddecay import lattice, regions
from folddecay.catalog import BUILTIN, EXPECTED_KIND, default_amplitude, get_surface
from folddecay.dispersive import StrichartzQuery, get_symbol, kernel_scan, scaling_identity_check, \
    strichartz_admissible
from folddecay.errors import ExceptionalLevelError
from folddecay.measure import default_measure, worst_direction_sup
from folddecay.oscillatory import (OscillatorySpec, decay_scan, fit_decay, geometric_grid,
                                   nested_vdc_integral, oracle_integral, worst_drift_scan)
from folddecay.surface import SurfacePatch, classify_point

SLOPE_TOL = 0.05
ENVELOPE_FACTOR = 20


def plain_ratio(mag, scale, exponent):
    env = np.asarray(mag) * np.asarray(scale) ** exponent
    return float(env.max() / env.min())


def worst_drift(name):
    p = get_surface(name)
    t0 = time.perf_counter()
    s = worst_drift_scan(p.h, default_amplitude(p), geometric_grid(1e2, 1e5, 3), p.domain_radius)
    return s, fit_decay(s), time.perf_counter() - t0


def test_criterion_01_regular_rate(record):
    p = get_surface("paraboloid")
    t0 = time.perf_counter()
    s = decay_scan(OscillatorySpec(p.h, default_amplitude(p), geometric_grid(1e2, 1e4), (0.0, 0.0),
                                   p.domain_radius))
    fit = fit_decay(s)
    dt = time.perf_counter() - t0
    ok = abs(fit.slope + 1) <= SLOPE_TOL and dt <= 60
    record(1, ok, f"slope {fit.slope:.4f} (target -1 +/- {SLOPE_TOL}), {dt:.1f} s (<= 60 s)")
    assert ok


@pytest.mark.parametrize("criterion,name,k", [(2, "fold-cubic", 3), (3, "cusp-standard", 4)])
def test_criteria_02_03_degenerate_rates(record, criterion, name, k):
    s, fit, dt = worst_drift(name)
    rate = F(1, 2) + F(1, k)
    ratio = plain_ratio(s.magnitude, s.lam, float(rate))
    ok = abs(fit.slope + float(rate)) <= SLOPE_TOL and ratio <= ENVELOPE_FACTOR and dt <= 300
    record(criterion, ok, f"{name} worst-drift slope {fit.slope:.4f} (target -{rate} +/- {SLOPE_TOL}), "
                          f"envelope ratio {ratio:.3f} (<= {ENVELOPE_FACTOR}), {dt:.1f} s (<= 300 s)")
    assert ok


def test_criterion_04_uniform_three_quarter(record):
    t0 = time.perf_counter()
    w = worst_direction_sup(default_measure(get_surface("cusp-standard")), geometric_grid(1e2, 1e5, 3))
    dt = time.perf_counter() - t0
    ratio = plain_ratio(w.magnitude, w.lam, 0.75)
    ok = ratio <= ENVELOPE_FACTOR and dt <= 900
    record(4, ok, f"cusp-standard envelope ratio {ratio:.3f} (<= {ENVELOPE_FACTOR}) over "
                  f"{w.extra['directions'].shape[0]} directions, {dt:.1f} s (<= 900 s)")
    assert ok


# six catalog surfaces at zero drift plus three drifted specs, each at three lambdas
DRIFTED = [("fold-cubic", (0.2, 0.1)), ("cusp-standard", (0.1, -0.2)), ("perturbed-fold", (-0.15, 0.05))]


def test_criterion_05_oracle_equivalence(record):
    cases = [(n, (0.0, 0.0)) for n in sorted(BUILTIN)] + DRIFTED
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for name, drift in cases:
        p = get_surface(name)
        for lam in (10.0, 1e2, 1e3):
            s = OscillatorySpec(p.h, default_amplitude(p), np.array([lam]), drift, p.domain_radius)
            a, b = nested_vdc_integral(s, lam), oracle_integral(s, lam)
            e = abs(a - b) / abs(b)
            if e > worst:
                worst, where = e, (name, drift, lam)
    dt = time.perf_counter() - t0
    n = 3 * len(cases)
    ok = n == 27 and worst <= 1e-5 and dt <= 120
    record(5, ok, f"{n} cases, max relative difference {worst:.2e} at {where} (<= 1e-5), {dt:.1f} s (<= 120 s)")
    assert ok


def test_criterion_06_classifier_ground_truth(record, rng):
    wrong = []
    for name in sorted(BUILTIN):
        p = get_surface(name)
        if classify_point(p, (0, 0)).kind != EXPECTED_KIND[name]:
            wrong.append((name, "catalog"))
        done = 0
        while done < 20:
            M = rng.uniform(-2, 2, (2, 2))
            if abs(np.linalg.det(M)) <= 0.1 or np.linalg.cond(M) > 10:
                continue
            q = SurfacePatch(p.h.pullback((0.0, 0.0), M, subtract_tangent=False),
                             p.domain_radius / np.linalg.norm(M, 2))
            if classify_point(q, (0, 0)).kind != EXPECTED_KIND[name]:
                wrong.append((name, M.round(3).tolist()))
            done += 1
    ok = not wrong
    record(6, ok, f"{len(BUILTIN)} surfaces x (1 + 20 substitutions), misclassified: {wrong or 'none'}")
    assert ok


def test_criterion_07_scaling_identity(record):
    worst = 0.0
    for name, t0, x0, base in [("paraboloid", 1.0, (1.0, 0.0), 2), ("cubic-sum", 0.1, (0.3, -0.2), 4)]:
        s = get_symbol(name)
        for N in (2, 4, 8):
            # keep N^mu t fixed so every N probes the same rescaled kernel
            t = t0 * (base / N) ** s.mu
            worst = max(worst, scaling_identity_check(s, N, t, x0))
    ok = worst <= 1e-8
    record(7, ok, f"max relative defect {worst:.2e} over N in (2, 4, 8), both homogeneous symbols (<= 1e-8)")
    assert ok


def test_criterion_08_dispersive_bound(record):
    ts = np.geomspace(1e2, 1e4, 5)
    cubic = kernel_scan(get_symbol("cubic-sum"), ts)
    para = kernel_scan(get_symbol("paraboloid"), ts)
    rc, rp = cubic.envelope_ratio(0.75), para.envelope_ratio(1.0)
    ok = rc <= ENVELOPE_FACTOR and rp <= ENVELOPE_FACTOR
    record(8, ok, f"cubic-sum (1+t)^(3/4) envelope ratio {rc:.3f}, slope {cubic.slope():.3f}; "
                  f"paraboloid (1+t)^1 ratio {rp:.3f}, slope {para.slope():.3f} (<= {ENVELOPE_FACTOR})")
    assert ok


def test_criterion_09_lattice_class(record):
    t0 = time.perf_counter()
    member = {a: lattice.classify_level_set(a, 192).in_class_C for a in (1.0, 2.5, 5.0, 3.0)}
    refused = []
    for c in (0.0, 2.0, 4.0, 6.0):
        for d in (-1e-6, 1e-6):
            try:
                lattice.level_set_mesh(c + d, 192)
            except ExceptionalLevelError:
                refused.append(c + d)
    dt = time.perf_counter() - t0
    ok = (member == {1.0: True, 2.5: True, 5.0: True, 3.0: False} and len(refused) == 8 and dt <= 600)
    record(9, ok, f"in_class_C {member}, refused {len(refused)}/8 near-critical levels, {dt:.1f} s (<= 600 s)")
    assert ok


def test_criterion_10_plemelj(record):
    # path 1: resolvent by DCT with delta extrapolation; path 2: surface quadrature of E'
    err, ext, E = lattice.plemelj_check(2.5, L=8, N=1024)
    # orientation (z - H)^-1 as stated: Im R(lam + i0) = -pi E'
    imR = (-ext.field.values).imag
    err_stated = float(np.max(np.abs(imR + np.pi * E)) / np.max(np.abs(np.pi * E)))
    ok = err_stated <= 1e-3
    record(10, ok, f"max |Im R + pi E'| / max |pi E'| = {err_stated:.2e} on |x|_inf <= 8 (<= 1e-3)")
    assert ok


def test_criterion_11_density_of_states(record):
    v = lattice.density_of_states_integral()
    ok = abs(v - 1) <= 1e-3
    record(11, ok, f"integral of E'(a)(0) over [0, 6] = {v:.7f} (1 +/- 1e-3)")
    assert ok


def test_criterion_12_lattice_kernel_decay(record):
    env = lattice.kernel_decay_envelope(2.5)
    umb = lattice.kernel_decay_envelope(3.0)
    part1 = env.ratio <= ENVELOPE_FACTOR
    part2 = umb.ratio >= 2 * env.ratio
    ok = part1 and part2
    record(12, ok, f"a=2.5 envelope ratio {env.ratio:.3f} (<= {ENVELOPE_FACTOR}: {'ok' if part1 else 'no'}); "
                   f"a=3 ratio {umb.ratio:.3f} vs required >= {2 * env.ratio:.3f} ({'ok' if part2 else 'no'}); "
                   f"slopes {env.slope():.3f} / {umb.slope():.3f}")
    assert part1, "a=2.5 envelope exceeds the factor"
    assert part2, "a=3 envelope is not 2x worse up to |x| = 64"


def test_criterion_13_regions(record):
    labels = [regions.pentagon_membership(P).label
              for P in (regions.B, regions.C, regions.B_PRIME, regions.C_PRIME)]
    identity = F(61, 70) - F(3, 10) == F(4, 7)
    dual = regions.duality_maps_segments()
    # interior points of (B, C] land in (B', C'] under the duality map
    inner = all(regions.on_half_open_segment(
        regions.dual_point((F(7, 10), F(9, 70) * (1 - t))), regions.B_PRIME, regions.C_PRIME)
        for t in (F(1, 7), F(1, 2), F(1)))
    ok = labels == ["RestrictedWeak", "WeakII", "RestrictedWeak", "WeakI"] and identity and dual and inner
    record(13, ok, f"labels B, C, B', C' = {labels}; 61/70 - 3/10 = 4/7: {identity}; duality: {dual and inner}")
    assert ok


def test_criterion_14_strichartz(record):
    ok12, s12 = strichartz_admissible(StrichartzQuery("inf", 2, "homogeneous_thm12", 3))
    ok13, s13 = strichartz_admissible(StrichartzQuery(F(8, 3), "inf", "perturbed_thm13", 3))
    line12 = 0 + F(5, 6) * F(1, 2) == F(5, 12)
    line13 = F(3, 8) + F(3, 4) * 0 == F(3, 8)
    spots = [(F(4), F(6), 2), (F(8, 3), "inf", 3), ("inf", F(2), 3), (F(12), F(5, 2), 1)]
    sym = all(strichartz_admissible(StrichartzQuery(p, q, "homogeneous_thm12", mu))[1]
              == 1 - 2 * (0 if q == "inf" else 1 / F(q)) - mu * (0 if p == "inf" else 1 / F(p))
              for p, q, mu in spots)
    ok = ok12 and ok13 and line12 and line13 and s12 == 0 and s13 == F(-1, 8) and sym
    record(14, ok, f"(inf, 2) admissible {ok12} with s = {s12}; (8/3, inf) admissible {ok13} with s = {s13}; "
                   f"s formula spot checks exact: {sym}")
    assert ok
