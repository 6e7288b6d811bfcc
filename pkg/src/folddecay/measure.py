"""Fourier transform of a surface-carried measure.

mu^(x) = int exp(i (x1 u + x2 v + x3 h(u, v))) a(u, v) sqrt(1 + |grad h|^2) du dv
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from .catalog import default_amplitude
from .errors import DomainError
from .fields import FunctionField, Polynomial2, ZeroField
from .numerics import panel_nodes
from .oscillatory import (DecaySamples, OscillatorySpec, _cheb_coeffs, _cheb_tail_ok, _outer,
                          nested_vdc_integral, oracle_integral)
from .surface import critical_direction, trace_zero_curvature

RAPID_CONSTANT = 100.0
RAPID_EXPONENT = 4


@dataclass(frozen=True)
class SurfaceMeasureSpec:
    patch: object
    density: object

    def __post_init__(self):
        r = getattr(self.density, "support_radius", np.inf)
        if isinstance(self.density, ZeroField):
            return
        if not r < self.patch.domain_radius:
            raise DomainError("density support must lie strictly inside the domain disk")

    @property
    def support_radius(self):
        return float(getattr(self.density, "support_radius", 0.0))

    @property
    def is_zero(self):
        d = self.density
        return isinstance(d, ZeroField) or (isinstance(d, Polynomial2) and not np.any(d.coef))

    @property
    def beta(self):
        """Effective amplitude a * sqrt(1 + |grad h|^2)."""
        h, a = self.patch.h, self.density

        def f(u, v):
            return a(u, v) * np.sqrt(1.0 + h.partial(1, 0, u, v) ** 2 + h.partial(0, 1, u, v) ** 2)

        return FunctionField(f, step=1e-3 * self.patch.domain_radius, support_radius=self.support_radius)


def default_measure(patch):
    return SurfaceMeasureSpec(patch, default_amplitude(patch))


def _weak_inner(spec, x, tol=1e-12):
    """mu^(x) when |x3| < 1: rotate so (x1, x2) lies on the first axis,
    integrate the slowly varying factor exp(i x3 h) a sqrt(..) across each
    slice, then the linear outer phase |(x1, x2)| u'.
    """
    h = spec.patch.h
    beta = spec.beta
    r = spec.support_radius
    x1, x2, x3 = (float(c) for c in x)
    x12 = np.hypot(x1, x2)
    e = np.array([x1, x2]) / x12 if x12 > 0 else np.array([1.0, 0.0])
    n = np.array([-e[1], e[0]])
    deg = 64
    while True:
        t = C.chebpts1(deg + 1)
        up = r * t
        s = np.sqrt(np.maximum(r * r - up * up, 0.0))
        vals = np.zeros(up.size, complex)
        mass = np.zeros(up.size)
        for k, (uk, sk) in enumerate(zip(up, s)):
            xv, wv = panel_nodes(np.linspace(-sk, sk, 9), 16)
            U = uk * e[0] + xv * n[0]
            V = uk * e[1] + xv * n[1]
            b = beta(U, V)
            vals[k] = np.sum(wv * b * np.exp(1j * x3 * h(U, V)))
            mass[k] = np.sum(wv * np.abs(b))
        coef = _cheb_coeffs(vals)
        if _cheb_tail_ok(coef, 1e3 * tol, floor=mass.max()) or deg >= 1024:
            break
        deg *= 2

    def atilde(uu):
        return C.chebval(uu / r, coef)

    def phi(uu):
        return x12 * uu, np.full_like(uu, x12)

    if x12 == 0:
        xu, wu = panel_nodes(np.linspace(-r, r, 17), 16)
        return complex(np.sum(wu * atilde(xu)))
    val, _ = _outer(phi, atilde, 1.0, r, tol, mass_scale=2 * r * mass.max())
    return complex(val)


def surface_measure_ft(spec, x, method="nested"):
    """mu^(x) for a 3-vector x with |x| <= 1e7.

    For |x3| >= 1 the integral is the oscillatory integral with lam = |x3|
    and phase h + (x1 u + x2 v)/|x3| (conjugated for x3 < 0); ``method``
    selects the nested evaluation or the brute-force oracle.
    """
    x = np.asarray(x, float)
    if x.shape != (3,):
        raise DomainError("x must be a 3-vector")
    if np.linalg.norm(x) > 1e7:
        raise DomainError("|x| must be <= 1e7")
    if spec.is_zero:
        return 0j
    beta = spec.beta
    patch = spec.patch
    if np.all(x == 0):
        sp = OscillatorySpec(Polynomial2(np.zeros((1, 1))), beta, np.array([]), (0.0, 0.0),
                             patch.domain_radius, check_window=False)
        return complex(oracle_integral(sp, 1.0))
    x3 = x[2]
    if abs(x3) >= 1.0:
        lam = abs(x3)
        sgn = 1.0 if x3 > 0 else -1.0
        d = (sgn * x[0] / lam, sgn * x[1] / lam)
        sp = OscillatorySpec(patch.h, beta, np.array([]), d, patch.domain_radius, check_window=False)
        if method == "oracle":
            val = oracle_integral(sp, lam)
        elif method == "nested":
            val = nested_vdc_integral(sp, lam)
        else:
            raise DomainError(f"unknown method {method!r}")
        return complex(val) if sgn > 0 else complex(np.conj(val))
    if method == "oracle":
        ph = patch.h.scaled(x3).tilted(x[0], x[1]) if isinstance(patch.h, Polynomial2) else \
            FunctionField(lambda u, v: x3 * patch.h(u, v) + x[0] * u + x[1] * v)
        sp = OscillatorySpec(ph, beta, np.array([]), (0.0, 0.0), patch.domain_radius, check_window=False)
        return complex(oracle_integral(sp, 1.0))
    return _weak_inner(spec, x)


@dataclass
class RegimeReport:
    regime: str
    magnitude: float = float("nan")
    bound: float = float("nan")
    satisfied: bool = True
    constant: float = RAPID_CONSTANT
    exponent: int = RAPID_EXPONENT

    def __eq__(self, other):
        if isinstance(other, str):
            return self.regime == other
        return NotImplemented


def regime(spec, x):
    """'rapid_decay_regime' iff |(x1, x2)| >= 10 eps |x3|, else 'stationary_regime'."""
    x = np.asarray(x, float)
    if np.all(x == 0):
        raise DomainError("x must be nonzero")
    eps = spec.patch.domain_radius
    return "rapid_decay_regime" if np.hypot(x[0], x[1]) >= 10 * eps * abs(x[2]) else "stationary_regime"


def nonstationary_check(spec, x, constant=RAPID_CONSTANT, exponent=RAPID_EXPONENT, evaluate=True):
    """Regime of x and, in the rapid regime, |mu^(x)| against constant*(1+|x|)^-exponent."""
    reg = regime(spec, x)
    if reg == "stationary_regime" or not evaluate:
        return RegimeReport(reg, constant=constant, exponent=exponent)
    mag = abs(surface_measure_ft(spec, x))
    bound = constant * (1.0 + np.linalg.norm(x)) ** (-exponent)
    return RegimeReport(reg, mag, bound, bool(mag <= bound), constant, exponent)


@dataclass
class DirectionalScan:
    direction: np.ndarray
    radii: np.ndarray
    magnitudes: np.ndarray

    def __post_init__(self):
        self.radii = np.asarray(self.radii, float)
        self.magnitudes = np.asarray(self.magnitudes, float)
        if np.any(np.diff(self.radii) <= 0):
            raise DomainError("radii must increase")

    def as_samples(self):
        return DecaySamples(self.radii, self.magnitudes, "nested")


def directional_decay(spec, direction, radii, method="nested"):
    d = np.asarray(direction, float)
    if abs(np.linalg.norm(d) - 1.0) > 1e-12:
        raise DomainError("direction must be a unit vector")
    mags = [abs(surface_measure_ft(spec, R * d, method)) for R in radii]
    return DirectionalScan(d, np.asarray(radii, float), np.array(mags))


def fibonacci_hemisphere(n):
    """n unit vectors with z > 0 spread by the golden-angle spiral."""
    k = np.arange(n)
    z = 1.0 - (k + 0.5) / n
    phi = k * np.pi * (3.0 - np.sqrt(5.0))
    rho = np.sqrt(1.0 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def critical_directions(spec, n_gamma=16):
    """Normals at up to ``n_gamma`` points of Gamma inside the density support."""
    patch = spec.patch
    r = spec.support_radius
    pts = []
    for tr in trace_zero_curvature(patch):
        p = tr.points[np.hypot(tr.points[:, 0], tr.points[:, 1]) < r]
        if len(p):
            pts.append(p)
    if not pts:
        return np.zeros((0, 3))
    pts = np.vstack(pts)
    idx = np.unique(np.linspace(0, len(pts) - 1, min(n_gamma, len(pts))).round().astype(int))
    return np.array([critical_direction(patch, pts[i]) for i in idx])


def direction_set(spec, n_directions=32, n_gamma=16):
    if n_directions < 16:
        raise DomainError("n_directions must be >= 16")
    base = fibonacci_hemisphere(n_directions)
    crit = critical_directions(spec, n_gamma)
    return np.vstack([base, crit]) if len(crit) else base


def worst_direction_sup(spec, radii, n_directions=32, n_gamma=16, method="nested"):
    """max over the direction set of |mu^(R d)| for each radius R."""
    radii = np.asarray(radii, float)
    dirs = direction_set(spec, n_directions, n_gamma)
    mags = np.zeros((radii.size, len(dirs)))
    if not spec.is_zero:
        for i, R in enumerate(radii):
            for j, d in enumerate(dirs):
                mags[i, j] = abs(surface_measure_ft(spec, R * d, method))
    best = mags.argmax(axis=1)
    return DecaySamples(radii, mags.max(axis=1), method,
                        extra={"directions": dirs, "argmax_direction": dirs[best], "all": mags})
