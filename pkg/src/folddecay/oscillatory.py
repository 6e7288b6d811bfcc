"""Two-dimensional oscillatory integrals I(lam) = int exp(i lam Phi) beta du dv.

``oracle_integral`` is a brute-force tensor Gauss-Legendre rule whose
cells carry at most pi/4 radians of phase, refined until two levels
agree.  ``nested_vdc_integral`` follows the inner/outer structure of the
decay proof: for each u it locates the stationary point psi(u) of
v -> Phi(u, v), maps the inner phase exactly onto lam*w^2 by
w = t*sqrt(A(t)), t = v - psi(u), and integrates against a band-limited
Fresnel kernel; the resulting amplitude a~(u) is smooth in u and is
interpolated by a Chebyshev series before the outer one-dimensional
integral of exp(i lam Phi(u, psi(u))) a~(u).
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.special import fresnel

from .errors import DomainError, FitError, QuadratureBudgetError
from .fields import Polynomial2, ScalarField2, ZeroField
from .numerics import panel_nodes, phase_panels, safeguarded_newton

PHASE_BUDGET = np.pi / 4
NODE_BUDGET = 2 ** 26
# Chebyshev tail of the inner amplitude relative to |I| in the nested path
RELATIVE_TAIL = 1e-8
# rounding floor for that tail, relative to the slice mass
TAIL_FLOOR = 1e-14


def geometric_grid(lo, hi, per_decade=24):
    """Geometric grid from lo to hi (inclusive) with the given density."""
    n = max(int(round(per_decade * np.log10(hi / lo))), 1) + 1
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class OscillatorySpec:
    """Phase h, amplitude beta and linear tilt ``drift``: Phi = drift.(u,v) + h."""

    phase: ScalarField2
    amplitude: ScalarField2
    lambda_grid: np.ndarray = field(default_factory=lambda: geometric_grid(1e2, 1e4))
    drift: tuple = (0.0, 0.0)
    domain_radius: float = 0.5
    check_window: bool = True

    def __post_init__(self):
        lg = np.asarray(self.lambda_grid, float)
        if lg.size and lg.min() < 1.0:
            raise DomainError("lambda_grid must satisfy lambda >= 1")
        if lg.size > 1 and np.any(np.diff(lg) <= 0):
            raise DomainError("lambda_grid must be strictly increasing")
        if self.check_window and max(abs(self.drift[0]), abs(self.drift[1])) > 10 * self.domain_radius * (1 + 1e-12):
            raise DomainError("drift outside the window |x_i/lambda| <= 10 eps")
        if self.support_radius > self.domain_radius * (1 + 1e-12):
            raise DomainError("amplitude support exceeds the domain disk")

    @property
    def support_radius(self):
        r = getattr(self.amplitude, "support_radius", np.inf)
        return min(float(r), float(self.domain_radius))

    @property
    def full_phase(self):
        d1, d2 = self.drift
        if isinstance(self.phase, Polynomial2):
            return self.phase.tilted(d1, d2)
        base = self.phase
        from .fields import FunctionField
        return FunctionField(lambda u, v: base(u, v) + d1 * u + d2 * v,
                             step=getattr(base, "step", 1e-4))

    @property
    def is_zero(self):
        a = self.amplitude
        return isinstance(a, ZeroField) or (isinstance(a, Polynomial2) and not np.any(a.coef)) \
            or self.support_radius <= 0


def _phase_grid(Phi, u, v):
    if isinstance(Phi, Polynomial2):
        return Phi.grid(u, v)
    return Phi(u[:, None], v[None, :])


def _phase_partial_grid(Phi, i, j, u, v):
    if isinstance(Phi, Polynomial2):
        return Polynomial2(Phi._dcoef(i, j)).grid(u, v)
    return Phi.partial(i, j, u[:, None], v[None, :])


def _tensor_sum(Phi, beta, lam, xu, wu, xv, wv, r, chunk=None):
    total = 0.0 + 0.0j
    nv = xv.size
    chunk = chunk or max(1, int(4e6 // max(nv, 1)))
    for s in range(0, xu.size, chunk):
        uu = xu[s:s + chunk]
        inside = (uu[:, None] ** 2 + xv[None, :] ** 2) < r * r
        if not inside.any():
            continue
        ph = _phase_grid(Phi, uu, xv)
        b = beta(uu[:, None], xv[None, :]) * inside
        ang = lam * ph
        re = (b * np.cos(ang)) @ wv
        im = (b * np.sin(ang)) @ wv
        total += wu[s:s + chunk] @ re + 1j * (wu[s:s + chunk] @ im)
    return total


def _rates(Phi, lam, r, n=257):
    g = np.linspace(-r, r, n)
    Pu = np.abs(_phase_partial_grid(Phi, 1, 0, g, g))
    Pv = np.abs(_phase_partial_grid(Phi, 0, 1, g, g))
    mask = (g[:, None] ** 2 + g[None, :] ** 2) <= (r * (1 + 2.0 / n)) ** 2
    Pu = np.where(mask, Pu, 0.0)
    Pv = np.where(mask, Pv, 0.0)
    ru = lam * Pu.max(axis=1)
    rv = lam * Pv.max(axis=0)
    # widen by one probe cell to stay conservative between probes
    ru = np.maximum.reduce([ru, np.roll(ru, 1), np.roll(ru, -1)])
    rv = np.maximum.reduce([rv, np.roll(rv, 1), np.roll(rv, -1)])
    return (lambda x: np.interp(x, g, ru)), (lambda x: np.interp(x, g, rv))


def oracle_integral(spec, lam, rtol=1e-8, budget=NODE_BUDGET, n_gl=6, max_width_frac=1 / 8,
                    return_info=False):
    """Brute-force adaptive tensor Gauss-Legendre evaluation of I(lam).

    Cells carry at most pi/4 radians of phase; every level halves all cells
    until two successive levels agree to ``rtol``.

    Raises
    ------
    QuadratureBudgetError
        When the next level would exceed ``budget`` nodes in total.
    """
    if not (1e-12 <= lam <= 1e7):
        raise DomainError("lambda must lie in [1, 1e7]")
    if spec.is_zero:
        return (0j, {"nodes": 0, "levels": 0}) if return_info else 0j
    r = spec.support_radius
    Phi = spec.full_phase
    beta = spec.amplitude
    rate_u, rate_v = _rates(Phi, lam, r)
    eu = phase_panels(-r, r, rate_u, PHASE_BUDGET, max_width_frac * r)
    ev = phase_panels(-r, r, rate_v, PHASE_BUDGET, max_width_frac * r)
    used = 0
    prev = None
    diff = np.inf
    level = 0
    # absolute floor relative to the non-oscillatory mass
    floor = None
    while True:
        n_nodes = (eu.size - 1) * (ev.size - 1) * n_gl * n_gl
        if used + n_nodes > budget:
            raise QuadratureBudgetError(
                f"oracle budget {budget} exceeded at lambda={lam:g} (level {level})",
                achieved=diff, value=prev)
        xu, wu = panel_nodes(eu, n_gl)
        xv, wv = panel_nodes(ev, n_gl)
        val = _tensor_sum(Phi, beta, lam, xu, wu, xv, wv, r)
        used += n_nodes
        if floor is None:
            mass = _tensor_sum(Polynomial2(np.zeros((1, 1))), lambda a, b: np.abs(beta(a, b)),
                               0.0, xu, wu, xv, wv, r).real
            floor = 1e-14 * max(mass, 1e-300)
        if prev is not None:
            diff = abs(val - prev) / max(abs(val), 1e-300)
            if abs(val - prev) <= max(rtol * abs(val), floor):
                info = {"nodes": used, "levels": level + 1, "achieved": diff}
                return (val, info) if return_info else val
        prev = val
        level += 1
        eu = _split(eu)
        ev = _split(ev)


def _split(edges):
    mid = 0.5 * (edges[:-1] + edges[1:])
    out = np.empty(2 * edges.size - 1)
    out[0::2] = edges
    out[1::2] = mid
    return out


# ---------------------------------------------------------------------------
# nested evaluation


def fresnel_lowpass_kernel(w, lam, h):
    """K(w) with  h * sum_j G(w_j) K(w_j) = int exp(i lam y^2) G_h(y) dy,
    G_h the sinc interpolant of the samples G(w_j) on spacing h.
    """
    xi = np.pi / h
    scale = np.sqrt(2 * np.pi * lam)
    ta = (2 * lam * w - xi) / scale
    tb = (2 * lam * w + xi) / scale
    Sa, Ca = fresnel(ta)
    Sb, Cb = fresnel(tb)
    diff = (Cb - Ca) - 1j * (Sb - Sa)
    return np.exp(1j * lam * w * w) * np.exp(1j * np.pi / 4) / np.sqrt(2.0) * diff


def _taylor_at(coeffs, psi):
    """Coefficients c_m of t -> sum_j coeffs[:, j] (psi + t)^j."""
    n, d1 = coeffs.shape
    out = np.zeros((n, d1))
    for m in range(d1):
        for j in range(m, d1):
            out[:, m] += coeffs[:, j] * comb(j, m) * psi ** (j - m)
    return out


def _polyval_rows(c, t):
    """Evaluate sum_m c[:, m] t^m row-wise; t has shape (n, k) or (n,)."""
    t = np.asarray(t)
    out = np.zeros(np.broadcast_shapes(t.shape, c.shape[:1] + (1,) * (t.ndim - 1)))
    cc = c.reshape(c.shape + (1,) * (t.ndim - 1))
    for m in range(c.shape[1] - 1, -1, -1):
        out = out * t + cc[:, m]
    return out


class _Inner:
    """Inner stationary points and Taylor data for a set of outer nodes."""

    def __init__(self, Phi, u, r, vv_min):
        self.u = u
        self.s = np.sqrt(np.maximum(r * r - u * u, 0.0))
        P = Phi.v_polynomials(u)
        self.P = P
        dv = P.shape[1] - 1
        self.ok = np.ones(u.size, bool)
        if dv < 2:
            self.ok[:] = False
            self.psi = np.zeros(u.size)
            return
        dP = P[:, 1:] * np.arange(1, dv + 1)
        d2P = dP[:, 1:] * np.arange(1, dv)
        F = lambda x: _polyval_rows(dP, x)
        dF = lambda x: _polyval_rows(d2P, x)
        B = np.abs(F(np.zeros(u.size))) / vv_min + 1e-12
        lo, hi = -B, B
        has = (F(lo) <= 0) & (F(hi) >= 0)
        psi, conv = safeguarded_newton(F, dF, lo, hi, x0=np.zeros(u.size), maxit=60, ftol=1e-14)
        self.ok &= has & conv
        # Phi_vv >= vv_min on the hull of the slice and psi
        a = np.minimum(-self.s, psi)
        b = np.maximum(self.s, psi)
        tt = np.linspace(0, 1, 33)
        vv = a[:, None] + (b - a)[:, None] * tt[None, :]
        self.ok &= np.all(_polyval_rows(d2P, vv) >= vv_min, axis=1)
        self.psi = np.where(self.ok, psi, 0.0)
        self.c = _taylor_at(P, self.psi)  # c[:, m] = d^m_v Phi / m! at psi
        self.A = self.c[:, 2:]  # A(t) = sum_{m>=2} c_m t^(m-2)

    def w_of_t(self, t):
        A = _polyval_rows(self.A, t)
        return t * np.sqrt(np.maximum(A, 0.0)), A

    def dw_dt(self, t):
        A = _polyval_rows(self.A, t)
        dA = _polyval_rows(self.A[:, 1:] * np.arange(1, self.A.shape[1]), t) if self.A.shape[1] > 1 \
            else np.zeros_like(t)
        sq = np.sqrt(A)
        return (A + 0.5 * t * dA) / sq


def _inner_amplitudes(inner, beta, lam, n_w):
    """a~(u_k) = int exp(i lam w^2) beta(u_k, psi_k + t(w)) dt/dw dw."""
    u, psi, s = inner.u, inner.psi, inner.s
    t_lo = -s - psi
    t_hi = s - psi
    w_lo, _ = inner.w_of_t(t_lo)
    w_hi, _ = inner.w_of_t(t_hi)
    live = s > 0
    if not live.any():
        return np.zeros(u.size, complex), np.zeros(u.size)
    W0, W1 = w_lo[live].min(), w_hi[live].max()
    w = np.linspace(W0, W1, n_w)
    hw = w[1] - w[0]
    K = fresnel_lowpass_kernel(w, lam, hw)
    out = np.zeros(u.size, complex)
    mass = np.zeros(u.size)
    # process rows in blocks to bound memory
    blk = max(1, int(2e6 // n_w))
    for s0 in range(0, u.size, blk):
        sl = slice(s0, s0 + blk)
        WL = w_lo[sl, None]
        WH = w_hi[sl, None]
        inside = (w[None, :] > WL) & (w[None, :] < WH)
        sqc2 = np.sqrt(inner.c[sl, 2])[:, None]
        t0 = np.clip(w[None, :] / sqc2, t_lo[sl, None], t_hi[sl, None])
        lo = np.broadcast_to(t_lo[sl, None], t0.shape)
        hi = np.broadcast_to(t_hi[sl, None], t0.shape)
        sub = _RowView(inner, sl)
        F = lambda t: sub.w_of_t(t) - w[None, :]
        dF = lambda t: sub.dw_dt(t)
        t, conv = safeguarded_newton(F, dF, lo, hi, x0=t0, maxit=60, ftol=1e-14)
        jac = 1.0 / sub.dw_dt(t)
        vv = psi[sl, None] + t
        G = np.where(inside, beta(np.broadcast_to(u[sl, None], t.shape), vv) * jac, 0.0)
        out[sl] = hw * (G @ K)
        mass[sl] = hw * np.abs(G).sum(axis=1)
    return out, mass


class _RowView:
    def __init__(self, inner, sl):
        self.A = inner.A[sl]

    def w_of_t(self, t):
        A = _polyval_rows(self.A, t)
        return t * np.sqrt(np.maximum(A, 0.0))

    def dw_dt(self, t):
        A = _polyval_rows(self.A, t)
        if self.A.shape[1] > 1:
            dA = _polyval_rows(self.A[:, 1:] * np.arange(1, self.A.shape[1]), t)
        else:
            dA = np.zeros_like(t)
        return (A + 0.5 * t * dA) / np.sqrt(A)


def _outer_psi(Phi, u, psi_cheb, r, vv_min):
    """psi(u) at arbitrary outer nodes by Newton from the Chebyshev guess."""
    P = Phi.v_polynomials(u)
    dv = P.shape[1] - 1
    dP = P[:, 1:] * np.arange(1, dv + 1)
    d2P = dP[:, 1:] * np.arange(1, dv)
    F = lambda x: _polyval_rows(dP, x)
    dF = lambda x: _polyval_rows(d2P, x)
    B = np.abs(F(np.zeros(u.size))) / vv_min + 1e-12
    guess = C.chebval(u / r, psi_cheb)
    psi, conv = safeguarded_newton(F, dF, -B, B, x0=guess, maxit=60, ftol=1e-14)
    return psi


def _cheb_tail_ok(c, tol, floor=0.0):
    c = np.abs(c)
    m = max(c.max(), floor, 1e-300)
    k = max(4, c.size // 10)
    return c[-k:].max() <= tol * m


def nested_vdc_integral(spec, lam, vv_min=1.0, n_cheb=64, n_w=512, tol=1e-12,
                        max_cheb=2048, return_info=False):
    """Nested evaluation of I(lam); see module docstring.

    Slices without a unique inner stationary point (or with
    Phi_vv < ``vv_min`` on the slice hull) are evaluated by direct
    phase-adapted quadrature; ``info['fallback']`` counts them.
    """
    info = {"fallback": 0, "method": "nested"}
    if spec.is_zero:
        return (0j, info) if return_info else 0j
    Phi = spec.full_phase
    beta = spec.amplitude
    r = spec.support_radius
    if not isinstance(Phi, Polynomial2):
        info.update(fallback=-1, method="direct-slices")
        val = _direct_slices(Phi, beta, lam, r)
        return (val, info) if return_info else val
    # orient so that Phi_vv > 0 (conjugation symmetry, real amplitude)
    if float(Phi.partial(0, 2, 0.0, 0.0)) < 0:
        neg = OscillatorySpec(spec.phase.scaled(-1.0), beta, np.array([]),
                              (-spec.drift[0], -spec.drift[1]), spec.domain_radius, check_window=False)
        res = nested_vdc_integral(neg, lam, vv_min, n_cheb, n_w, tol, max_cheb, return_info=True)
        val, inf2 = res
        return (np.conj(val), inf2) if return_info else np.conj(val)

    # Chebyshev interpolation of a~ and psi over u in [-r, r]
    deg = n_cheb
    nw = n_w
    while True:
        x = C.chebpts1(deg + 1)
        u = r * x
        inner = _Inner(Phi, u, r, vv_min)
        if not inner.ok.all():
            info["fallback"] = int((~inner.ok).sum())
            info["method"] = "nested+direct-slices"
            val = _direct_slices(Phi, beta, lam, r)
            return (val, info) if return_info else val
        vals, _ = _inner_amplitudes(inner, beta, lam, nw)
        # resolution check in w by doubling; tolerances scale with the
        # non-oscillatory slice mass so that tiny amplitudes stay cheap
        vals2, mass = _inner_amplitudes(inner, beta, lam, 2 * nw)
        scale = max(np.abs(vals2).max(), mass.max(), 1e-300)
        if np.abs(vals2 - vals).max() > 1e3 * tol * scale and nw < 2 ** 16:
            nw *= 2
            continue
        vals = vals2
        coef = _cheb_coeffs(vals)
        psi_coef = _cheb_coeffs(inner.psi)
        if not (_cheb_tail_ok(coef, 1e3 * tol, floor=mass.max()) or deg >= max_cheb):
            deg *= 2
            continue
        info.update(cheb_degree=deg, n_w=2 * nw)

        def atilde(uu):
            return C.chebval(uu / r, coef)

        def phi_and_deriv(uu):
            ps = _outer_psi(Phi, uu, psi_coef, r, vv_min)
            return Phi(uu, ps), Phi.partial(1, 0, uu, ps)

        val, mode = _outer(phi_and_deriv, atilde, lam, r, tol, mass_scale=2 * r * mass.max())
        # without a stationary point |I| can be far below the slice mass; the
        # interpolation tail must then be small relative to the result itself
        k = max(4, coef.size // 10)
        tail = 2 * r * np.abs(coef[-k:]).sum()
        if tail <= max(RELATIVE_TAIL * abs(val), TAIL_FLOOR * 2 * r * mass.max()) or deg >= max_cheb:
            break
        deg *= 2
    info["outer"] = mode
    return (val, info) if return_info else val


def _cheb_coeffs(vals):
    """Chebyshev coefficients from values at first-kind points (DCT-II)."""
    from scipy.fft import dct
    n = vals.size
    # chebpts1 are ordered increasing: x_k = -cos(pi (k + 1/2)/n); reverse to DCT ordering
    y = vals[::-1]
    c = dct(y.real, type=2) / n + (1j * dct(y.imag, type=2) / n if np.iscomplexobj(y) else 0)
    c[0] /= 2
    return c


def _outer(phi_and_deriv, atilde, lam, r, tol, n_gl=8, mass_scale=0.0):
    probe = np.linspace(-r, r, 4001)
    ph, dph = phi_and_deriv(probe)
    span = lam * (ph.max() - ph.min())
    adph = np.abs(dph)
    monotone = (np.all(dph > 0) or np.all(dph < 0))
    if span > 400 and monotone and adph.min() >= 0.05 * adph.max():
        return _outer_substitution(phi_and_deriv, atilde, lam, r, probe, ph, dph, tol,
                                   mass_scale), "substitution"
    rate = lambda x: lam * np.interp(x, probe, np.maximum.reduce([adph, np.roll(adph, 1), np.roll(adph, -1)]))
    edges = phase_panels(-r, r, rate, PHASE_BUDGET, r / 16)
    xu, wu = panel_nodes(edges, n_gl)
    total = 0j
    blk = 1 << 18
    for s in range(0, xu.size, blk):
        uu = xu[s:s + blk]
        p, _ = phi_and_deriv(uu)
        total += np.sum(wu[s:s + blk] * np.exp(1j * lam * p) * atilde(uu))
    return total, "panels"


def _outer_substitution(phi_and_deriv, atilde, lam, r, probe, ph, dph, tol, mass_scale=0.0):
    inc = dph[0] > 0
    s0, s1 = (ph[0], ph[-1]) if inc else (ph[-1], ph[0])
    n_s = 4096
    prev = None
    while True:
        s = np.linspace(s0, s1, n_s)
        hs = s[1] - s[0]
        order = np.argsort(ph)
        guess = np.interp(s, ph[order], probe[order])
        F = lambda uu: (phi_and_deriv(uu)[0] - s) * (1 if inc else -1)
        dF = lambda uu: np.abs(phi_and_deriv(uu)[1])
        uu, _ = safeguarded_newton(F, dF, np.full(n_s, -r), np.full(n_s, r), x0=guess, maxit=60,
                                   ftol=1e-14 * max(1.0, abs(s0), abs(s1)))
        _, d = phi_and_deriv(uu)
        G = atilde(uu) / np.abs(d)
        G[0] = G[-1] = 0.0
        spec = np.abs(np.fft.fftshift(np.fft.fft(G)))
        k = max(4, spec.size // 32)
        edge = max(spec[:k].max(), spec[-k:].max())
        tail = edge <= 1e-13 * max(spec.max(), mass_scale / hs, 1e-300)
        if tail or n_s >= 1 << 20:
            break
        n_s *= 2
    if lam >= np.pi / hs:
        return 0j
    return hs * np.sum(G * np.exp(1j * lam * s))


def _direct_slices(Phi, beta, lam, r, n_gl=8):
    """Outer Gauss-Legendre panels in u; per-slice phase-adapted panels in v."""
    g = np.linspace(-r, r, 257)
    Pu = np.abs(_phase_partial_grid(Phi, 1, 0, g, g)).max(axis=1)
    Pu = np.maximum.reduce([Pu, np.roll(Pu, 1), np.roll(Pu, -1)])
    edges = phase_panels(-r, r, lambda x: lam * np.interp(x, g, Pu), PHASE_BUDGET, r / 16)
    xu, wu = panel_nodes(edges, n_gl)
    total = 0j
    for ui, wi in zip(xu, wu):
        s = np.sqrt(max(r * r - ui * ui, 0.0))
        if s <= 0:
            continue
        vp = np.linspace(-s, s, 513)
        dv = np.abs(Phi.partial(0, 1, np.full_like(vp, ui), vp))
        dv = np.maximum.reduce([dv, np.roll(dv, 1), np.roll(dv, -1)])
        ev = phase_panels(-s, s, lambda x: lam * np.interp(x, vp, dv), PHASE_BUDGET, s / 8, n_probe=513)
        xv, wv = panel_nodes(ev, n_gl)
        uu = np.full_like(xv, ui)
        total += wi * np.sum(wv * beta(uu, xv) * np.exp(1j * lam * Phi(uu, xv)))
    return total


# ---------------------------------------------------------------------------
# decay scans and fits


@dataclass
class DecaySamples:
    lam: np.ndarray
    magnitude: np.ndarray
    method: str = "nested"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lam = np.asarray(self.lam, float)
        self.magnitude = np.asarray(self.magnitude, float)
        if self.lam.size > 1 and np.any(np.diff(self.lam) <= 0):
            raise DomainError("scales must be strictly increasing")
        if not np.all(np.isfinite(self.magnitude)):
            raise DomainError("non-finite magnitude")


@dataclass
class DecayFit:
    slope: float
    intercept: float
    max_residual: float
    lambda_range_used: tuple
    n_used: int

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "max_residual": self.max_residual,
                "lambda_range_used": list(self.lambda_range_used), "n_used": self.n_used}


def _integrate(spec, lam, method):
    if method == "oracle":
        return oracle_integral(spec, lam)
    if method == "nested":
        return nested_vdc_integral(spec, lam)
    raise DomainError(f"unknown method {method!r}")


def decay_scan(spec, method="nested", threads=1):
    """|I(lam)| over ``spec.lambda_grid``."""
    lams = np.asarray(spec.lambda_grid, float)

    def one(lam):
        try:
            return abs(_integrate(spec, lam, method))
        except QuadratureBudgetError as exc:
            raise QuadratureBudgetError(f"{exc} (lambda={lam:g})", exc.achieved, exc.value) from exc

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            mags = list(ex.map(one, lams))
    else:
        mags = [one(l) for l in lams]
    return DecaySamples(lams, np.array(mags), method)


def drift_set(domain_radius, n_circle=64, factor=10.0):
    """Origin plus ``n_circle`` points on the circle |d| = factor * eps."""
    th = 2 * np.pi * np.arange(n_circle) / n_circle
    R = factor * domain_radius
    return np.vstack([[0.0, 0.0], np.column_stack([R * np.cos(th), R * np.sin(th)])])


def worst_drift_scan(phase, amplitude, lambda_grid, domain_radius, method="nested",
                     n_circle=64, factor=10.0, threads=1):
    """max over the drift set of |I(lam)| for each lam."""
    drifts = drift_set(domain_radius, n_circle, factor)
    lams = np.asarray(lambda_grid, float)

    def one(lam):
        best, arg = -1.0, None
        for d in drifts:
            sp = OscillatorySpec(phase, amplitude, lams, tuple(d), domain_radius)
            m = abs(_integrate(sp, lam, method))
            if m > best:
                best, arg = m, d
        return best, arg

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(one, lams))
    else:
        res = [one(l) for l in lams]
    mags = np.array([m for m, _ in res])
    args = np.array([a for _, a in res])
    return DecaySamples(lams, mags, method, extra={"argmax_drift": args})


def fit_decay(samples, min_samples=8):
    """Least-squares line through (log10 lam, log10 |I|)."""
    lam = np.asarray(samples.lam, float)
    mag = np.asarray(samples.magnitude, float)
    keep = mag > 1e-300
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} underflowing samples", RuntimeWarning, stacklevel=2)
    lam, mag = lam[keep], mag[keep]
    if lam.size < min_samples:
        raise FitError(f"need at least {min_samples} samples, have {lam.size}")
    x = np.log10(lam)
    y = np.log10(mag)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return DecayFit(float(slope), float(intercept), float(np.abs(res).max()),
                    (float(lam.min()), float(lam.max())), int(lam.size))


def envelope_ratio(samples, exponent):
    """max/min of the running maximum of |I| * lam^exponent."""
    env = np.maximum.accumulate(np.asarray(samples.magnitude) * np.asarray(samples.lam) ** exponent)
    env = env[env > 0]
    return float(env.max() / env.min()) if env.size else float("inf")
