"""Differential geometry of graph surfaces z = h(u, v).

Gauss map, Gaussian curvature, the zero-curvature curve
Gamma = {J = 0} with J = h_uu h_vv - h_uv^2, normalization to
h_uu = h_uv = 0, h_vv = 1 at a base point, the curve psi with
h_v(u, psi(u)) = 0, the expansion h = a (v - psi)^2 + b, and the
regular / fold / cusp classification.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateError, DomainError, NonConvergenceError, RegularPointError
from .fields import FunctionField, Polynomial2, ScalarField2
from .numerics import implicit_jets, safeguarded_newton

KINDS = ("Regular", "Fold", "Cusp", "Degenerate")


@dataclass(frozen=True)
class Tolerances:
    curvature_rel: float = 1e-6
    third: float = 1e-5
    fourth: float = 1e-5
    trace: float = 1e-8
    rank: float = 1e-6

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if not v > 0:
                raise ValueError(f"tolerance {k} must be positive")

    def curvature_tol(self, hess_frobenius):
        return self.curvature_rel * (hess_frobenius + 1.0)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class NormalizationFrame:
    """Affine data of a normalization: h_new(s) = sign*(h(o + M s) - h(o) - g.M s)."""

    origin: tuple
    matrix: np.ndarray
    sign: float
    gradient: np.ndarray

    def to_original(self, s):
        return np.asarray(self.origin) + self.matrix @ np.asarray(s, float)


@dataclass(frozen=True)
class SurfacePatch:
    h: ScalarField2
    domain_radius: float
    normalized: bool = False
    base_point: tuple = (0.0, 0.0)
    frame: Optional[NormalizationFrame] = None
    name: str = ""

    def __post_init__(self):
        if not self.domain_radius > 0:
            raise DomainError("domain_radius must be positive")

    def contains(self, point, slack=1e-12):
        u, v = point
        return np.hypot(u, v) <= self.domain_radius * (1 + slack)


@dataclass
class SingularityReport:
    kind: str
    witnesses: dict
    in_class_C: bool
    point: tuple = (0.0, 0.0)
    diagnostic: str = ""

    def to_dict(self):
        return {
            "point": [float(self.point[0]), float(self.point[1])],
            "kind": self.kind,
            "in_class_C": bool(self.in_class_C),
            "witnesses": {k: _json_float(v) for k, v in self.witnesses.items()},
            "diagnostic": self.diagnostic,
        }


@dataclass
class CurveTrace:
    points: np.ndarray
    tangent: np.ndarray
    closure: str

    def to_dict(self):
        return {"closure": self.closure, "points": self.points.tolist()}


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _check_point(patch, point):
    if not patch.contains(point):
        raise DomainError(f"point {tuple(point)} outside domain disk of radius {patch.domain_radius}")


def gauss_map(patch, point):
    """Unit vector (-h_u, h_v, 1)/sqrt(1 + |grad h|^2); differs from geometric_normal in the second entry."""
    _check_point(patch, point)
    u, v = float(point[0]), float(point[1])
    hu = float(patch.h.partial(1, 0, u, v))
    hv = float(patch.h.partial(0, 1, u, v))
    n = np.array([-hu, hv, 1.0])
    return n / np.sqrt(1.0 + hu * hu + hv * hv)


def geometric_normal(patch, point):
    """Upward unit normal (-h_u, -h_v, 1)/norm of the graph."""
    u, v = float(point[0]), float(point[1])
    hu = float(patch.h.partial(1, 0, u, v))
    hv = float(patch.h.partial(0, 1, u, v))
    n = np.array([-hu, -hv, 1.0])
    return n / np.linalg.norm(n)


def _curv(h, u, v):
    hu = h.partial(1, 0, u, v)
    hv = h.partial(0, 1, u, v)
    huu = h.partial(2, 0, u, v)
    huv = h.partial(1, 1, u, v)
    hvv = h.partial(0, 2, u, v)
    J = huu * hvv - huv * huv
    K = J / (1.0 + hu * hu + hv * hv) ** 2
    frob = np.sqrt(huu ** 2 + 2 * huv ** 2 + hvv ** 2)
    return K, J, frob


def gauss_curvature(patch, point):
    """K = (h_uu h_vv - h_uv^2) / (1 + |grad h|^2)^2."""
    _check_point(patch, point)
    K, _, _ = _curv(patch.h, float(point[0]), float(point[1]))
    return float(K)


def zero_curvature_function(h, u, v):
    """J = h_uu h_vv - h_uv^2 (same zero set as K)."""
    return h.partial(2, 0, u, v) * h.partial(0, 2, u, v) - h.partial(1, 1, u, v) ** 2


def _grad_J(h, u, v):
    huu = h.partial(2, 0, u, v)
    huv = h.partial(1, 1, u, v)
    hvv = h.partial(0, 2, u, v)
    huuu = h.partial(3, 0, u, v)
    huuv = h.partial(2, 1, u, v)
    huvv = h.partial(1, 2, u, v)
    hvvv = h.partial(0, 3, u, v)
    Ju = huuu * hvv + huu * huvv - 2 * huv * huuv
    Jv = huuv * hvv + huu * hvvv - 2 * huv * huvv
    return np.array([Ju, Jv])


def _correct(h, x, tol, maxit=30):
    """Newton projection onto J = 0 along grad J."""
    x = np.array(x, float)
    for _ in range(maxit):
        J = float(zero_curvature_function(h, x[0], x[1]))
        g = _grad_J(h, x[0], x[1]).astype(float)
        gg = float(g @ g)
        if gg < tol * tol:
            raise DegenerateError(f"grad J vanishes near {tuple(x)}", point=tuple(x))
        step = J / gg * g
        x = x - step
        if abs(J) <= 1e-3 * tol and np.linalg.norm(step) < 1e-15:
            break
        if abs(J) <= 1e-3 * tol:
            J2 = float(zero_curvature_function(h, x[0], x[1]))
            if abs(J2) <= 1e-3 * tol:
                break
    return x


def _follow(h, seed, direction, ds, eps, tol, max_steps):
    pts = [seed]
    x = seed
    t_prev = direction
    closed = False
    for n in range(max_steps):
        g = _grad_J(h, x[0], x[1]).astype(float)
        ng = np.linalg.norm(g)
        if ng < tol:
            raise DegenerateError(f"grad J vanishes on Gamma near {tuple(x)}", point=tuple(x))
        t = np.array([-g[1], g[0]]) / ng
        if t @ t_prev < 0:
            t = -t
        y = _correct(h, x + ds * t, tol)
        if np.hypot(*y) > eps:
            break
        if n >= 8 and np.linalg.norm(y - seed) < 0.75 * ds:
            closed = True
            break
        pts.append(y)
        x, t_prev = y, t
    return np.array(pts), closed


def trace_zero_curvature(patch, tol=DEFAULT_TOL, n_scan=200, step=None, max_steps=200000):
    """Trace all components of Gamma = {J = 0} meeting the domain disk.

    Seeds come from sign changes of J on an ``n_scan``^2 grid; each seed is
    followed by an arclength predictor-corrector with step ``eps/200``.
    """
    h = patch.h
    eps = patch.domain_radius
    ds = eps / 200.0 if step is None else step
    g = np.linspace(-eps, eps, n_scan)
    dx = g[1] - g[0]
    U, V = np.meshgrid(g, g, indexing="ij")
    J = np.asarray(zero_curvature_function(h, U, V), float) * np.ones_like(U)
    inside = U ** 2 + V ** 2 < eps ** 2
    seeds = []
    for axis in (0, 1):
        a = J[:-1, :] if axis == 0 else J[:, :-1]
        b = J[1:, :] if axis == 0 else J[:, 1:]
        ok = (inside[:-1, :] & inside[1:, :]) if axis == 0 else (inside[:, :-1] & inside[:, 1:])
        ch = ok & (np.sign(a) * np.sign(b) < 0)
        for i, j in zip(*np.nonzero(ch)):
            w = a[i, j] / (a[i, j] - b[i, j])
            if axis == 0:
                seeds.append((g[i] + w * dx, g[j]))
            else:
                seeds.append((g[i], g[j] + w * dx))
    if not seeds:
        return []
    seeds = np.array(seeds)
    corrected = []
    for s in seeds:
        c = _correct(h, s, tol.trace)
        if np.hypot(*c) < eps:
            corrected.append(c)
    if not corrected:
        return []
    seeds = np.array(corrected)
    tree = cKDTree(seeds)
    used = np.zeros(len(seeds), bool)
    traces = []
    for k in range(len(seeds)):
        if used[k]:
            continue
        seed = seeds[k]
        g0 = _grad_J(h, seed[0], seed[1]).astype(float)
        if np.linalg.norm(g0) < tol.trace:
            raise DegenerateError(f"grad J vanishes at seed {tuple(seed)}", point=tuple(seed))
        t0 = np.array([-g0[1], g0[0]]) / np.linalg.norm(g0)
        fwd, closed = _follow(h, seed, t0, ds, eps, tol.trace, max_steps)
        if closed:
            pts = fwd
        else:
            bwd, _ = _follow(h, seed, -t0, ds, eps, tol.trace, max_steps)
            pts = np.vstack([bwd[::-1], fwd[1:]])
        for idx in tree.query_ball_point(pts, r=2.0 * max(dx, ds)):
            used[idx] = True
        used[k] = True
        gJ = _grad_J(h, pts[:, 0], pts[:, 1]).astype(float)
        tang = np.stack([-gJ[1], gJ[0]], axis=1)
        tang /= np.linalg.norm(tang, axis=1)[:, None]
        traces.append(CurveTrace(points=pts, tangent=tang,
                                 closure="closed" if closed else "hits_boundary"))
    return traces


def _hessian_frame(h, point):
    u, v = point
    g = np.array([float(h.partial(1, 0, u, v)), float(h.partial(0, 1, u, v))])
    H = np.array([[float(h.partial(2, 0, u, v)), float(h.partial(1, 1, u, v))],
                  [float(h.partial(1, 1, u, v)), float(h.partial(0, 2, u, v))]])
    evals, evecs = np.linalg.eigh(H)
    order = np.argsort(np.abs(evals))
    evals = evals[order]
    evecs = evecs[:, order]
    e1 = evecs[:, 0]
    e2 = np.array([-e1[1], e1[0]])
    if e2 @ evecs[:, 1] < 0:
        e2 = -e2
    return g, H, evals, e1, e2


def normalize_at(patch, point, tol=DEFAULT_TOL, max_shrink=40):
    """Affinely re-coordinatize so that h(0) = 0, grad h(0) = 0, Hess h(0) = diag(0, 1).

    The returned patch records the affine map in ``frame``.  The domain
    radius is shrunk until h_vv > 1/2 on the new disk.
    """
    _check_point(patch, point)
    h = patch.h
    g, H, evals, e1, e2 = _hessian_frame(h, point)
    frob = float(np.linalg.norm(H))
    if np.max(np.abs(evals)) <= tol.rank:
        raise DegenerateError(f"rank dN = 0 at {tuple(point)} (Hessian vanishes)", point=tuple(point))
    K, _, _ = _curv(h, float(point[0]), float(point[1]))
    if abs(K) > tol.curvature_tol(frob):
        raise RegularPointError(f"regular point {tuple(point)} (K = {float(K):.3e}), nothing to normalize")
    lam2 = evals[1]
    sign = 1.0 if lam2 > 0 else -1.0
    M = np.column_stack([e1, e2 / np.sqrt(abs(lam2))])
    hn = h.pullback(point, M, sign=sign)
    room = patch.domain_radius - np.hypot(*point)
    eps = room / np.linalg.norm(M, 2)
    if not eps > 0:
        raise DomainError("base point on the domain boundary")
    th = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    for _ in range(max_shrink):
        rr = np.concatenate([[0.0], np.repeat([eps / 3, 2 * eps / 3, eps], th.size)])
        tt = np.concatenate([[0.0], np.tile(th, 3)])
        hvv = hn.partial(0, 2, rr * np.cos(tt), rr * np.sin(tt))
        if np.all(hvv > 0.5):
            break
        eps *= 0.5
    else:
        raise DegenerateError("could not find a disk with h_vv > 1/2", point=tuple(point))
    frame = NormalizationFrame(origin=(float(point[0]), float(point[1])), matrix=M, sign=sign, gradient=g)
    return SurfacePatch(h=hn, domain_radius=float(eps), normalized=True, base_point=(0.0, 0.0),
                        frame=frame, name=patch.name)


def normalization_residuals(patch):
    """Deviation of a normalized patch from h(0)=0, grad h(0)=0, Hess h(0)=diag(0,1)."""
    h = patch.h
    return {
        "h": abs(float(h(0.0, 0.0))),
        "grad": float(np.hypot(h.partial(1, 0, 0.0, 0.0), h.partial(0, 1, 0.0, 0.0))),
        "h_uu": abs(float(h.partial(2, 0, 0.0, 0.0))),
        "h_uv": abs(float(h.partial(1, 1, 0.0, 0.0))),
        "h_vv": abs(float(h.partial(0, 2, 0.0, 0.0)) - 1.0),
    }


def classify_point(patch, point, tol=DEFAULT_TOL):
    """Classify a point as Regular, Fold, Cusp or Degenerate.

    Decisions use normalized coordinates (Hessian diag(0, 1)).  The
    witnesses ``h_uuu``, ``h_uuv``, ``h_uuuu`` and ``cusp_discriminant`` are
    reported in the Hessian eigenframe without rescaling (so that, e.g.,
    v^2 + u^2 v gives h_uuv = 2); the ``normalized_*`` entries carry the
    values that decided the class.
    """
    _check_point(patch, point)
    h = patch.h
    u, v = float(point[0]), float(point[1])
    K, _, frob = _curv(h, u, v)
    K, frob = float(K), float(frob)
    ctol = tol.curvature_tol(frob)
    w = {"K": K, "curvature_tol": ctol}
    g, H, evals, e1, e2 = _hessian_frame(h, (u, v))
    w["hessian_eig_small"] = float(evals[0])
    w["hessian_eig_large"] = float(evals[1])
    sign = 1.0 if evals[1] >= 0 else -1.0
    he = h.pullback((u, v), np.column_stack([e1, e2]), sign=sign)
    w["h_uuu"] = float(he.partial(3, 0, 0.0, 0.0))
    w["h_uuv"] = float(he.partial(2, 1, 0.0, 0.0))
    w["h_uuuu"] = float(he.partial(4, 0, 0.0, 0.0))
    w["cusp_discriminant"] = w["h_uuuu"] - 3.0 * w["h_uuv"] ** 2
    for k in ("normalized_h_uuu", "normalized_h_uuv", "normalized_cusp_discriminant"):
        w[k] = float("nan")
    if abs(K) > ctol:
        return SingularityReport("Regular", w, True, (u, v))
    try:
        npatch = normalize_at(patch, (u, v), tol)
    except (DegenerateError, DomainError, RegularPointError) as exc:
        return SingularityReport("Degenerate", w, False, (u, v), diagnostic=str(exc))
    hn = npatch.h
    n3 = float(hn.partial(3, 0, 0.0, 0.0))
    n21 = float(hn.partial(2, 1, 0.0, 0.0))
    n4 = float(hn.partial(4, 0, 0.0, 0.0))
    disc = n4 - 3.0 * n21 ** 2
    w["normalized_h_uuu"], w["normalized_h_uuv"], w["normalized_cusp_discriminant"] = n3, n21, disc
    if abs(n3) > tol.third:
        kind = "Fold"
    elif abs(n21) > tol.third and abs(disc) > tol.fourth:
        kind = "Cusp"
    else:
        kind = "Degenerate"
    diag = "" if kind != "Degenerate" else "fold and cusp conditions both fail"
    return SingularityReport(kind, w, kind != "Degenerate", (u, v), diagnostic=diag)


def critical_direction(patch, gamma_point, tol=DEFAULT_TOL):
    """Upward unit normal at a point of Gamma.

    This is the direction x for which (u, v) is a stationary point of
    x . (u, v, h(u, v)); see :func:`geometric_normal`.
    """
    _check_point(patch, gamma_point)
    u, v = float(gamma_point[0]), float(gamma_point[1])
    J = float(zero_curvature_function(patch.h, u, v))
    if abs(J) > tol.trace:
        raise DomainError(f"point {(u, v)} not on Gamma (|J| = {abs(J):.2e})")
    return geometric_normal(patch, (u, v))


class PsiCurve:
    """The curve v = psi(u) with h_v(u, psi(u)) = 0 on a normalized patch."""

    def __init__(self, patch, maxit=50):
        self.patch = patch
        self.h = patch.h
        self.maxit = maxit

    def __call__(self, u):
        u = np.asarray(u, float)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        eps = self.patch.domain_radius
        F = lambda x: self.h.partial(0, 1, u, x)
        dF = lambda x: self.h.partial(0, 2, u, x)
        lo = np.full(u.shape, -2 * eps)
        hi = np.full(u.shape, 2 * eps)
        for _ in range(8):
            bad = (F(lo) > 0) | (F(hi) < 0)
            if not bad.any():
                break
            lo = np.where(bad, 2 * lo, lo)
            hi = np.where(bad, 2 * hi, hi)
        x, conv = safeguarded_newton(F, dF, lo, hi, x0=np.zeros_like(u), maxit=self.maxit, ftol=1e-13)
        res = np.abs(F(x))
        ok = conv & (res <= 1e-12)
        if not ok.all():
            raise NonConvergenceError("psi Newton failed", where=float(u[~ok][0]))
        return float(x[0]) if scalar else x

    def jets(self, u, order=4):
        """Taylor coefficients c_k (k = 0..order) of psi at u."""
        u = float(u)
        v0 = self(u)
        Fd = [[float(self.h.partial(a, b + 1, u, v0)) for b in range(order + 1 - a)]
              for a in range(order + 1)]
        c = implicit_jets(Fd, order)
        c[0] = v0
        return c

    def derivative(self, u, n):
        """n-th derivative of psi at scalar u, n <= 4."""
        if n == 0:
            return self(u)
        return factorial(n) * self.jets(u, max(n, 1))[n]


def psi_curve(patch):
    if not patch.normalized:
        raise DomainError("psi_curve requires a normalized patch")
    return PsiCurve(patch)


@dataclass
class NormalForm:
    a: ScalarField2
    b: object
    psi: PsiCurve


def normal_form_data(patch, taylor_threshold=1e-6):
    """Return a, b with h(u, v) = a(u, v) (v - psi(u))^2 + b(u)."""
    psi = psi_curve(patch)
    h = patch.h

    def b(u):
        u = np.asarray(u, float)
        return h(u, psi(u))

    if isinstance(h, Polynomial2):
        def a_fn(u, v):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            p = psi(u.ravel()).reshape(u.shape)
            t = v - p
            coeffs = h.v_polynomials(u.ravel())  # (n, dv+1)
            dv = coeffs.shape[1] - 1
            out = np.zeros(u.size)
            tt = t.ravel()
            pp = p.ravel()
            # Taylor shift of v -> h(u, p + t); a = sum_{m >= 2} c_m t^(m-2)
            for m in range(2, dv + 1):
                cm = np.zeros(u.size)
                for j in range(m, dv + 1):
                    cm += coeffs[:, j] * _binom(j, m) * pp ** (j - m)
                out += cm * tt ** (m - 2)
            return out.reshape(u.shape)
    else:
        def a_fn(u, v):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            p = psi(u.ravel()).reshape(u.shape)
            t = v - p
            small = np.abs(t) < taylor_threshold
            ts = np.where(small, 1.0, t)
            raw = (h(u, v) - h(u, p)) / ts ** 2
            tay = (h.partial(0, 2, u, p) / 2 + h.partial(0, 3, u, p) * t / 6
                   + h.partial(0, 4, u, p) * t * t / 24)
            return np.where(small, tay, raw)

    step = getattr(h, "step", 1e-3 * patch.domain_radius)
    return NormalForm(a=FunctionField(a_fn, step=step), b=b, psi=psi)


def _binom(n, k):
    from math import comb
    return comb(n, k)
