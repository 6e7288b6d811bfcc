"""Discrete Laplacian on Z^3: symbol, level sets, spectral and resolvent kernels.

p(xi) = sum_j (1 - cos xi_j) on the torus (R / 2 pi Z)^3.  Kernels use the
convention K(x) = (2 pi)^-3 int exp(i x.xi) m(xi) dxi.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.signal import convolve2d
from scipy.spatial import cKDTree

from .errors import DomainError, ExceptionalLevelError, NonConvergenceError, ResolutionError
from .fields import Polynomial2, flat_top
from .numerics import gauss_legendre
from .surface import KINDS, SurfacePatch, classify_point

CRITICAL_VALUES = (0.0, 2.0, 4.0, 6.0)
EXCEPTIONAL_VALUES = (0.0, 2.0, 3.0, 4.0, 6.0)
MESH_GUARD = 1e-6
KERNEL_GUARD = 1e-3
GRAD_MAX = np.sqrt(3.0)


# symbol

def lattice_symbol(xi):
    xi = np.asarray(xi, float)
    return np.sum(1.0 - np.cos(xi), axis=-1)


def symbol_gradient(xi):
    return np.sin(np.asarray(xi, float))


def symbol_hessian(xi):
    c = np.cos(np.asarray(xi, float))
    return c[..., :, None] * np.eye(3)


def implicit_curvature(xi):
    """Gaussian curvature of the level set through xi: grad p . adj(H) . grad p / |grad p|^4."""
    xi = np.asarray(xi, float)
    s, c = np.sin(xi), np.cos(xi)
    s2 = s * s
    num = s2[..., 0] * c[..., 1] * c[..., 2] + s2[..., 1] * c[..., 0] * c[..., 2] \
        + s2[..., 2] * c[..., 0] * c[..., 1]
    g2 = s2.sum(axis=-1)
    return num / (g2 * g2)


@dataclass(frozen=True)
class TorusSymbol:
    """Closed-form symbol of the lattice Laplacian with its derivatives."""

    def __call__(self, xi):
        return lattice_symbol(xi)

    gradient = staticmethod(symbol_gradient)
    hessian = staticmethod(symbol_hessian)
    curvature = staticmethod(implicit_curvature)

    @staticmethod
    def critical_points():
        """Solutions of grad p = 0 (sin xi_j = 0 for every j) in [0, 2 pi)^3."""
        return np.array(list(itertools.product((0.0, np.pi), repeat=3)))

    def critical_values(self):
        return tuple(sorted({round(float(v), 12) for v in self(self.critical_points())}))


def _guard(a, values, margin, exc=ExceptionalLevelError):
    a = float(a)
    for c in values:
        # small slack so that c +/- margin itself is refused despite rounding
        if abs(a - c) <= margin * (1 + 1e-6):
            raise exc(f"level {a} lies within {margin:g} of the exceptional value {c:g}")


# level-set mesh

@dataclass
class LevelSetMesh:
    level: float
    vertices: np.ndarray
    faces: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    resolution: int
    box: tuple

    @property
    def n_vertices(self):
        return len(self.vertices)

    def edges(self):
        f = self.faces
        e = np.vstack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def to_obj(self, path):
        with open(path, "w") as fh:
            fh.write(f"# level set p = {self.level}\n")
            for v in self.vertices:
                fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
            for n in self.normals:
                fh.write(f"vn {n[0]:.12g} {n[1]:.12g} {n[2]:.12g}\n")
            for f in self.faces + 1:
                fh.write(f"f {f[0]}//{f[0]} {f[1]}//{f[1]} {f[2]}//{f[2]}\n")


def mesh_box(a):
    """Center and half-width of a cube containing Sigma_a inside one period."""
    if a < 2:
        return 0.0, min(np.pi, 1.05 * np.arccos(1 - a) + 1e-3)
    if a > 4:
        return np.pi, min(np.pi, 1.05 * np.arccos(1 - (6 - a)) + 1e-3)
    return 0.0, np.pi


def project_to_level(xi, a, tol=1e-10, maxit=50):
    """Newton steps along grad p until |p - a| <= tol."""
    xi = np.array(xi, float)
    for _ in range(maxit):
        f = lattice_symbol(xi) - a
        if np.max(np.abs(f)) <= tol:
            return xi
        g = symbol_gradient(xi)
        xi -= (f / np.sum(g * g, axis=-1))[..., None] * g
    f = lattice_symbol(xi) - a
    if np.max(np.abs(f)) > tol:
        raise NonConvergenceError(f"projection onto p = {a} stalled at {np.max(np.abs(f)):.2e}",
                                  where="project_to_level")
    return xi


def level_set_mesh(a, resolution=128):
    """Marching-cubes triangulation of Sigma_a projected onto the level set."""
    from skimage.measure import marching_cubes

    a = float(a)
    _guard(a, CRITICAL_VALUES, MESH_GUARD)
    if not 0 < a < 6:
        raise DomainError("level must lie in (0, 6)")
    N = int(resolution)
    if N < 64:
        raise DomainError("resolution must be >= 64")
    center, half = mesh_box(a)
    g = np.linspace(center - half, center + half, N)
    h = g[1] - g[0]
    c = np.cos(g)
    vol = 3.0 - c[:, None, None] - c[None, :, None] - c[None, None, :]
    verts, faces, _, _ = marching_cubes(vol, level=a, spacing=(h, h, h))
    verts = verts + (center - half)
    verts = project_to_level(verts, a)
    grad = symbol_gradient(verts)
    normals = grad / np.linalg.norm(grad, axis=1)[:, None]
    return LevelSetMesh(a, verts, faces.astype(np.int64), normals, implicit_curvature(verts), N,
                        (center - half, center + half))


# local graph of Sigma_a over its tangent plane, as an exact Taylor polynomial

def _smul(a, b, D):
    c = convolve2d(a, b)[: D + 1, : D + 1]
    i, j = np.indices(c.shape)
    c[i + j > D] = 0.0
    return c


def _scos_sin(q, D):
    q0 = q[0, 0]
    r = q.copy()
    r[0, 0] = 0.0
    cr = np.zeros_like(q)
    cr[0, 0] = 1.0
    sr = np.zeros_like(q)
    term = cr.copy()
    for k in range(1, D + 1):
        term = _smul(term, r, D) / k
        sgn = (-1) ** (k // 2)
        if k % 2:
            sr += sgn * term
        else:
            cr += sgn * term
    return np.cos(q0) * cr - np.sin(q0) * sr, np.sin(q0) * cr + np.cos(q0) * sr


def _srecip(g, D):
    g0 = g[0, 0]
    r = -g / g0
    r[0, 0] = 0.0
    out = np.zeros_like(g)
    out[0, 0] = 1.0
    term = out.copy()
    for _ in range(D):
        term = _smul(term, r, D)
        out += term
    return out / g0


def tangent_frame(xi):
    g = symbol_gradient(xi)
    n = g / np.linalg.norm(g)
    k = np.argmin(np.abs(n))
    e1 = np.zeros(3)
    e1[k] = 1.0
    e1 -= (e1 @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return n, e1, e2


def local_graph(xi, a, degree=5):
    """Taylor polynomial of h with p(xi + u e1 + v e2 + h(u, v) n) = a."""
    xi = np.asarray(xi, float)
    n, e1, e2 = tangent_frame(xi)
    D = degree
    h = np.zeros((D + 1, D + 1))
    for _ in range(D + 2):
        F = np.zeros_like(h)
        F[0, 0] = 3.0 - a
        Fh = np.zeros_like(h)
        for k in range(3):
            arg = n[k] * h
            arg[0, 0] += xi[k]
            arg[1, 0] += e1[k]
            arg[0, 1] += e2[k]
            cs, sn = _scos_sin(arg, D)
            F -= cs
            Fh += n[k] * sn
        h = h - _smul(F, _srecip(Fh, D), D)
    return Polynomial2(h), (n, e1, e2)


def classify_on_level(xi, a, radius=0.05):
    h, _ = local_graph(xi, a)
    patch = SurfacePatch(h=h, domain_radius=radius, name=f"Sigma_{a:g}")
    return classify_point(patch, (0.0, 0.0))


# zero-curvature samples and flat umbilics

def _grad_K(xi, step=1e-6):
    g = np.zeros_like(xi)
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        g[:, j] = (implicit_curvature(xi + e) - implicit_curvature(xi - e)) / (2 * step)
    return g


def refine_gamma(xi, a, maxit=30, tol=1e-11):
    """Minimal-norm Newton on (p - a, K) = 0."""
    xi = np.array(xi, float)
    for _ in range(maxit):
        F = np.column_stack([lattice_symbol(xi) - a, implicit_curvature(xi)])
        if np.max(np.abs(F)) <= tol:
            break
        J = np.stack([symbol_gradient(xi), _grad_K(xi)], axis=1)
        JJt = J @ np.transpose(J, (0, 2, 1))
        y = np.linalg.solve(JJt, F[..., None])
        xi -= (np.transpose(J, (0, 2, 1)) @ y)[..., 0]
    F = np.column_stack([lattice_symbol(xi) - a, implicit_curvature(xi)])
    return xi, np.max(np.abs(F), axis=1) <= 1e-9


def gamma_samples(mesh, max_points=200):
    """Points of Sigma_a with K = 0, seeded by sign changes of K along mesh edges."""
    K = mesh.curvature
    E = mesh.edges()
    k0, k1 = K[E[:, 0]], K[E[:, 1]]
    sel = k0 * k1 < 0
    if not sel.any():
        return np.zeros((0, 3))
    E, k0, k1 = E[sel], k0[sel], k1[sel]
    t = (k0 / (k0 - k1))[:, None]
    seeds = (1 - t) * mesh.vertices[E[:, 0]] + t * mesh.vertices[E[:, 1]]
    idx = np.unique(np.linspace(0, len(seeds) - 1, min(len(seeds), 4 * max_points)).round().astype(int))
    pts, ok = refine_gamma(seeds[idx], mesh.level)
    pts = pts[ok]
    if not len(pts):
        return pts
    tree = cKDTree(pts)
    keep = np.ones(len(pts), bool)
    for i, nb in enumerate(tree.query_ball_point(pts, 1e-6)):
        if keep[i]:
            for j in nb:
                if j > i:
                    keep[j] = False
    pts = pts[keep]
    idx = np.unique(np.linspace(0, len(pts) - 1, min(len(pts), max_points)).round().astype(int))
    return pts[idx]


def second_form_norm(xi):
    """Frobenius norm of the second fundamental form of the level set at xi."""
    xi = np.atleast_2d(xi)
    g = symbol_gradient(xi)
    gn = np.linalg.norm(g, axis=1)
    n = g / gn[:, None]
    P = np.eye(3)[None] - n[:, :, None] * n[:, None, :]
    H = symbol_hessian(xi)
    II = P @ H @ P / gn[:, None, None]
    return np.linalg.norm(II, axis=(1, 2))


def _spread(points, order, n, sep):
    picked = []
    for i in order:
        if all(np.linalg.norm(points[i] - points[j]) > sep for j in picked):
            picked.append(i)
            if len(picked) >= n:
                break
    return points[picked]


def umbilic_candidates(a, seeds, tol=1e-6, n_starts=16):
    """Local minima of |II| on Sigma_a below ``tol`` (flat umbilics), started
    from the seeds with the smallest |II| that are mutually separated.
    """
    if not len(seeds):
        return np.zeros((0, 3))
    starts = _spread(seeds, np.argsort(second_form_norm(seeds)), n_starts, 0.5)
    found = []
    for s in starts:
        res = minimize(lambda z: second_form_norm(z)[0] ** 2, s, method="SLSQP",
                       constraints=[{"type": "eq", "fun": lambda z: lattice_symbol(z) - a,
                                     "jac": symbol_gradient}],
                       options={"ftol": 1e-20, "maxiter": 200})
        z = project_to_level(res.x, a)
        if second_form_norm(z)[0] < tol and not any(np.linalg.norm(z - f) < 1e-4 for f in found):
            found.append(z)
    return np.array(found).reshape(-1, 3)


@dataclass
class LevelSetReport:
    level: float
    resolution: int
    n_vertices: int
    n_gamma: int
    counts: dict
    in_class_C: bool
    curvature_sign: dict
    degenerate_points: list = field(default_factory=list)

    def to_dict(self):
        return {"level": self.level, "resolution": self.resolution, "n_vertices": self.n_vertices,
                "n_gamma": self.n_gamma, "counts": dict(self.counts), "in_class_C": self.in_class_C,
                "curvature_sign": dict(self.curvature_sign),
                "degenerate_points": [list(map(float, p)) for p in self.degenerate_points]}


def classify_level_set(a, resolution=128, max_gamma=200):
    """Classify Gamma-samples of Sigma_a through local graphs over tangent planes."""
    mesh = level_set_mesh(a, resolution)
    gam = gamma_samples(mesh, max_gamma)
    counts = {k: 0 for k in KINDS}
    degenerate = []
    for p in gam:
        rep = classify_on_level(p, a)
        counts[rep.kind] += 1
        if rep.kind == "Degenerate":
            degenerate.append(p)
    seeds = mesh.vertices if not len(gam) else np.vstack([gam, mesh.vertices])
    for p in umbilic_candidates(a, seeds):
        rep = classify_on_level(p, a)
        counts[rep.kind] += 1
        if rep.kind == "Degenerate":
            degenerate.append(p)
    K = mesh.curvature
    sign = {"positive": int(np.sum(K > 0)), "negative": int(np.sum(K < 0)), "zero": int(np.sum(K == 0))}
    return LevelSetReport(float(a), mesh.resolution, mesh.n_vertices, len(gam), counts,
                          counts["Degenerate"] == 0, sign, degenerate)


# spectral-measure kernel E'(a)(x) = (2 pi)^-3 int_{Sigma_a} cos(x.xi) / |grad p| dsigma

def _psi(s):
    """0 below 1/6, 1 above 1/3, smooth in between."""
    return flat_top(6.0 * (1.0 / 3.0 - s), 0.0)


@lru_cache(maxsize=32)
def _spectral_nodes(a, N):
    """Nodes and weights of the chart quadrature for Sigma_a.

    Chart j solves cos xi_j = 3 - a - cos xi_k - cos xi_l on both branches; a
    smooth partition of unity in sin^2 xi_j / |grad p|^2 keeps each chart away
    from its folds, so the periodic trapezoid rule in (xi_k, xi_l) is
    spectrally accurate.
    """
    t = 2 * np.pi * np.arange(N) / N
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    c1, c2 = np.cos(T1), np.cos(T2)
    s1, s2 = np.sin(T1), np.sin(T2)
    c = 3.0 - a - c1 - c2
    inside = np.abs(c) < 1
    pts, wts = [], []
    for j in range(3):
        cc = c[inside]
        sj2 = 1.0 - cc * cc
        g2 = sj2 + s1[inside] ** 2 + s2[inside] ** 2
        den = _psi(sj2 / g2) + _psi(s1[inside] ** 2 / g2) + _psi(s2[inside] ** 2 / g2)
        w = _psi(sj2 / g2) / den / np.sqrt(sj2)
        keep = w > 0
        xj = np.arccos(cc[keep])
        others = [T1[inside][keep], T2[inside][keep]]
        for sgn in (1.0, -1.0):
            cols = others.copy()
            cols.insert(j, sgn * xj)
            pts.append(np.column_stack(cols))
            wts.append(w[keep])
    P = np.vstack(pts)
    W = np.concatenate(wts) * (2 * np.pi / N) ** 2 / (2 * np.pi) ** 3
    P.setflags(write=False)
    W.setflags(write=False)
    return P, W


def _kernel_values(a, X, N, chunk=2 ** 22):
    P, W = _spectral_nodes(float(a), int(N))
    X = np.atleast_2d(np.asarray(X, float))
    out = np.zeros(len(X))
    step = max(1, chunk // len(P))
    for s in range(0, len(X), step):
        out[s:s + step] = np.cos(X[s:s + step] @ P.T) @ W
    return out


def spectral_kernel_field(a, X, resolution=512, verify=True, rtol=1e-5, allow_umbilic=False):
    """E'(a) at the lattice points X, checked against resolution 2N.

    The convergence check is relative to max(max |E'(a)(x)|, E'(a)(0)).
    ``allow_umbilic`` lifts the guard around a = 3, where Sigma_a is smooth
    but not in class C; the guard around the critical values stays.
    """
    _guard(a, CRITICAL_VALUES if allow_umbilic else EXCEPTIONAL_VALUES, KERNEL_GUARD)
    if not 0 < a < 6:
        raise DomainError("level must lie in (0, 6)")
    X = np.atleast_2d(np.asarray(X, float))
    fine = _kernel_values(a, X, 2 * resolution)
    if verify:
        coarse = _kernel_values(a, X, resolution)
        scale = max(np.max(np.abs(fine)), abs(_kernel_values(a, np.zeros((1, 3)), 2 * resolution)[0]))
        err = np.max(np.abs(fine - coarse)) / scale
        if err > rtol:
            raise ResolutionError(f"spectral kernel not converged at N={resolution} (rel {err:.2e})",
                                  coarse=coarse, fine=fine)
    return fine


def spectral_kernel(a, x, resolution=512, verify=True):
    return float(spectral_kernel_field(a, np.asarray(x, float)[None, :], resolution, verify)[0])


def spectral_kernel_box(a, L, resolution=512, verify=True):
    """E'(a) on |x|_inf <= L, evaluated on x1 >= x2 >= x3 >= 0 and filled in
    by the cubic symmetry of p.
    """
    r = np.arange(L + 1)
    rep = np.array([(i, j, k) for i in r for j in r[: i + 1] for k in r[: j + 1]], float)
    v = spectral_kernel_field(a, rep, resolution, verify)
    table = {tuple(int(c) for c in x): val for x, val in zip(rep, v)}
    full = np.arange(-L, L + 1)
    out = np.empty((2 * L + 1,) * 3)
    for i, x in enumerate(full):
        for j, y in enumerate(full):
            for k, z in enumerate(full):
                out[i, j, k] = table[tuple(sorted((abs(x), abs(y), abs(z)), reverse=True))]
    return out


def spectral_kernel_mesh(a, x, resolution=128):
    """Low-order cross-check: centroid rule on the marching-cubes mesh."""
    m = level_set_mesh(a, resolution)
    tri = m.vertices[m.faces]
    cen = project_to_level(tri.mean(axis=1), a)
    area = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    g = np.linalg.norm(symbol_gradient(cen), axis=1)
    x = np.asarray(x, float)
    return float(np.sum(area * np.cos(cen @ x) / g) / (2 * np.pi) ** 3)


def _dos_nodes(n_nodes=600, segments=(0.0, 2.0, 3.0, 4.0, 6.0)):
    """Gauss-Legendre nodes with a = e + (b - e)(1 - cos(pi s))/2 on each segment,
    clustering toward the van Hove points.
    """
    m = n_nodes // (len(segments) - 1)
    x, w = gauss_legendre(m)
    s = 0.5 * (x + 1)
    ws = 0.5 * w
    A, Wt = [], []
    for e, b in zip(segments[:-1], segments[1:]):
        A.append(e + (b - e) * 0.5 * (1 - np.cos(np.pi * s)))
        Wt.append(ws * (b - e) * 0.5 * np.pi * np.sin(np.pi * s))
    return np.concatenate(A), np.concatenate(Wt)


def density_of_states_integral(n_nodes=600, resolution=128):
    """int_0^6 E'(a)(0) da."""
    A, Wt = _dos_nodes(n_nodes)
    vals = np.array([_kernel_values(a, np.zeros((1, 3)), resolution)[0] for a in A])
    _spectral_nodes.cache_clear()
    return float(vals @ Wt)


def octahedral_images(x):
    """The 48 images of x under coordinate permutations and sign flips."""
    x = np.asarray(x, float)
    out = []
    for perm in itertools.permutations(range(3)):
        for sg in itertools.product((1, -1), repeat=3):
            out.append(np.array(sg) * x[list(perm)])
    return np.array(out)


def fundamental_directions(n):
    """Fibonacci-sphere directions folded into the sector x1 >= x2 >= x3 >= 0."""
    k = np.arange(n)
    z = 1 - 2 * (k + 0.5) / n
    phi = k * np.pi * (3 - np.sqrt(5))
    r = np.sqrt(1 - z * z)
    d = np.abs(np.column_stack([r * np.cos(phi), r * np.sin(phi), z]))
    d = -np.sort(-d, axis=1)
    return np.unique(np.round(d, 12), axis=0)


def gamma_normal_directions(a, resolution=128, n=16):
    if a in EXCEPTIONAL_VALUES:
        return np.zeros((0, 3))
    mesh = level_set_mesh(a, resolution)
    gam = gamma_samples(mesh, n)
    if not len(gam):
        return np.zeros((0, 3))
    g = symbol_gradient(gam)
    d = np.abs(g / np.linalg.norm(g, axis=1)[:, None])
    return -np.sort(-d, axis=1)


@dataclass
class DecayEnvelope:
    level: float
    radii: np.ndarray
    sup: np.ndarray
    argmax: np.ndarray
    exponent: float = 0.75

    @property
    def envelope(self):
        return self.sup * self.radii ** self.exponent

    @property
    def ratio(self):
        e = self.envelope
        return float(e.max() / e.min())

    def slope(self):
        return float(np.polyfit(np.log(self.radii), np.log(self.sup), 1)[0])

    def to_dict(self):
        return {"level": self.level, "radii": self.radii.tolist(), "sup": self.sup.tolist(),
                "envelope": self.envelope.tolist(), "ratio": self.ratio, "slope": self.slope()}


def kernel_decay_envelope(a, radii=(8, 16, 32, 64), n_directions=64, resolution=512, verify=False,
                          band=0.1):
    """Worst-direction sup of |E'(a)(x)| over lattice x with | |x| - R | <= band R,
    rescaled to |x| = R with the weight (|x| / R)^(3/4).
    """
    radii = np.asarray(radii, float)
    dirs = [fundamental_directions(n_directions), np.array([[1, 0, 0], [1, 1, 0], [1, 1, 1.0]])]
    gd = gamma_normal_directions(a) if abs(a - 3.0) > KERNEL_GUARD else np.zeros((0, 3))
    if len(gd):
        dirs.append(gd)
    dirs = np.vstack(dirs)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    sups, args = [], []
    for R in radii:
        # unit radial steps: at a = 3 the kernel vanishes when |x|_1 is odd
        ts = np.arange(R * (1 - band), R * (1 + band) + 0.5, 0.5)
        X = np.unique(np.round(ts[:, None, None] * dirs[None]).reshape(-1, 3), axis=0)
        X = X[np.any(X != 0, axis=1)]
        vals = np.abs(spectral_kernel_field(a, X, resolution, verify, allow_umbilic=True))
        i = int(np.argmax(vals))
        sups.append(vals[i] * (np.linalg.norm(X[i]) / R) ** 0.75)
        args.append(X[i])
    return DecayEnvelope(float(a), radii, np.array(sups), np.array(args))


# resolvent kernel

@dataclass
class LatticeKernelField:
    """Kernel values on the box |x|_inf <= L, stored as values[x + L]."""

    L: int
    values: np.ndarray
    lam: float
    delta: float
    info: dict = field(default_factory=dict)

    def __getitem__(self, x):
        i, j, k = (int(c) + self.L for c in x)
        return self.values[i, j, k]

    def sites(self):
        r = np.arange(-self.L, self.L + 1)
        return np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)

    def evenness_defect(self):
        v = self.values
        return float(np.max(np.abs(v - v[::-1, ::-1, ::-1])))

    def symmetry_defect(self):
        v = self.values
        worst = 0.0
        for perm in itertools.permutations(range(3)):
            w = np.transpose(v, perm)
            for flips in itertools.product((False, True), repeat=3):
                u = w
                for ax, f in enumerate(flips):
                    if f:
                        u = np.flip(u, axis=ax)
                worst = max(worst, float(np.max(np.abs(u - v))))
        return worst

    def rows(self):
        s = self.sites()
        v = self.values.reshape(-1)
        return [(int(a), int(b), int(c), float(z.real), float(z.imag)) for (a, b, c), z in zip(s, v)]


def resolution_threshold(N):
    """Smallest delta the N^3 trapezoid rule resolves: 4 (2 pi / N) max |grad p|."""
    return 4 * (2 * np.pi / N) * GRAD_MAX


def _distance_to_spectrum(lam):
    return max(0.0, -lam, lam - 6.0)


def resolvent_kernel(lam, delta, L=8, N=1024, slab=16):
    """(2 pi)^-3 int exp(i x.xi) / (p(xi) - lam - i delta) dxi on |x|_inf <= L.

    The N^3 trapezoid sum of the even integrand reduces to the octant
    [0, pi]^3 with DCT-I weights; only the L + 1 needed frequencies per axis
    are formed, by slab-wise contraction with a cosine matrix.
    """
    lam, delta = float(lam), float(delta)
    N = int(N)
    if N < 128 or N % 2:
        raise DomainError("N must be even and >= 128")
    if delta < 0:
        raise DomainError("delta must be >= 0")
    if delta == 0 and _distance_to_spectrum(lam) == 0:
        raise DomainError("delta = 0 needs lam outside [0, 6]")
    M = N // 2
    if not 0 <= L <= M:
        raise DomainError("box radius must satisfy 0 <= L <= N/2")
    reg = max(delta, _distance_to_spectrum(lam))
    if reg < resolution_threshold(N):
        warnings.warn(f"delta={delta:g} under-resolved at N={N} (threshold {resolution_threshold(N):.3g})",
                      RuntimeWarning, stacklevel=2)
    k = np.arange(M + 1)
    c = np.cos(np.pi * k / M)
    w = np.full(M + 1, 2.0)
    w[0] = w[M] = 1.0
    C = np.cos(np.pi * np.outer(np.arange(L + 1), k) / M) * w
    base = (3.0 - lam) - c[:, None] - c[None, :]
    out = np.zeros((L + 1,) * 3, complex)
    for s0 in range(0, M + 1, slab):
        c3 = c[s0:s0 + slab]
        f = 1.0 / (base[:, :, None] - c3[None, None, :] - 1j * delta)
        g = np.tensordot(C, f, axes=(1, 0))
        g = np.tensordot(g, C, axes=(1, 1))
        out += np.tensordot(g, C[:, s0:s0 + slab], axes=(1, 1))
    octant = out / float(N) ** 3
    idx = np.abs(np.arange(-L, L + 1))
    vals = octant[np.ix_(idx, idx, idx)]
    return LatticeKernelField(int(L), vals, lam, delta, {"N": N})


@dataclass
class Extrapolation:
    field: LatticeKernelField
    residual: float
    flagged: np.ndarray
    deltas: tuple


def _neville0(xs, ys):
    """Value at 0 of the interpolating polynomial through (xs, ys) along axis 0."""
    xs = list(xs)
    P = [np.array(y, complex) for y in ys]
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            P[i] = (xs[i + m] * P[i] - xs[i] * P[i + 1]) / (xs[i + m] - xs[i])
    return P[0]


def extrapolate_delta(lam, deltas, L=8, N=1024):
    """Polynomial (Richardson) extrapolation of R(lam + i delta) to delta = 0.

    The residual is the max over sites of the change between the
    extrapolants from all deltas and from all but the largest, relative to
    the largest value in the box.  Sites whose successive extrapolants do not
    shrink are flagged.
    """
    deltas = tuple(float(d) for d in deltas)
    if len(deltas) < 3:
        raise DomainError("need at least 3 deltas")
    if any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise DomainError("deltas must be positive and strictly decreasing")
    vals = [resolvent_kernel(lam, d, L, N).values for d in deltas]
    full = _neville0(deltas, vals)
    drop = _neville0(deltas[1:], vals[1:])
    drop2 = _neville0(deltas[2:], vals[2:]) if len(deltas) > 3 else vals[-1]
    scale = np.max(np.abs(full))
    residual = float(np.max(np.abs(full - drop)) / scale)
    d1 = np.abs(full - drop)
    d2 = np.abs(drop - drop2)
    flagged = np.argwhere((d1 > d2) & (d1 > 1e-12 * scale)) - L
    fld = LatticeKernelField(int(L), full, float(lam), 0.0, {"N": N, "deltas": deltas})
    return Extrapolation(fld, residual, flagged, deltas)


def default_deltas(N, n=6, top=2.0):
    lo = resolution_threshold(N) * 1.05
    return tuple(np.linspace(top * lo * 1.5, lo, n))


def plemelj_check(lam, L=8, N=1024, deltas=None, resolution=512):
    """Compare Im R(lam + i0) with pi E'(lam) on the box.

    With R = (H - z)^-1, Im R(lam + i0) = +pi E'(lam); the opposite
    orientation (z - H)^-1 carries -pi.  Returns the relative error against
    the box maximum of pi |E'|.
    """
    ext = extrapolate_delta(lam, deltas or default_deltas(N), L, N)
    E = spectral_kernel_box(lam, L, resolution)
    imR = ext.field.values.imag
    err = float(np.max(np.abs(imR - np.pi * E)) / np.max(np.abs(np.pi * E)))
    return err, ext, E


# Hoelder continuity in the spectral parameter

def holder_exponent(delta_param):
    """beta = (1/p - 1) delta with 1/p - 1/p' = 1/(7/4 - delta) and 1/p + 1/p' = 1."""
    d = Fraction(delta_param) if isinstance(delta_param, (int, Fraction, str)) else delta_param
    if not 0 < d <= 1:
        raise DomainError("delta_param must lie in (0, 1]")
    diff = 1 / (Fraction(7, 4) - d) if isinstance(d, Fraction) else 1.0 / (1.75 - d)
    inv_p = (1 + diff) / 2
    return (inv_p - 1) * d, inv_p


@dataclass
class HolderResult:
    lam: float
    mu: float
    difference: float
    beta: object
    constant: float
    bound: float
    satisfied: bool
    log_ratio: float


def _check_holder_params(lam, mu):
    for v in (lam, mu):
        if not 0 < v < 6:
            raise DomainError("spectral parameters must lie in (0, 6)")
        _guard(v, (2.0, 3.0, 4.0), 0.05)
    if abs(lam - mu) > 0.1 + 1e-12:
        raise DomainError("|lam - mu| must be <= 0.1")


def limiting_resolvent(lam, L=8, N=1024, deltas=None):
    return extrapolate_delta(lam, deltas or default_deltas(N), L, N).field


def holder_check(lam, mu, delta_param=1, L=8, N=1024, constant=None, reference=None):
    """max_x |R(lam + i0) - R(mu + i0)| against C |lam - mu|^beta."""
    _check_holder_params(lam, mu)
    beta, _ = holder_exponent(delta_param)
    if lam == mu:
        return HolderResult(lam, mu, 0.0, beta, constant or 0.0, 0.0, True, float("-inf"))
    A = reference if reference is not None else limiting_resolvent(lam, L, N).values
    B = limiting_resolvent(mu, L, N).values
    diff = float(np.max(np.abs(A - B)))
    sep = abs(lam - mu)
    C = diff / sep ** float(beta) if constant is None else constant
    bound = C * sep ** float(beta)
    return HolderResult(lam, mu, diff, beta, C, bound, bool(diff <= bound * (1 + 1e-12)),
                        float(np.log(diff / bound)) if bound > 0 else float("inf"))


def holder_scan(lam=2.4, separations=(0.1, 0.05, 0.025), delta_param=1, L=8, N=1024):
    """Calibrate C at the largest separation, then test the smaller ones."""
    seps = sorted(separations, reverse=True)
    ref = limiting_resolvent(lam, L, N).values
    first = holder_check(lam, lam + seps[0], delta_param, L, N, reference=ref)
    out = [first]
    for s in seps[1:]:
        out.append(holder_check(lam, lam + s, delta_param, L, N, constant=first.constant, reference=ref))
    return out
