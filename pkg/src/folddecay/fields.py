"""Bivariate scalar fields with partial derivatives.

Two derivative sources are provided: exact polynomial differentiation
(`Polynomial2`) and Richardson-extrapolated central differences
(`FunctionField`).  Every field is vectorized over numpy arrays.
"""
from __future__ import annotations

from math import comb

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import convolve2d

# Step multipliers for central differences, indexed by total derivative
# order.  Higher orders need larger steps to keep round-off in check.
_FD_STEP_SCALE = {1: 1.0, 2: 1.0, 3: 3.2, 4: 10.0, 5: 32.0, 6: 64.0}


class ScalarField2:
    """Interface for f(u, v) with partial derivatives.

    Subclasses implement ``__call__`` and ``partial``.
    """

    derivative_source = "analytic"
    support_radius = np.inf

    def __call__(self, u, v):
        raise NotImplementedError

    def partial(self, i, j, u, v):
        """Return d^(i+j) f / du^i dv^j evaluated at (u, v)."""
        raise NotImplementedError

    def gradient(self, u, v):
        return np.array([self.partial(1, 0, u, v), self.partial(0, 1, u, v)])

    def hessian(self, u, v):
        huu = self.partial(2, 0, u, v)
        huv = self.partial(1, 1, u, v)
        hvv = self.partial(0, 2, u, v)
        return np.array([[huu, huv], [huv, hvv]])

    def pullback(self, origin, matrix, sign=1.0, subtract_tangent=True):
        """Return g(s, t) = sign*(f(o + M(s,t)) - f(o) - grad f(o).M(s,t))."""
        o = np.asarray(origin, float)
        M = np.asarray(matrix, float)
        f0 = float(self(o[0], o[1])) if subtract_tangent else 0.0
        g0 = self.gradient(o[0], o[1]).astype(float) if subtract_tangent else np.zeros(2)
        lin = g0 @ M
        base = self

        def g(s, t):
            s = np.asarray(s, float)
            t = np.asarray(t, float)
            uu = o[0] + M[0, 0] * s + M[0, 1] * t
            vv = o[1] + M[1, 0] * s + M[1, 1] * t
            return sign * (base(uu, vv) - f0 - lin[0] * s - lin[1] * t)

        scale = getattr(self, "step", 1e-4) / max(np.linalg.norm(M, 2), 1e-300)
        return FunctionField(g, step=scale)


class Polynomial2(ScalarField2):
    """Polynomial sum_{ij} C[i, j] u^i v^j with exact partials."""

    derivative_source = "analytic"

    def __init__(self, coef):
        C = np.atleast_2d(np.asarray(coef, dtype=float))
        self.coef = C
        self._cache = {}

    @classmethod
    def from_dict(cls, terms):
        """Build from ``{(i, j): c}``."""
        if not terms:
            return cls(np.zeros((1, 1)))
        di = max(i for i, _ in terms) + 1
        dj = max(j for _, j in terms) + 1
        C = np.zeros((di, dj))
        for (i, j), c in terms.items():
            if i < 0 or j < 0:
                raise ValueError("negative exponent")
            C[i, j] += float(c)
        return cls(C)

    def to_dict(self):
        return {(int(i), int(j)): float(self.coef[i, j])
                for i, j in zip(*np.nonzero(self.coef))}

    @property
    def degree(self):
        nz = np.argwhere(self.coef != 0)
        return int(nz.sum(axis=1).max()) if len(nz) else 0

    def __call__(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return P.polyval2d(u, v, self.coef)

    def _dcoef(self, i, j):
        key = (i, j)
        if key not in self._cache:
            C = self.coef
            if i >= C.shape[0] or j >= C.shape[1]:
                D = np.zeros((1, 1))
            else:
                D = P.polyder(P.polyder(C, i, axis=0), j, axis=1)
            self._cache[key] = D
        return self._cache[key]

    def partial(self, i, j, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return P.polyval2d(u, v, self._dcoef(i, j))

    def derivative(self, i, j):
        return Polynomial2(self._dcoef(i, j))

    def grid(self, u, v):
        """Values on the tensor grid u x v, shape (len(u), len(v))."""
        return P.polygrid2d(u, v, self.coef)

    def v_polynomials(self, u):
        """Coefficients of v -> f(u, v) for each u; shape (len(u), deg_v + 1)."""
        u = np.atleast_1d(np.asarray(u, float))
        return np.atleast_2d(P.polyval(u, self.coef)).reshape(self.coef.shape[1], u.size).T

    def tilted(self, d1, d2):
        """Return f + d1*u + d2*v."""
        C = np.zeros((max(self.coef.shape[0], 2), max(self.coef.shape[1], 2)))
        C[: self.coef.shape[0], : self.coef.shape[1]] = self.coef
        C[1, 0] += d1
        C[0, 1] += d2
        return Polynomial2(C)

    def scaled(self, c):
        return Polynomial2(c * self.coef)

    def pullback(self, origin, matrix, sign=1.0, subtract_tangent=True):
        o = np.asarray(origin, float)
        M = np.asarray(matrix, float)
        # x = o0 + M00 s + M01 t, y = o1 + M10 s + M11 t as 2D coefficient arrays
        X = np.array([[o[0], M[0, 1]], [M[0, 0], 0.0]])
        Y = np.array([[o[1], M[1, 1]], [M[1, 0], 0.0]])
        C = self.coef
        deg = C.shape[0] + C.shape[1]
        out = np.zeros((deg, deg))
        xp = [np.ones((1, 1))]
        for _ in range(1, C.shape[0]):
            xp.append(convolve2d(xp[-1], X))
        yp = [np.ones((1, 1))]
        for _ in range(1, C.shape[1]):
            yp.append(convolve2d(yp[-1], Y))
        for i in range(C.shape[0]):
            for j in range(C.shape[1]):
                if C[i, j] == 0.0:
                    continue
                T = convolve2d(xp[i], yp[j])
                out[: T.shape[0], : T.shape[1]] += C[i, j] * T
        if subtract_tangent:
            out[0, 0] = 0.0
            out[1, 0] = 0.0
            out[0, 1] = 0.0
        out = sign * out
        # trim trailing zero rows/cols
        nz = np.argwhere(out != 0)
        if len(nz) == 0:
            return Polynomial2(np.zeros((1, 1)))
        return Polynomial2(out[: nz[:, 0].max() + 1, : nz[:, 1].max() + 1])


def _central_stencil(n):
    offs = np.arange(n + 1) - n / 2.0
    w = np.array([(-1) ** (n - k) * comb(n, k) for k in range(n + 1)], float)
    return offs, w


class FunctionField(ScalarField2):
    """Field from a vectorized callable; partials by central differences.

    Parameters
    ----------
    f : callable
        ``f(u, v)`` accepting broadcastable arrays.
    step : float
        Base difference step.  Orders 3 and higher use larger multiples.
    """

    derivative_source = "finite_difference"

    def __init__(self, f, step=1e-4, support_radius=np.inf):
        self.f = f
        self.step = float(step)
        self.support_radius = support_radius

    def __call__(self, u, v):
        return self.f(np.asarray(u, float), np.asarray(v, float))

    def _diff(self, i, j, u, v, s):
        ou, wu = _central_stencil(i)
        ov, wv = _central_stencil(j)
        U = u[..., None, None] + ou[:, None] * s
        V = v[..., None, None] + ov[None, :] * s
        vals = self.f(U, V)
        return np.einsum("...kl,k,l->...", vals, wu, wv) / s ** (i + j)

    def partial(self, i, j, u, v):
        u = np.asarray(u, float)
        v = np.asarray(v, float)
        n = i + j
        if n == 0:
            return self(u, v)
        s = self.step * _FD_STEP_SCALE.get(n, 64.0)
        d1 = self._diff(i, j, u, v, s)
        d2 = self._diff(i, j, u, v, s / 2)
        return (4.0 * d2 - d1) / 3.0


def flat_top(x, plateau=0.5):
    """Smooth radial profile: 1 on [0, plateau], 0 for x >= 1."""
    x = np.asarray(x, float)
    s = np.clip((x - plateau) / (1.0 - plateau), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s < 1, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
        b = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        out = a / (a + b)
    return np.where(s <= 0, 1.0, np.where(s >= 1, 0.0, out))


class RadialBump(FunctionField):
    """Flat-top radial bump of the given support radius, value 1 at the center."""

    def __init__(self, radius, plateau=0.5, scale=1.0):
        self.radius = float(radius)
        self.plateau = float(plateau)
        self.scale = float(scale)

        def f(u, v):
            return self.scale * flat_top(np.hypot(u, v) / self.radius, self.plateau)

        super().__init__(f, step=1e-3 * self.radius, support_radius=self.radius)


class ZeroField(Polynomial2):
    def __init__(self, support_radius=0.0):
        super().__init__(np.zeros((1, 1)))
        self.support_radius = support_radius
