"""Dispersive kernels, homogeneous scaling and Strichartz admissibility.

G_t(x) = int exp(i (x.xi + t p(xi))) beta(xi) dxi

with beta a smooth annulus cutoff supported in 1/2 <= |xi| <= 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import airy

from .errors import DomainError
from .fields import FunctionField, Polynomial2, ScalarField2, flat_top
from .oscillatory import OscillatorySpec, oracle_integral

T_MAX = 1e5
PARSEVAL_L = 8.0


class Symbol2:
    """Real symbol p on R^2 minus the origin.

    Parameters
    ----------
    field : ScalarField2
        Evaluates p and its partial derivatives.
    mu : float or None
        Degree of homogeneity, None for inhomogeneous symbols.
    separable : tuple or None
        ``((c1, k1), (c2, k2))`` when p = c1 xi1^k1 + c2 xi2^k2 with k in {2, 3}.
    orders : tuple or None
        ``(mu, nu)`` for a perturbed symbol p_mu + p_nu.
    principal, lower : Symbol2 or None
        The two parts of a perturbed symbol.
    """

    def __init__(self, field, mu=None, name="", separable=None, orders=None, principal=None,
                 lower=None):
        self.field = field
        self.mu = None if mu is None else float(mu)
        self.name = name
        self.separable = separable
        self.orders = orders
        self.principal = principal
        self.lower = lower
        if self.mu is not None:
            if self.mu <= 0:
                raise DomainError("homogeneity degree must be positive")
            err = homogeneity_defect(self)
            if err > 1e-9:
                raise DomainError(f"symbol is not {self.mu:g}-homogeneous (defect {err:.2e})")

    def __call__(self, xi1, xi2):
        return self.field(xi1, xi2)

    def partial(self, i, j, xi1, xi2):
        return self.field.partial(i, j, xi1, xi2)

    @property
    def homogeneous(self):
        return self.mu is not None

    def phase(self, t, x):
        """t p(xi) + x.xi as a ScalarField2."""
        x1, x2 = float(x[0]), float(x[1])
        if isinstance(self.field, Polynomial2):
            return self.field.scaled(t).tilted(x1, x2)
        f = self.field
        return FunctionField(lambda a, b: t * f(a, b) + x1 * a + x2 * b, step=1e-4)

    def rescaled(self, N):
        """p_N(xi) = p_mu(xi) + p_nu(N xi) / N^mu for a perturbed symbol."""
        if self.orders is None:
            raise DomainError("rescaling needs a perturbed symbol")
        mu = self.orders[0]
        P, Q = self.principal, self.lower
        return lambda a, b: P(a, b) + Q(N * np.asarray(a), N * np.asarray(b)) / N ** mu


def _test_points(n=64, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.5, 2.0, n)
    th = rng.uniform(0, 2 * np.pi, n)
    return r * np.cos(th), r * np.sin(th)


def homogeneity_defect(symbol):
    """max |p(2 xi) - 2^mu p(xi)| / |p(2 xi)| over test points 1/2 < |xi| < 2."""
    a, b = _test_points()
    p2 = symbol(2 * a, 2 * b)
    p1 = symbol(a, b)
    den = np.maximum(np.abs(p2), 1e-300)
    return float(np.max(np.abs(p2 - 2 ** symbol.mu * p1) / den))


def _norm_field():
    def f(a, b):
        return np.hypot(a, b)

    return FunctionField(f, step=1e-4)


def catalog_symbols():
    par = Symbol2(Polynomial2.from_dict({(2, 0): 1.0, (0, 2): 1.0}), mu=2, name="paraboloid",
                  separable=((1.0, 2), (1.0, 2)))
    cub = Symbol2(Polynomial2.from_dict({(3, 0): 1.0, (0, 3): 1.0}), mu=3, name="cubic-sum",
                  separable=((1.0, 3), (1.0, 3)))
    low = Symbol2(_norm_field(), name="norm")
    pc = cub.field
    nf = low.field
    per = Symbol2(FunctionField(lambda a, b: pc(a, b) + nf(a, b), step=1e-4), name="perturbed-cubic",
                  orders=(3.0, 1.0), principal=cub, lower=low)
    return {s.name: s for s in (par, cub, per)}


def get_symbol(name):
    syms = catalog_symbols()
    if name not in syms:
        from .errors import UnknownSurfaceError
        raise UnknownSurfaceError(f"unknown symbol {name!r}; known: {sorted(syms)}")
    return syms[name]


class AnnulusCutoff(FunctionField):
    """beta(xi / scale) with beta = chi(|xi|) - chi(2|xi|), chi = 1 on |xi| <= 1, 0 beyond 2."""

    def __init__(self, scale=1.0):
        self.scale = float(scale)

        def f(a, b):
            r = np.hypot(a, b) / self.scale
            return flat_top(r / 2.0, 0.5) - flat_top(r, 0.5)

        super().__init__(f, step=1e-4 * self.scale, support_radius=2.0 * self.scale)

    @property
    def inner_radius(self):
        return 0.5 * self.scale


def _check_t(t):
    if abs(t) > T_MAX:
        raise DomainError("|t| must be <= 1e5")


def kernel_oracle(symbol, t, x, beta=None, rtol=1e-10, **kw):
    """G_t(x) by brute-force adaptive 2D quadrature."""
    _check_t(t)
    beta = beta or AnnulusCutoff()
    r = beta.support_radius
    spec = OscillatorySpec(symbol.phase(t, x), beta, np.array([]), (0.0, 0.0), r, check_window=False)
    return complex(oracle_integral(spec, 1.0, rtol=rtol, **kw))


# exact one-dimensional kernels K(s) = int exp(i (s xi + c xi^k)) dxi

def kernel_1d(s, c, k):
    s = np.asarray(s, float)
    if c == 0:
        raise DomainError("zero coefficient")
    if k == 2:
        a = abs(c)
        K = np.sqrt(np.pi / a) * np.exp(1j * np.pi / 4) * np.exp(-1j * s * s / (4 * a))
        return K if c > 0 else np.conj(K)
    if k == 3:
        a = abs(c)
        sc = (3 * a) ** (-1.0 / 3.0)
        ss = s if c > 0 else -s
        return (2 * np.pi * sc * airy(ss * sc)[0]).astype(complex)
    raise DomainError("only k in {2, 3} has a closed-form kernel")


@lru_cache(maxsize=8)
def _beta_hat(M=1024, L=PARSEVAL_L):
    d = 2 * L / M
    xi = (np.arange(M) - M // 2) * d
    B = AnnulusCutoff()(xi[:, None], xi[None, :])
    bh = d * d * np.fft.fft2(np.fft.ifftshift(B))
    eta = 2 * np.pi * np.fft.fftfreq(M, d)
    bh.setflags(write=False)
    eta.setflags(write=False)
    return eta, bh, 2 * np.pi / (2 * L)


def kernel_parseval(symbol, t, points, M=1024, L=PARSEVAL_L):
    """G_t at an (n, 2) array of points for a separable symbol.

    Uses G = (2 pi)^-2 int beta^(eta) K1(x1 + eta1) K2(x2 + eta2) d eta with
    exact Fresnel/Airy kernels, so no oscillation has to be resolved.  The
    eta sum is a trapezoid rule whose aliasing error decays like beta^ at
    about 4 |t| L, so it is accurate for |t| L >= 100.
    """
    if symbol.separable is None:
        raise DomainError("Parseval engine needs a separable symbol")
    _check_t(t)
    if t == 0:
        raise DomainError("t = 0 has no kernel; use the oracle")
    pts = np.atleast_2d(np.asarray(points, float))
    eta, bh, de = _beta_hat(M, L)
    (c1, k1), (c2, k2) = symbol.separable
    out = np.empty(len(pts), complex)
    chunk = 256
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        K1 = kernel_1d(p[:, :1] + eta[None, :], t * c1, k1)
        K2 = kernel_1d(p[:, 1:] + eta[None, :], t * c2, k2)
        out[s:s + chunk] = np.einsum("ij,ij->i", K1 @ bh, K2)
    return out * de * de / (4 * np.pi ** 2)


def dispersive_kernel(symbol, t, x, beta=None, method="auto"):
    """G_t(x) for one point x."""
    x = np.asarray(x, float)
    # the Parseval sum aliases at small |t|; see kernel_parseval
    use_parseval = method == "parseval" or (method == "auto" and symbol.separable is not None
                                            and beta is None and abs(t) * PARSEVAL_L >= 100)
    if use_parseval:
        return complex(kernel_parseval(symbol, t, x[None, :])[0])
    return kernel_oracle(symbol, t, x, beta)


def scaling_identity_check(symbol, N, t, x, rtol=1e-9):
    """Relative defect of G^(N annulus)_t(x) = N^2 G_(N^mu t)(N x), both by quadrature.

    The two sides use different Gauss-Legendre orders: with N a power of two
    identical rules would map onto each other exactly and the check would be
    vacuous.
    """
    if not symbol.homogeneous:
        raise DomainError("scaling identity needs a homogeneous symbol")
    if N == 1:
        return 0.0
    x = np.asarray(x, float)
    lhs = kernel_oracle(symbol, t, x, AnnulusCutoff(N), rtol=rtol, n_gl=6)
    rhs = N ** 2 * kernel_oracle(symbol, N ** symbol.mu * t, N * x, AnnulusCutoff(1.0), rtol=rtol,
                                 n_gl=7)
    return abs(lhs - rhs) / max(abs(lhs), 1e-12)


def candidate_points(symbol, t, n=64):
    """Stationary images x = -t grad p(xi) of an n x n polar grid on the
    annulus, plus shifted images of the zero-curvature lines.
    """
    r = np.linspace(0.5, 2.0, n)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    R, T = np.meshgrid(r, th)
    a, b = (R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()
    g1 = symbol.partial(1, 0, a, b)
    g2 = symbol.partial(0, 1, a, b)
    pts = [np.column_stack([-t * g1, -t * g2])]
    if symbol.separable is not None:
        # Airy maximum sits at s = -1.0188 (3 c t)^(1/3) off the fold caustic
        for j, (c, k) in enumerate(symbol.separable):
            if k != 3:
                continue
            s0 = -1.0188 * (3 * abs(c) * t) ** (1 / 3) * np.sign(c)
            other = symbol.separable[1 - j]
            xi = np.concatenate([-r[::-1], r])
            line = -t * other[0] * other[1] * xi ** (other[1] - 1)
            for shift in (0.0, s0):
                q = np.zeros((xi.size, 2))
                q[:, 1 - j] = line
                q[:, j] = shift
                pts.append(q)
    return np.vstack(pts)


def sup_kernel(symbol, t, n=64, refine=8):
    """max |G_t(x)| over the candidate set, polished by local searches."""
    if symbol.separable is None:
        raise DomainError("sup over x is implemented for separable symbols")
    pts = candidate_points(symbol, t, n)
    vals = np.abs(kernel_parseval(symbol, t, pts, M=512))
    order = np.argsort(vals)[::-1]
    best, best_x = 0.0, None
    seen = []
    for i in order:
        p = pts[i]
        if any(np.linalg.norm(p - q) < 2.0 for q in seen):
            continue
        seen.append(p)
        res = minimize(lambda z: -abs(kernel_parseval(symbol, t, z[None, :])[0]), p,
                       method="Nelder-Mead", options={"xatol": 1e-3, "fatol": 1e-14, "maxiter": 200})
        if -res.fun > best:
            best, best_x = -res.fun, res.x
        if len(seen) >= refine:
            break
    return best, best_x


@dataclass
class KernelScan:
    t: np.ndarray
    sup: np.ndarray
    argmax: np.ndarray
    symbol: str = ""

    def envelope(self, exponent):
        return self.sup * (1 + self.t) ** exponent

    def envelope_ratio(self, exponent):
        e = self.envelope(exponent)
        return float(e.max() / e.min())

    def slope(self):
        return float(np.polyfit(np.log(self.t), np.log(self.sup), 1)[0])

    def rows(self):
        return [(float(a), float(b)) for a, b in zip(self.t, self.sup)]


def kernel_scan(symbol, ts, n=64, refine=8):
    ts = np.asarray(ts, float)
    res = [sup_kernel(symbol, t, n, refine) for t in ts]
    return KernelScan(ts, np.array([r[0] for r in res]), np.array([r[1] for r in res]), symbol.name)


def perturbation_defect(symbol, Ns, n=128):
    """sup over the annulus of |p_N - p_mu| for each N."""
    r = np.linspace(0.5, 2.0, n)
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    R, T = np.meshgrid(r, th)
    a, b = R * np.cos(T), R * np.sin(T)
    P = symbol.principal(a, b)
    return np.array([np.max(np.abs(symbol.rescaled(N)(a, b) - P)) for N in Ns])


# Strichartz admissibility

VARIANTS = {
    "homogeneous_thm12": (Fraction(5, 6), Fraction(5, 12)),
    "perturbed_thm13": (Fraction(3, 4), Fraction(3, 8)),
}


def _inverse(e):
    if isinstance(e, str):
        if e.strip().lower() in ("inf", "infinity", "oo"):
            return Fraction(0)
        e = Fraction(e.strip())
    if isinstance(e, float):
        if np.isinf(e):
            return Fraction(0)
        e = Fraction(e).limit_denominator(10 ** 9)
    e = Fraction(e)
    if e < 2:
        raise DomainError("Lebesgue exponents must be >= 2")
    return 1 / e


@dataclass(frozen=True)
class StrichartzQuery:
    p_exp: object
    q_exp: object
    variant: str = "homogeneous_thm12"
    mu: object = 3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown variant {self.variant!r}")
        _inverse(self.p_exp)
        _inverse(self.q_exp)


def strichartz_admissible(query):
    """(admissible, s) with the line 1/p + c/q <= rhs of the variant and
    s = 1 - 2/q - mu/p.
    """
    ip, iq = _inverse(query.p_exp), _inverse(query.q_exp)
    c, rhs = VARIANTS[query.variant]
    ok = ip + c * iq <= rhs
    mu = query.mu
    mu = Fraction(mu) if isinstance(mu, (int, Fraction)) else mu
    s = 1 - 2 * iq - mu * ip
    return bool(ok), s


def strichartz_report(query):
    ok, s = strichartz_admissible(query)
    return {"p": str(query.p_exp), "q": str(query.q_exp), "variant": query.variant,
            "admissible": ok, "s": str(s) if isinstance(s, Fraction) else float(s)}
