"""Small numerical utilities: bracketed Newton, Gauss-Legendre panels, series."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def safeguarded_newton(F, dF, lo, hi, x0=None, maxit=50, ftol=1e-13, xtol=1e-15):
    """Vectorized Newton iteration with bisection safeguard.

    ``F`` must be increasing on each bracket ``[lo, hi]`` with
    ``F(lo) <= 0 <= F(hi)``.  Returns ``(x, converged)``.
    """
    lo = np.array(lo, float, copy=True)
    hi = np.array(hi, float, copy=True)
    x = 0.5 * (lo + hi) if x0 is None else np.clip(np.array(x0, float), lo, hi)
    conv = np.zeros(x.shape, bool)
    for _ in range(maxit):
        f = F(x)
        d = dF(x)
        conv = np.abs(f) <= ftol
        neg = f < 0
        lo = np.where(neg, x, lo)
        hi = np.where(neg, hi, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - f / d
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        small = np.abs(xn - x) <= xtol * np.maximum(1.0, np.abs(x))
        x = np.where(conv, x, xn)
        conv = conv | small
        if conv.all():
            break
    return x, conv


@lru_cache(maxsize=64)
def gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(edges, n):
    """Composite Gauss-Legendre nodes and weights on consecutive panels."""
    edges = np.asarray(edges, float)
    x, w = gauss_legendre(n)
    a = edges[:-1, None]
    b = edges[1:, None]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return (mid + half * x).ravel(), (half * w).ravel()


def phase_panels(a, b, rate, budget, max_width, n_probe=4001):
    """Panel edges on [a, b] such that each panel carries at most ``budget``
    radians of phase, estimated from ``rate(x) >= |d phase / dx|``, and is no
    wider than ``max_width``.
    """
    xs = np.linspace(a, b, n_probe)
    r = np.maximum(np.asarray(rate(xs), float), 0.0)
    # conservative: max of rate over each probe interval
    rr = np.maximum(r[:-1], r[1:])
    dx = np.diff(xs)
    per = rr * dx / budget + dx / max_width
    cum = np.concatenate([[0.0], np.cumsum(per)])
    n_pan = max(int(np.ceil(cum[-1])), 1)
    targets = np.linspace(0.0, cum[-1], n_pan + 1)
    edges = np.interp(targets, cum, xs)
    edges[0], edges[-1] = a, b
    return edges


def series_mul(a, b, order):
    return np.convolve(a, b)[: order + 1]


def implicit_jets(Fd, order):
    """Taylor coefficients of the implicit solution of F(u0+s, v0+dv(s)) = 0.

    ``Fd[a][b]`` holds d^a_u d^b_v F at the base point, for a+b <= order.
    Returns c with dv(s) = sum_k c[k] s^k, c[0] = 0.
    """
    from math import factorial

    c = np.zeros(order + 1)
    F01 = Fd[0][1]
    for n in range(1, order + 1):
        dv = c.copy()
        acc = np.zeros(order + 1)
        pw = np.zeros(order + 1)
        pw[0] = 1.0
        for b in range(order + 1):
            for a in range(order + 1 - b):
                val = Fd[a][b] if a < len(Fd) and b < len(Fd[a]) else 0.0
                if val == 0.0:
                    continue
                term = np.zeros(order + 1)
                term[a:] = pw[: order + 1 - a]
                acc += val / (factorial(a) * factorial(b)) * term
            pw = series_mul(pw, dv, order)
        c[n] = -acc[n] / F01
    return c
