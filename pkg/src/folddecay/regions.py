"""Exact rational membership tests for restriction-extension exponent regions.

Points are (1/p, 1/q) in [0, 1]^2 held as ``fractions.Fraction``.  Floats
are rejected: boundary points such as 61/70 are not representable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

from .errors import DomainError

F = Fraction

B = (F(7, 10), F(9, 70))
C = (F(7, 10), F(0))
B_PRIME = (F(61, 70), F(3, 10))
C_PRIME = (F(1), F(3, 10))

P_MIN = F(7, 10)
Q_MAX = F(3, 10)
GAP = F(4, 7)

LABELS = ("Strong", "WeakI", "WeakII", "RestrictedWeak", "Outside")


def as_rational(x):
    """Coerce ints, Fractions and strings like '7/10' to Fraction."""
    if isinstance(x, bool):
        raise DomainError("boolean is not a rational")
    if isinstance(x, Rational):
        return F(x)
    if isinstance(x, str):
        try:
            return F(x.strip())
        except ValueError as exc:
            raise DomainError(f"not a rational: {x!r}") from exc
    raise DomainError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class ExponentPoint:
    inv_p: Fraction
    inv_q: Fraction

    def __post_init__(self):
        p, q = as_rational(self.inv_p), as_rational(self.inv_q)
        if not (0 <= p <= 1 and 0 <= q <= 1):
            raise DomainError("exponent point must lie in [0,1]^2")
        object.__setattr__(self, "inv_p", p)
        object.__setattr__(self, "inv_q", q)

    def as_tuple(self):
        return (self.inv_p, self.inv_q)

    def dual(self):
        return dual_point(self)

    def __str__(self):
        return f"({self.inv_p}, {self.inv_q})"


@dataclass(frozen=True)
class RegionVerdict:
    label: str
    binding: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {"label": self.label, "binding": list(self.binding)}


def _pt(point):
    if isinstance(point, ExponentPoint):
        return point
    return ExponentPoint(*point)


def on_half_open_segment(point, start, end):
    """True iff point lies on the segment (start, end]: exact collinearity and
    parameter t in (0, 1].
    """
    x, y = _pt(point).as_tuple()
    (x0, y0), (x1, y1) = start, end
    dx, dy = x1 - x0, y1 - y0
    if (x - x0) * dy - (y - y0) * dx != 0:
        return False
    if dx != 0:
        t = (x - x0) / dx
    elif dy != 0:
        t = (y - y0) / dy
    else:
        return False
    return 0 < t <= 1


def strong_constraints(inv_p, inv_q):
    """Status of the three strong-type inequalities as (name, holds, tight)."""
    d = inv_p - inv_q
    return [
        ("1/p > 7/10", inv_p > P_MIN, inv_p == P_MIN),
        ("1/q < 3/10", inv_q < Q_MAX, inv_q == Q_MAX),
        ("1/p - 1/q >= 4/7", d >= GAP, d == GAP),
    ]


def pentagon_membership(point):
    """Label a point of the restriction-extension diagram."""
    pt = _pt(point)
    cons = strong_constraints(pt.inv_p, pt.inv_q)
    binding = tuple(name for name, ok, tight in cons if tight or not ok)
    if all(ok for _, ok, _ in cons):
        return RegionVerdict("Strong", binding)
    xy = pt.as_tuple()
    if xy in (B, B_PRIME):
        return RegionVerdict("RestrictedWeak", binding)
    if on_half_open_segment(pt, B, C):
        return RegionVerdict("WeakII", binding)
    if on_half_open_segment(pt, B_PRIME, C_PRIME):
        return RegionVerdict("WeakI", binding)
    return RegionVerdict("Outside", binding)


def dual_point(point):
    """(1/p, 1/q) -> (1 - 1/q, 1 - 1/p)."""
    x, y = _pt(point).as_tuple()
    return ExponentPoint(1 - y, 1 - x)


def duality_maps_segments():
    """The dual map carries (B, C] onto (B', C'] with matching endpoints."""
    return (dual_point(B).as_tuple() == B_PRIME and dual_point(C).as_tuple() == C_PRIME)


def thm15_conditions(inv_p1, inv_p2, inv_q, alpha):
    """Exponent conditions for the two-space resolvent bound.

    Returns (ok, failed) where ``failed`` lists the violated constraints.
    """
    p1, p2, q, a = (as_rational(v) for v in (inv_p1, inv_p2, inv_q, alpha))
    for v in (p1, p2, q):
        if not 0 <= v <= 1:
            raise DomainError("exponents must lie in [0, 1]")
    if a <= 0:
        raise DomainError("alpha must be positive")
    failed = [name for name, ok, _ in strong_constraints(p1, q) if not ok]
    d = p2 - q
    if d < 0:
        failed.append("1/p2 - 1/q >= 0")
    if a <= 3:
        if d > a / 3:
            failed.append("1/p2 - 1/q <= alpha/3")
        if (q, p2) == (F(0), a / 3):
            failed.append("(1/q, 1/p2) != (0, alpha/3)")
        if (q, p2) == (1 - a / 3, F(1)):
            failed.append("(1/q, 1/p2) != (1 - alpha/3, 1)")
    return (not failed, failed)
