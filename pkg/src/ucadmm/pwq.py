"""Convex piecewise-quadratic functions of one variable.

A function is stored as ``n + 1`` sorted breakpoints and ``n`` coefficient
triples ``(q2, q1, q0)``; piece ``i`` is ``q2*p**2 + q1*p + q0`` on
``[xs[i], xs[i+1]]``. A degenerate function defined on a single point has two
equal breakpoints. Plain Python lists are used throughout because the
functions met in the single-unit recursion have a handful of pieces and the
operations run in tight loops.
"""

from __future__ import annotations

from bisect import bisect_right
from typing import Sequence

__all__ = [
    "PiecewiseQuadratic",
    "pwq_add",
    "pwq_min_over_window",
    "pwq_argmin",
]


class PiecewiseQuadratic:
    __slots__ = ("xs", "cs")

    def __init__(self, xs: Sequence[float], cs: Sequence[tuple[float, float, float]]):
        if len(xs) != len(cs) + 1 or not cs:
            raise ValueError("need n+1 breakpoints for n >= 1 pieces")
        self.xs = list(xs)
        self.cs = list(cs)

    @classmethod
    def quadratic(cls, lo: float, hi: float, q2: float = 0.0, q1: float = 0.0, q0: float = 0.0):
        if lo > hi:
            raise ValueError(f"empty domain [{lo}, {hi}]")
        return cls([lo, hi], [(q2, q1, q0)])

    @classmethod
    def point(cls, x: float, value: float = 0.0):
        return cls([x, x], [(0.0, 0.0, value)])

    @property
    def lo(self) -> float:
        return self.xs[0]

    @property
    def hi(self) -> float:
        return self.xs[-1]

    @property
    def pieces(self) -> list[tuple[float, float, float, float, float]]:
        """Pieces as ``(lo, hi, q2, q1, q0)`` tuples."""
        return [(self.xs[i], self.xs[i + 1]) + tuple(c) for i, c in enumerate(self.cs)]

    def __call__(self, p: float) -> float:
        xs = self.xs
        if p < xs[0] or p > xs[-1]:
            return float("inf")
        i = min(bisect_right(xs, p) - 1, len(self.cs) - 1)
        q2, q1, q0 = self.cs[i]
        return (q2 * p + q1) * p + q0

    def __repr__(self):
        body = ", ".join(
            f"[{a:.6g},{b:.6g}]:({q2:.6g},{q1:.6g},{q0:.6g})" for a, b, q2, q1, q0 in self.pieces
        )
        return f"PiecewiseQuadratic({body})"

    def add_quadratic(self, q2: float, q1: float, q0: float) -> "PiecewiseQuadratic":
        """Return ``self + (q2 p^2 + q1 p + q0)`` on the same domain."""
        return PiecewiseQuadratic(
            self.xs, [(a + q2, b + q1, c + q0) for a, b, c in self.cs]
        )

    def add_constant(self, value: float) -> "PiecewiseQuadratic":
        return PiecewiseQuadratic(self.xs, [(a, b, c + value) for a, b, c in self.cs])

    def restrict(self, lo: float, hi: float) -> "PiecewiseQuadratic | None":
        """Restriction to ``[lo, hi]``, or ``None`` when the overlap is empty."""
        xs = self.xs
        lo = max(lo, xs[0])
        hi = min(hi, xs[-1])
        if lo > hi:
            return None
        if lo == xs[0] and hi == xs[-1]:
            return self
        n = len(self.cs)
        i = min(bisect_right(xs, lo) - 1, n - 1)
        j = min(bisect_right(xs, hi) - 1, n - 1)
        # a piece starting exactly at hi contributes nothing unless the domain is a point
        if j > i and xs[j] == hi:
            j -= 1
        new_xs = [lo] + xs[i + 1 : j + 1] + [hi]
        return PiecewiseQuadratic(new_xs, self.cs[i : j + 1])

    def argmin(self) -> tuple[float, float]:
        """Leftmost global minimiser and minimum value (assumes convexity)."""
        xs, cs = self.xs, self.cs
        best_x = xs[0]
        best_v = float("inf")
        for i, (q2, q1, q0) in enumerate(cs):
            a, b = xs[i], xs[i + 1]
            if q2 > 0.0:
                x = -q1 / (2.0 * q2)
                x = a if x < a else (b if x > b else x)
            elif q1 < 0.0:
                x = b
            else:
                x = a
            val = (q2 * x + q1) * x + q0
            if val < best_v:
                best_v, best_x = val, x
            if x < b:
                # convex: later pieces cannot go lower
                break
        return best_x, best_v

    def argmin_on(self, lo: float, hi: float) -> tuple[float, float] | None:
        """Leftmost minimiser over ``[lo, hi]`` of a convex function."""
        lo = max(lo, self.xs[0])
        hi = min(hi, self.xs[-1])
        if lo > hi:
            return None
        m, _ = self.argmin()
        x = lo if m < lo else (hi if m > hi else m)
        return x, self(x)

    def min_over_window(self, down: float, up: float) -> "PiecewiseQuadratic":
        """``g(p) = min f(q)`` over ``q in [p - up, p + down]``.

        For convex ``f`` with leftmost minimiser ``m`` the result is ``f``
        left of ``m`` shifted left by ``down``, a flat segment at ``f(m)``
        on ``[m - down, m + up]``, and ``f`` right of ``m`` shifted right by
        ``up``.
        """
        if down < 0 or up < 0:
            raise ValueError("window sizes must be non-negative")
        if down == 0.0 and up == 0.0:
            return self
        xs, cs = self.xs, self.cs
        m, fm = self.argmin()
        new_xs: list[float] = []
        new_cs: list[tuple[float, float, float]] = []
        d = down
        for i, (q2, q1, q0) in enumerate(cs):
            a = xs[i]
            if a >= m:
                break
            b = xs[i + 1] if xs[i + 1] < m else m
            if b > a:
                if not new_xs:
                    new_xs.append(a - d)
                new_xs.append(b - d)
                new_cs.append((q2, 2.0 * q2 * d + q1, (q2 * d + q1) * d + q0))
        if not new_xs:
            new_xs.append(m - d)
        new_xs.append(m + up)
        new_cs.append((0.0, 0.0, fm))
        d = -up
        for i, (q2, q1, q0) in enumerate(cs):
            b = xs[i + 1]
            if b <= m:
                continue
            a = xs[i] if xs[i] > m else m
            if b > a:
                new_xs.append(b - d)
                new_cs.append((q2, 2.0 * q2 * d + q1, (q2 * d + q1) * d + q0))
        return PiecewiseQuadratic(new_xs, new_cs)

    def is_convex(self, rtol: float = 1e-9) -> bool:
        """Check per-piece convexity, continuity and monotone slope at joints."""
        xs, cs = self.xs, self.cs
        for q2, _, _ in cs:
            if q2 < 0:
                return False
        for i in range(1, len(cs)):
            x = xs[i]
            l2, l1, l0 = cs[i - 1]
            r2, r1, r0 = cs[i]
            left = (l2 * x + l1) * x + l0
            right = (r2 * x + r1) * x + r0
            scale = 1.0 + abs(left) + abs(right)
            if abs(left - right) > rtol * scale:
                return False
            dl = 2 * l2 * x + l1
            dr = 2 * r2 * x + r1
            if dr < dl - rtol * (1.0 + abs(dl) + abs(dr)):
                return False
        return all(xs[i] <= xs[i + 1] for i in range(len(cs)))

    def dominates(self, other: "PiecewiseQuadratic", atol: float = 0.0) -> bool:
        """True when ``self <= other + atol`` everywhere on ``other``'s domain
        and ``other``'s domain is contained in ``self``'s.
        """
        if other.xs[0] < self.xs[0] or other.xs[-1] > self.xs[-1]:
            return False
        diff = pwq_add(other, self.scaled(-1.0))
        for a, b, q2, q1, q0 in diff.pieces:
            lowest = min((q2 * a + q1) * a + q0, (q2 * b + q1) * b + q0)
            if q2 > 0:
                x = -q1 / (2 * q2)
                if a < x < b:
                    lowest = min(lowest, (q2 * x + q1) * x + q0)
            if lowest < -atol:
                return False
        return True

    def scaled(self, k: float) -> "PiecewiseQuadratic":
        return PiecewiseQuadratic(self.xs, [(k * a, k * b, k * c) for a, b, c in self.cs])


def pwq_add(f: PiecewiseQuadratic, g: PiecewiseQuadratic) -> PiecewiseQuadratic:
    """Pointwise sum on the intersection of the two domains."""
    lo = max(f.xs[0], g.xs[0])
    hi = min(f.xs[-1], g.xs[-1])
    if lo > hi:
        raise ValueError("domains are disjoint")
    if lo == hi:
        return PiecewiseQuadratic.point(lo, f(lo) + g(lo))
    f = f.restrict(lo, hi)
    g = g.restrict(lo, hi)
    fx, gx = f.xs, g.xs
    xs = [lo]
    cs = []
    i = j = 0
    nf, ng = len(f.cs), len(g.cs)
    while i < nf and j < ng:
        end = fx[i + 1] if fx[i + 1] < gx[j + 1] else gx[j + 1]
        if end > xs[-1]:
            a2, a1, a0 = f.cs[i]
            b2, b1, b0 = g.cs[j]
            xs.append(end)
            cs.append((a2 + b2, a1 + b1, a0 + b0))
        if fx[i + 1] <= end:
            i += 1
        if gx[j + 1] <= end:
            j += 1
    return PiecewiseQuadratic(xs, cs)


def pwq_min_over_window(f: PiecewiseQuadratic, down: float, up: float) -> PiecewiseQuadratic:
    return f.min_over_window(down, up)


def pwq_argmin(f: PiecewiseQuadratic) -> tuple[float, float]:
    return f.argmin()
