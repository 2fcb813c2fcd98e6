"""Independent reference solvers used only by the tests."""

import itertools

import cvxpy as cp
import mpmath
import numpy as np

from ucadmm import GeneratorSpec
from ucadmm.oracle import InvalidCommitment, commitment_flags


def random_unit(rng, T_max=6, cold_only=False):
    pmax = float(rng.uniform(50, 300))
    pmin = float(rng.uniform(0.0, 0.5) * pmax)
    UT, DT = (int(x) for x in rng.integers(1, 4, 2))
    status = -int(rng.integers(1, 4)) if cold_only or rng.random() < 0.5 else int(rng.integers(1, 4))
    def lim(lo):
        return float(rng.uniform(lo, pmax)) if rng.random() < 0.8 else np.inf
    return GeneratorSpec(
        "g", "n0", pmin, pmax,
        a=float(rng.uniform(0, 200)), b=float(rng.uniform(10, 50)), c=float(rng.uniform(0, 0.05)),
        start_cost=float(rng.uniform(0, 300)),
        ramp_up=lim(0.2 * pmax), ramp_down=lim(0.2 * pmax),
        startup_limit=lim(pmin), shutdown_limit=lim(pmin),
        min_uptime=UT, min_downtime=DT, initial_status=status,
        initial_power=float(rng.uniform(pmin, pmax)) if status > 0 else 0.0,
    )


class UnitQP:
    """Single-unit penalised dispatch for a fixed commitment, solved as a QP."""

    def __init__(self, gen, T, rho):
        self.gen, self.T = gen, T
        self.u, self.v, self.w = (cp.Parameter(T) for _ in range(3))
        self.lam, self.r = cp.Parameter(T), cp.Parameter(T)
        p = self.p = cp.Variable(T)
        g = gen
        u0 = 1.0 if g.initially_on else 0.0
        p0 = g.initial_power if g.initially_on else 0.0
        su, sd, ru, rd = (min(x, g.p_max) for x in (g.startup_limit, g.shutdown_limit, g.ramp_up, g.ramp_down))
        prev_p = cp.hstack([cp.Constant(np.array([p0])), p[:-1]]) if T > 1 else cp.Constant(np.array([p0]))
        prev_u = cp.hstack([cp.Constant(np.array([u0])), self.u[:-1]]) if T > 1 else cp.Constant(np.array([u0]))
        cons = [
            p >= g.p_min * self.u,
            p <= g.p_max * self.u,
            p - prev_p <= su * self.v + ru * (self.u - self.v),
            prev_p - p <= sd * self.w + rd * (prev_u - self.w),
        ]
        obj = (g.b * cp.sum(p) + g.c * cp.sum_squares(p) - self.lam @ p
               + rho / 2 * cp.sum_squares(self.r - p))
        self.prob = cp.Problem(cp.Minimize(obj), cons)
        self.rho = rho

    def solve(self, u, lam, r):
        v, w = commitment_flags(self.gen, u)
        self.u.value, self.v.value, self.w.value = u, v, w
        self.lam.value, self.r.value = lam, r
        self.prob.solve(solver=cp.CLARABEL)
        if self.prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return np.inf
        g = self.gen
        # constant parts: fixed and start-up cost, and the r^2 penalty is inside the QP
        return float(self.prob.value + g.a * u.sum() + g.start_cost * v.sum())


def brute_force_1uc(gen, lam, r, rho):
    """Best value over every commitment pattern, each dispatched exactly."""
    T = len(lam)
    qp = UnitQP(gen, T, rho)
    best = np.inf
    for pat in itertools.product((0.0, 1.0), repeat=T):
        u = np.array(pat)
        try:
            val = qp.solve(u, lam, r)
        except InvalidCommitment:
            continue
        best = min(best, val)
    return best


def grid_argmin(fun, lo, hi, n=2_000_001):
    """Minimum of a scalar function over a uniform grid including both ends."""
    xs = np.linspace(lo, hi, n)
    vals = fun(xs)
    i = int(np.argmin(vals))
    return xs[i], vals[i], (hi - lo) / (n - 1)


mpmath.mp.dps = 50


def hp(x):
    """Exact high-precision copy of a float (or of each entry of an array)."""
    if np.ndim(x):
        return [mpmath.mpf(float(v)) for v in np.ravel(x)]
    return mpmath.mpf(float(x))


def zoom_min(fun, lo, hi, n=41, max_levels=200):
    """Minimiser of a convex scalar function by repeatedly refined grids.

    Evaluated with 50 significant digits: near a flat minimum even
    extended-precision rounding moves the grid argmin by about 1e-6.
    ``fun`` must use plain arithmetic so it works on mpmath numbers.
    """
    lo, hi = mpmath.mpf(float(lo)), mpmath.mpf(float(hi))
    x = lo
    for _ in range(max_levels):
        step = (hi - lo) / (n - 1)
        xs = [lo + step * i for i in range(n)]
        vals = [fun(v) for v in xs]
        i = min(range(n), key=vals.__getitem__)
        x = xs[i]
        lo, hi = max(lo, x - 2 * step), min(hi, x + 2 * step)
        if hi - lo < mpmath.mpf(10) ** -25 * (1 + abs(x)):
            break
    return float(x)
