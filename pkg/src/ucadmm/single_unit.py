"""Exact single-unit commitment under a price signal and a quadratic penalty.

The unit minimises, over its own commitment and output,

    sum_t  a u_t + b p_t + c p_t^2 + start_cost v_t - lam_t p_t
           + rho/2 (R_t - p_t)^2

subject to output bounds, minimum up/down times, ramp rates and start-up /
shut-down limits. The penalty term is paid in every step, including steps in
which the unit is off (then with ``p_t = 0``).

The recursion runs over run-length states ``ON(k)``, ``k = 1..UT`` and
``OFF(k)``, ``k = 1..DT`` (the last index of each meaning "at least").
Off states carry a scalar cost-to-come. On states carry a list of convex
piecewise-quadratic functions of the current output, one per surviving
start time; the list is needed because ``ON(UT)`` merges runs that started
at different times and a minimum of convex functions is not convex. A
function is dropped only when another one in the same state is no larger on
a superset of its domain, which makes it useless for every continuation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import GeneratorSpec
from .pwq import PiecewiseQuadratic

__all__ = [
    "SubproblemInfeasible",
    "UnitSchedule",
    "build_stage_cost",
    "solve_1uc",
    "unit_penalised_cost",
]

_INF = float("inf")


class SubproblemInfeasible(RuntimeError):
    """No schedule satisfies the unit's constraints from its initial status."""


@dataclass
class UnitSchedule:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    p: np.ndarray
    value: float


def build_stage_cost(
    gen: GeneratorSpec, lam_t: float, r_t: float, rho: float
) -> tuple[PiecewiseQuadratic, float]:
    """On-cost as a quadratic over ``[p_min, p_max]`` and the scalar off-cost.

    The start-up cost is not part of the stage cost; the recursion adds it on
    the off-to-on transition.
    """
    half = 0.5 * rho
    on = PiecewiseQuadratic.quadratic(
        gen.p_min,
        gen.p_max,
        gen.c + half,
        gen.b - lam_t - rho * r_t,
        gen.a + half * r_t * r_t,
    )
    return on, half * r_t * r_t


def unit_penalised_cost(gen, u, v, p, lam, r, rho) -> float:
    """Evaluate the single-unit objective on a given schedule."""
    u, v, p = (np.asarray(x, dtype=float) for x in (u, v, p))
    lam, r = np.asarray(lam, dtype=float), np.asarray(r, dtype=float)
    return float(
        np.sum(gen.a * u + gen.b * p + gen.c * p * p + gen.start_cost * v - lam * p)
        + 0.5 * rho * np.sum((r - p) ** 2)
    )


class _Track:
    """One convex cost-to-come function for the current on-run."""

    __slots__ = ("fn", "parent", "started")

    def __init__(self, fn, parent, started):
        self.fn = fn
        self.parent = parent
        self.started = started


def _prune(tracks: list[_Track], atol: float) -> list[_Track]:
    if len(tracks) < 2:
        return tracks
    kept: list[_Track] = []
    for tr in tracks:
        if any(k.fn.dominates(tr.fn, atol) for k in kept):
            continue
        kept = [k for k in kept if not tr.fn.dominates(k.fn, 0.0)]
        kept.append(tr)
    return kept


def solve_1uc(
    gen: GeneratorSpec,
    lam,
    r,
    rho: float,
    initial_status: int | None = None,
    initial_power: float | None = None,
) -> UnitSchedule:
    """Optimal commitment and dispatch of one generator.

    Parameters
    ----------
    gen : GeneratorSpec
        Unit data. Its initial status and power are used unless overridden.
    lam, r : array_like, shape (T,)
        Prices and residual-load targets per step.
    rho : float
        Penalty weight, ``>= 0``.

    Returns
    -------
    UnitSchedule
        Binary ``u, v, w``, output ``p`` and the optimal objective value.

    Raises
    ------
    SubproblemInfeasible
        When no feasible schedule exists from the initial status.
    """
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    T = lam.shape[0]
    if r.shape != (T,):
        raise ValueError("lam and r must have the same length")
    status = gen.initial_status if initial_status is None else int(initial_status)
    p0 = gen.initial_power if initial_power is None else float(initial_power)
    UT, DT = int(gen.min_uptime), int(gen.min_downtime)
    p_min, p_max = gen.p_min, gen.p_max
    su_hi = min(gen.startup_limit, p_max)
    sd_hi = min(gen.shutdown_limit, p_max)
    ru, rd = gen.ramp_up, gen.ramp_down
    half = 0.5 * rho
    q2 = gen.c + half

    # on[k-1] lists tracks for ON(k); off[k-1] is the cost for OFF(k)
    on: list[list[_Track]] = [[] for _ in range(UT)]
    off = [_INF] * DT
    if status > 0:
        on[min(status, UT) - 1].append(_Track(PiecewiseQuadratic.point(p0, 0.0), None, False))
    else:
        off[min(-status, DT) - 1] = 0.0

    on_hist: list[list[list[_Track]]] = []
    # per step and off index: ("off", j) or ("on", track, p) back-pointer
    off_hist: list[list[tuple | None]] = []
    scale = 1.0

    for t in range(T):
        lt, rt = lam[t], r[t]
        q1 = gen.b - lt - rho * rt
        pen = half * rt * rt
        q0 = gen.a + pen
        scale = max(scale, abs(q0), abs(q1) * p_max, q2 * p_max * p_max)

        new_on: list[list[_Track]] = [[] for _ in range(UT)]
        new_off = [_INF] * DT
        new_bp: list[tuple | None] = [None] * DT

        # stay off
        for j in range(DT):
            if off[j] < _INF:
                nj = min(j + 1, DT - 1)
                val = off[j] + pen
                if val < new_off[nj]:
                    new_off[nj] = val
                    new_bp[nj] = ("off", j)
        # shut down from ON(UT): output before shutdown must be <= SD
        best = None
        for tr in on[UT - 1]:
            res = tr.fn.argmin_on(p_min, sd_hi)
            if res is not None and (best is None or res[1] < best[2]):
                best = (tr, res[0], res[1])
        if best is not None:
            val = best[2] + pen
            # ties keep the stay-off continuation
            if val < new_off[0]:
                new_off[0] = val
                new_bp[0] = ("on", best[0], best[1])
        # start up from OFF(DT)
        if off[DT - 1] < _INF and su_hi >= p_min:
            fn = PiecewiseQuadratic.quadratic(
                p_min, su_hi, q2, q1, q0 + gen.start_cost + off[DT - 1]
            )
            new_on[0].append(_Track(fn, None, True))
        # continue running
        for k in range(UT):
            nk = min(k + 1, UT - 1)
            for tr in on[k]:
                g = tr.fn.min_over_window(rd, ru).restrict(p_min, p_max)
                if g is not None:
                    new_on[nk].append(_Track(g.add_quadratic(q2, q1, q0), tr, False))
        if len(new_on[UT - 1]) > 1:
            new_on[UT - 1] = _prune(new_on[UT - 1], 1e-12 * scale)
        on, off = new_on, new_off
        on_hist.append(on)
        off_hist.append(new_bp)

    # terminal state: prefer off on ties
    best_off_j = min(range(DT), key=lambda j: off[j])
    best_off = off[best_off_j]
    best_on = None
    for k in range(UT):
        for tr in on[k]:
            x, val = tr.fn.argmin()
            if best_on is None or val < best_on[2]:
                best_on = (tr, x, val)
    if best_on is None and best_off == _INF:
        raise SubproblemInfeasible(f"generator {gen.id}: no feasible schedule")

    u = np.zeros(T)
    p = np.zeros(T)
    if best_on is not None and best_on[2] < best_off:
        value = best_on[2]
        state = ("on", best_on[0], best_on[1])
    else:
        value = best_off
        state = ("off", best_off_j)

    t = T - 1
    while t >= 0:
        if state[0] == "off":
            bp = off_hist[t][state[1]]
            t -= 1
            if t < 0:
                break
            state = bp if bp[0] == "on" else ("off", bp[1])
        else:
            tr, x = state[1], state[2]
            u[t] = 1.0
            p[t] = x
            if tr.started:
                state = ("off", DT - 1)
                t -= 1
                continue
            parent = tr.parent
            t -= 1
            if t < 0:
                break
            lo, hi = max(x - ru, parent.fn.lo), min(x + rd, parent.fn.hi)
            m, _ = parent.fn.argmin()
            xp = lo if m < lo else (hi if m > hi else m)
            state = ("on", parent, xp)

    u0 = 1.0 if status > 0 else 0.0
    du = np.diff(np.concatenate(([u0], u)))
    v = (du > 0).astype(float)
    w = (du < 0).astype(float)
    return UnitSchedule(u=u, v=v, w=w, p=p, value=float(value))
