"""Reference solutions for small instances.

``dispatch_given_commitment`` solves the convex dispatch for a fixed
commitment with an interior-point QP solver (cvxpy + Clarabel).
``solve_exact_tiny`` finds the global optimum by branch and bound over the
commitment, one time step at a time, with min up/down times enforced while
branching. Its bound for a step is the copper-plate single-step dispatch
cost of the chosen on-set (ramps, storage energy and the network relaxed),
computed by Lagrangian duality, so the bound stays valid even when the
price search is inexact. Complete commitments are priced by the exact
dispatch. ``solve_convexified`` drops integrality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .model import GeneratorSpec, Schedule, UcInstance, evaluate_objective, residual_demand

__all__ = [
    "OracleBudgetError",
    "InvalidCommitment",
    "DispatchResult",
    "ExactResult",
    "commitment_flags",
    "dispatch_given_commitment",
    "DispatchModel",
    "enumerate_commitments",
    "solve_exact_tiny",
    "solve_convexified",
    "BUDGET",
]

BUDGET = {"generators": 4, "horizon": 10, "storage": 1, "lines": 2}


class OracleBudgetError(ValueError):
    """Instance too large for exhaustive search."""


class InvalidCommitment(ValueError):
    """Commitment matrix is not binary or breaks min up/down times."""


@dataclass
class DispatchResult:
    schedule: Schedule
    cost: float


@dataclass
class ExactResult:
    schedule: Schedule
    cost: float
    leaves: int
    nodes: int


# ---------------------------------------------------------------------------
# commitment logic


def _initial_runs(gen: GeneratorSpec) -> tuple[int, int]:
    """``(on, run)``: initial state and how long it has lasted."""
    s = int(gen.initial_status)
    return (1, s) if s > 0 else (0, -s)


def _step(gen: GeneratorSpec, on: int, run: int, nxt: int) -> tuple[int, int] | None:
    """Run-length state after choosing ``nxt`` for the next step, or None if forbidden."""
    if nxt == on:
        return on, min(run + 1, max(gen.min_uptime, gen.min_downtime))
    if on and run < gen.min_uptime:
        return None
    if not on and run < gen.min_downtime:
        return None
    return nxt, 1


def commitment_flags(gen: GeneratorSpec, u) -> tuple[np.ndarray, np.ndarray]:
    """Start/stop indicators implied by ``u``; raises for invalid patterns."""
    u = np.asarray(u, dtype=float)
    if not np.all((u == 0) | (u == 1)):
        raise InvalidCommitment(f"generator {gen.id}: commitment must be binary")
    on, run = _initial_runs(gen)
    for t, x in enumerate(u.astype(int)):
        nxt = _step(gen, on, run, int(x))
        if nxt is None:
            kind = "uptime" if on else "downtime"
            raise InvalidCommitment(f"generator {gen.id}: minimum {kind} violated at step {t}")
        on, run = nxt
    u0 = 1.0 if gen.initially_on else 0.0
    du = np.diff(np.concatenate(([u0], u)))
    return (du > 0).astype(float), (du < 0).astype(float)


def enumerate_commitments(inst: UcInstance):
    """Yield every commitment matrix that respects min up/down times."""
    gens = inst.generators
    T = inst.horizon

    def rec(t, states, cols):
        if t == T:
            yield np.array(cols, dtype=float).T.reshape(len(gens), T)
            return
        for col in itertools.product((0, 1), repeat=len(gens)):
            nxt = [_step(g, *s, x) for g, s, x in zip(gens, states, col)]
            if all(n is not None for n in nxt):
                yield from rec(t + 1, nxt, cols + [col])

    yield from rec(0, [_initial_runs(g) for g in gens], [])


# ---------------------------------------------------------------------------
# convex dispatch model


def _limit(x: float, cap: float) -> float:
    # an output change never exceeds p_max, so larger limits are equivalent
    return float(min(x, cap))


class DispatchModel:
    """cvxpy model of the dispatch with commitment as parameters or variables.

    With ``relaxed=False`` the commitment ``u, v, w`` are parameters and the
    model is compiled once and re-solved for every commitment. With
    ``relaxed=True`` they are variables in ``[0, 1]`` and the min up/down
    constraints are added.
    """

    def __init__(self, inst: UcInstance, relaxed: bool = False):
        self.inst = inst
        self.relaxed = relaxed
        T, G = inst.horizon, len(inst.generators)
        R, S, L = len(inst.renewables), len(inst.storage), len(inst.lines)
        shape = (G, T)
        kind = cp.Variable if relaxed else cp.Parameter
        self.u, self.v, self.w = ((kind(shape) if G else None) for _ in range(3))
        u, v, w = self.u, self.v, self.w
        # cvxpy rejects empty variables; absent unit classes stay None
        self.p = _var(G, T)
        self.p_res = _var(R, T)
        self.pc = _var(S, T)
        self.pd = _var(S, T)
        self.pe = _var(S, T)
        self.f = _var(L, T)
        cons = []
        cost = 0
        top = inst.topology

        for i, g in enumerate(inst.generators):
            ui, vi, wi, pi = u[i], v[i], w[i], self.p[i]
            cons += [pi >= g.p_min * ui, pi <= g.p_max * ui]
            u0 = 1.0 if g.initially_on else 0.0
            p0 = float(g.initial_power) if g.initially_on else 0.0
            su = _limit(g.startup_limit, g.p_max)
            sd = _limit(g.shutdown_limit, g.p_max)
            ru = _limit(g.ramp_up, g.p_max)
            rd = _limit(g.ramp_down, g.p_max)
            cons += [
                pi[0] - p0 <= su * vi[0] + ru * (ui[0] - vi[0]),
                p0 - pi[0] <= sd * wi[0] + rd * (u0 - wi[0]),
            ]
            if T > 1:
                cons += [
                    pi[1:] - pi[:-1] <= su * vi[1:] + ru * (ui[1:] - vi[1:]),
                    pi[:-1] - pi[1:] <= sd * wi[1:] + rd * (ui[:-1] - wi[1:]),
                ]
            b = np.full(T, g.b)
            cost = cost + b @ pi + g.c * cp.sum_squares(pi)
            if relaxed:
                cost = cost + g.a * cp.sum(ui) + g.start_cost * cp.sum(vi)
                cons += self._relaxed_logic(g, ui, vi, wi, u0)

        for i, r in enumerate(inst.renewables):
            cons += [self.p_res[i] >= 0, self.p_res[i] <= r.capacity]
        for i, s in enumerate(inst.storage):
            cons += [
                self.pc[i] >= 0,
                self.pc[i] <= s.charge_limit,
                self.pd[i] >= 0,
                self.pd[i] <= s.discharge_limit,
                self.pe[i] >= s.energy_min,
                self.pe[i] <= s.energy_max,
                self.pe[i, 0] == s.initial_energy + s.charge_eff * self.pc[i, 0] - self.pd[i, 0] / s.discharge_eff,
            ]
            if T > 1:
                cons.append(
                    self.pe[i, 1:]
                    == self.pe[i, :-1] + s.charge_eff * self.pc[i, 1:] - self.pd[i, 1:] / s.discharge_eff
                )
        for i, l in enumerate(inst.lines):
            if np.isfinite(l.f_min):
                cons.append(self.f[i] >= l.f_min)
            if np.isfinite(l.f_max):
                cons.append(self.f[i] <= l.f_max)

        supply = 0
        if G:
            supply = supply + _member_matrix(inst.n_nodes, top.gen_node) @ self.p
        if R:
            supply = supply + _member_matrix(inst.n_nodes, top.res_node) @ self.p_res
        if S:
            supply = supply + _member_matrix(inst.n_nodes, top.sto_node) @ (self.pd - self.pc)
        if L:
            supply = supply + top.incidence @ self.f
        cons.append(supply == inst.demand)
        self.problem = cp.Problem(cp.Minimize(cost), cons)

    @staticmethod
    def _relaxed_logic(g, u, v, w, u0):
        T = u.shape[0]
        cons = [u >= 0, u <= 1, v >= 0, w >= 0, v + w <= 1]
        cons.append(u[0] - u0 == v[0] - w[0])
        if T > 1:
            cons.append(u[1:] - u[:-1] == v[1:] - w[1:])
        UT, DT = int(g.min_uptime), int(g.min_downtime)
        s = int(g.initial_status)
        for t in range(T):
            starts = [v[tau] for tau in range(max(0, t - UT + 1), t + 1)]
            stops = [w[tau] for tau in range(max(0, t - DT + 1), t + 1)]
            # a start or stop before the horizon still inside the window
            hist_v = 1.0 if s > 0 and t + s < UT else 0.0
            hist_w = 1.0 if s <= 0 and t - s < DT else 0.0
            if starts or hist_v:
                cons.append(cp.sum(cp.hstack(starts)) + hist_v <= u[t])
            if stops or hist_w:
                cons.append(cp.sum(cp.hstack(stops)) + hist_w <= 1 - u[t])
        return cons

    def solve(self) -> bool:
        try:
            self.problem.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            return False
        return self.problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)

    def schedule(self) -> Schedule:
        inst = self.inst
        top = inst.topology

        T = inst.horizon

        def val(x, rows):
            return np.zeros((rows, T)) if x is None else np.array(x.value, dtype=float).reshape(rows, T)

        G, S = len(inst.generators), len(inst.storage)
        u, v, w = val(self.u, G), val(self.v, G), val(self.w, G)
        p = val(self.p, G)
        if not self.relaxed:
            # snap interior-point noise onto the exact bounds
            lo = np.array([g.p_min for g in inst.generators])[:, None] * u
            hi = np.array([g.p_max for g in inst.generators])[:, None] * u
            p = np.clip(p, lo, hi)
        R = len(inst.renewables)
        caps = np.array([r.capacity for r in inst.renewables]).reshape(R, T)
        p_res = np.clip(val(self.p_res, R), 0.0, caps)
        pc = np.clip(val(self.pc, S), 0.0, np.array([s.charge_limit for s in inst.storage]).reshape(S, 1))
        pd = np.clip(val(self.pd, S), 0.0, np.array([s.discharge_limit for s in inst.storage]).reshape(S, 1))
        pe = val(self.pe, S)
        f = val(self.f, len(inst.lines))
        for i, l in enumerate(inst.lines):
            f[i] = np.clip(f[i], l.f_min, l.f_max)
        inj = top.incidence @ f if inst.lines else np.zeros_like(inst.demand)
        return Schedule(u=u, v=v, w=w, p=p, p_res=p_res, pc=pc, pd=pd, pe=pe, p_st=pd - pc, inj=inj, f=f)


def _var(rows: int, T: int):
    return cp.Variable((rows, T)) if rows else None


def _member_matrix(n_nodes: int, where: np.ndarray) -> np.ndarray:
    m = np.zeros((n_nodes, where.size))
    m[where, np.arange(where.size)] = 1.0
    return m


def _check_budget(inst: UcInstance) -> None:
    sizes = {
        "generators": len(inst.generators),
        "horizon": inst.horizon,
        "storage": len(inst.storage),
        "lines": len(inst.lines),
    }
    over = [f"{k}={v} > {BUDGET[k]}" for k, v in sizes.items() if v > BUDGET[k]]
    if over:
        raise OracleBudgetError("instance too large for exact search (" + ", ".join(over) + ")")


def dispatch_given_commitment(inst: UcInstance, u, model: DispatchModel | None = None) -> DispatchResult | None:
    """Cheapest dispatch for a fixed commitment, or None when infeasible.

    Parameters
    ----------
    inst : UcInstance
    u : array_like, shape (G, T)
        Binary commitment; start/stop indicators are derived from it and
        the initial status.
    model : DispatchModel, optional
        Pre-built parametric model, reused across calls for speed.

    Raises
    ------
    InvalidCommitment
        ``u`` is not binary or breaks min up/down times.
    """
    u = np.asarray(u, dtype=float).reshape(len(inst.generators), inst.horizon)
    vs, ws = [], []
    for g, row in zip(inst.generators, u):
        v, w = commitment_flags(g, row)
        vs.append(v)
        ws.append(w)
    shape = u.shape
    v, w = np.array(vs).reshape(shape), np.array(ws).reshape(shape)
    model = model or DispatchModel(inst)
    if model.u is not None:
        model.u.value, model.v.value, model.w.value = u, v, w
    if not model.solve():
        return None
    sched = model.schedule()
    sched.u, sched.v, sched.w = u.copy(), v, w
    resid = np.abs(residual_demand(inst, sched))
    if resid.size and resid.max() > 1e-6 * max(1.0, float(np.abs(inst.demand).max())):
        return None
    return DispatchResult(sched, evaluate_objective(inst, sched))


# ---------------------------------------------------------------------------
# exact search


def _static_bound(inst: UcInstance, t: int, on: tuple[int, ...]) -> float:
    """Lower bound on the step-``t`` cost of on-set ``on``.

    Copper-plate dispatch with renewables in ``[0, cap]`` and storage net
    output in ``[-charge, discharge]``. The bound is the Lagrangian dual
    value at a price found by bisection; any price gives a valid bound.
    """
    D = float(inst.demand[:, t].sum())
    gens = [g for g, x in zip(inst.generators, on) if x]
    fixed = sum(g.a for g in gens)
    lo_cap = [(g.p_min, g.p_max, g.b, g.c) for g in gens]
    lo_cap += [(0.0, float(r.capacity[t]), 0.0, 0.0) for r in inst.renewables]
    lo_cap += [(-s.charge_limit, s.discharge_limit, 0.0, 0.0) for s in inst.storage]
    pmin = sum(x[0] for x in lo_cap)
    pmax = sum(x[1] for x in lo_cap)
    scale = 1e-9 * max(1.0, abs(D))
    if D < pmin - scale or D > pmax + scale:
        return np.inf
    if not lo_cap:
        return fixed if abs(D) <= scale else np.inf

    def best(lam):
        # minimiser and value of (b - lam) p + c p^2 over each box
        total = 0.0
        val = lam * D
        for lo, hi, b, c in lo_cap:
            if c > 0:
                x = min(max((lam - b) / (2 * c), lo), hi)
            else:
                x = hi if lam > b else lo
            total += x
            val += (b - lam) * x + c * x * x
        return total, val

    slopes = [x[2] + 2 * x[3] * x[1] for x in lo_cap] + [x[2] + 2 * x[3] * x[0] for x in lo_cap]
    a_, b_ = min(slopes) - 1.0, max(slopes) + 1.0
    for _ in range(100):
        mid = 0.5 * (a_ + b_)
        if best(mid)[0] < D:
            a_ = mid
        else:
            b_ = mid
        if b_ - a_ <= 1e-12 * max(1.0, abs(mid)):
            break
    return fixed + max(best(a_)[1], best(b_)[1])


def solve_exact_tiny(inst: UcInstance) -> ExactResult:
    """Globally optimal commitment and dispatch of a tiny instance.

    Raises
    ------
    OracleBudgetError
        More than 4 generators, 10 steps, 1 storage unit or 2 lines.
    ValueError
        No feasible commitment exists.
    """
    _check_budget(inst)
    gens = inst.generators
    G, T = len(gens), inst.horizon
    cols = list(itertools.product((0, 1), repeat=G))
    static = np.array([[_static_bound(inst, t, c) for c in cols] for t in range(T)])
    tail = np.zeros(T + 1)
    for t in range(T - 1, -1, -1):
        tail[t] = tail[t + 1] + static[t].min()
    if not np.isfinite(tail[0]):
        raise ValueError("no commitment can meet demand at some step")
    model = DispatchModel(inst)
    best: list = [np.inf, None]
    counts = [0, 0]
    start_cost = np.array([g.start_cost for g in gens])

    def rec(t, states, prev_on, acc, path):
        counts[1] += 1
        if t == T:
            counts[0] += 1
            res = dispatch_given_commitment(inst, np.array(path, dtype=float).T.reshape(G, T), model)
            if res is not None and res.cost < best[0]:
                best[0], best[1] = res.cost, res.schedule
            return
        options = []
        for j, col in enumerate(cols):
            if not np.isfinite(static[t, j]):
                continue
            nxt = [_step(g, *s, x) for g, s, x in zip(gens, states, col)]
            if any(n is None for n in nxt):
                continue
            starts = float(np.dot(start_cost, [x and not y for x, y in zip(col, prev_on)]))
            options.append((acc + static[t, j] + starts, j, nxt))
        options.sort(key=lambda o: (o[0], o[1]))
        for value, j, nxt in options:
            if value + tail[t + 1] >= best[0]:
                break
            rec(t + 1, nxt, cols[j], value, path + [cols[j]])

    init = [_initial_runs(g) for g in gens]
    rec(0, init, tuple(s[0] for s in init), 0.0, [])
    if best[1] is None:
        raise ValueError("no feasible commitment found")
    return ExactResult(best[1], float(best[0]), counts[0], counts[1])


def solve_convexified(inst: UcInstance) -> DispatchResult:
    """Optimum with commitment relaxed to ``[0, 1]``; a lower bound on the true cost.

    Infinite ramp and start/stop limits are replaced by ``p_max``, which is
    equivalent for binary commitments.
    """
    model = DispatchModel(inst, relaxed=True)
    if not model.solve():
        raise ValueError(f"relaxation not solved: {model.problem.status}")
    sched = model.schedule()
    return DispatchResult(sched, float(model.problem.value))
