"""Multi-block ADMM for unit commitment with an increasing penalty.

The nodal balance ``sum of production + injection = demand`` is dualised
with prices ``lam`` and a quadratic penalty ``rho``. Each sweep minimises
the augmented Lagrangian over one unit at a time (generators, renewables,
storage, then the per-step transmission blocks) and then moves the prices
along the residual demand. Multiplying ``rho`` by ``alpha`` every ``m``
sweeps drives the residual to zero even though the generator blocks are
non-convex; every iterate satisfies all unit constraints exactly, so the
final schedule needs no repair.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .instance_io import TraceRecord
from .model import Schedule, UcInstance, evaluate_objective, residual_demand
from .single_unit import solve_1uc
from .subproblems import (
    TransmissionStepProblem,
    res_update,
    solve_transmission_step,
    storage_dispatch,
)

__all__ = [
    "VARIANTS",
    "SolverConfig",
    "AdmmState",
    "SolveResult",
    "default_epsilon",
    "default_lambda_range",
    "init_state",
    "gauss_seidel_iteration",
    "exchange_iteration",
    "update_multipliers",
    "run_increasing_rho",
    "rho_at",
]

VARIANTS = ("gauss-seidel", "exchange")


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings. ``None`` fields get instance-dependent defaults.

    Attributes
    ----------
    rho0, alpha, m
        Penalty starts at ``rho0`` and is multiplied by ``alpha`` after every
        ``m`` sweeps.
    epsilon
        Stop when ``sum |RD|`` over all nodes and steps is at most this.
        Default ``1e-3 * sum_t max_n D[n, t]``.
    lambda_range
        Initial prices are drawn uniformly from this interval. Default
        ``[0, max_g (b_g + 2 c_g p_max_g)]``.
    rho_trans
        Penalty of the inner transmission ADMM. Default ``max(rho, 1)``,
        re-evaluated every sweep.
    inner_tol
        Inner stopping tolerance. Default ``1e-6 * mean |D|``.
    rho_max
        The run stops unconverged once ``rho`` exceeds this. Beyond it the
        iterates no longer move in floating point and ``rho`` would
        eventually overflow.
    trace
        Record one ``TraceRecord`` per sweep.
    """

    rho0: float = 1e-4
    alpha: float = 1.1
    m: int = 1
    epsilon: float | None = None
    max_iters: int = 5000
    seed: int = 0
    variant: str = "gauss-seidel"
    lambda_range: tuple[float, float] | None = None
    rho_trans: float | None = None
    inner_tol: float | None = None
    inner_max_iters: int = 500
    rho_max: float = 1e12
    trace: bool = True

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError("rho0 must be positive")
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.lambda_range is not None and self.lambda_range[0] > self.lambda_range[1]:
            raise ValueError("lambda_range must satisfy lo <= hi")
        if self.rho_trans is not None and not self.rho_trans > 0:
            raise ValueError("rho_trans must be positive")
        if self.inner_tol is not None and not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        if self.inner_max_iters < 1:
            raise ValueError("inner_max_iters must be >= 1")
        if not self.rho_max >= self.rho0:
            raise ValueError("rho_max must be >= rho0")

    def resolved(self, inst: UcInstance) -> "SolverConfig":
        """Copy with every ``None`` default filled in for ``inst``."""
        return replace(
            self,
            epsilon=default_epsilon(inst) if self.epsilon is None else self.epsilon,
            lambda_range=(
                default_lambda_range(inst) if self.lambda_range is None else tuple(self.lambda_range)
            ),
            inner_tol=(
                1e-6 * max(float(np.mean(np.abs(inst.demand))), 1e-9)
                if self.inner_tol is None
                else self.inner_tol
            ),
        )


def default_epsilon(inst: UcInstance) -> float:
    eps = 1e-3 * float(np.sum(np.max(inst.demand, axis=0)))
    return eps if eps > 0 else 1e-6


def default_lambda_range(inst: UcInstance) -> tuple[float, float]:
    if not inst.generators:
        return (0.0, 0.0)
    return (0.0, max(g.b + 2.0 * g.c * g.p_max for g in inst.generators))


@dataclass
class AdmmState:
    """Iterates and bookkeeping of one run.

    ``rd`` is the residual demand of ``schedule``; ``rho`` always equals
    ``rho0 * alpha ** (k // m)`` computed by repeated multiplication.
    """

    schedule: Schedule
    lam: np.ndarray
    pi: np.ndarray
    rho: float
    k: int
    rd: np.ndarray
    rng: np.random.Generator
    config: SolverConfig
    inner_iterations: int = 0

    @property
    def rd_l1(self) -> float:
        return float(np.sum(np.abs(self.rd)))

    @property
    def rd_linf(self) -> float:
        return float(np.max(np.abs(self.rd))) if self.rd.size else 0.0


@dataclass
class SolveResult:
    schedule: Schedule
    objective: float
    rd_l1: float
    rd_linf: float
    iterations: int
    converged: bool
    trace: list[TraceRecord] = field(default_factory=list)
    lam: np.ndarray | None = None
    config: SolverConfig | None = None
    wall_time: float = 0.0


def init_state(inst: UcInstance, config: SolverConfig) -> AdmmState:
    """Zero schedule, random prices drawn from ``config.seed``, ``rho = rho0``."""
    cfg = config.resolved(inst)
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.lambda_range
    lam = rng.uniform(lo, hi, size=inst.demand.shape)
    sched = Schedule.zeros(inst)
    return AdmmState(
        schedule=sched,
        lam=lam,
        pi=np.zeros_like(inst.demand),
        rho=float(cfg.rho0),
        k=0,
        rd=residual_demand(inst, sched),
        rng=rng,
        config=cfg,
    )


def update_multipliers(state: AdmmState, scale=None) -> AdmmState:
    """``lam += rho * RD`` (times ``scale`` per node when given)."""
    step = state.rho * state.rd
    if scale is not None:
        step = step * scale
    state.lam = state.lam + step
    return state


def _advance(state: AdmmState) -> None:
    state.k += 1
    if state.k % state.config.m == 0:
        state.rho *= state.config.alpha


def _rho_trans(state: AdmmState) -> float:
    cfg = state.config
    return cfg.rho_trans if cfg.rho_trans is not None else max(state.rho, 1.0)


def _transmission(state: AdmmState, inst: UcInstance, target: np.ndarray) -> None:
    """Solve every per-step transmission block against ``target`` (N x T)."""
    if not inst.lines:
        return
    top = inst.topology
    sched = state.schedule
    cfg = state.config
    f_min = np.array([l.f_min for l in inst.lines], dtype=float)
    f_max = np.array([l.f_max for l in inst.lines], dtype=float)
    rt = _rho_trans(state)
    for t in range(inst.horizon):
        res = solve_transmission_step(
            TransmissionStepProblem(
                lam=state.lam[:, t],
                r=target[:, t],
                line_from=top.line_from,
                line_to=top.line_to,
                f_min=f_min,
                f_max=f_max,
                rho=state.rho,
                rho_trans=rt,
                inj=sched.inj[:, t],
                f=sched.f[:, t],
                pi=state.pi[:, t],
            ),
            inner_tol=cfg.inner_tol,
            inner_max_iters=cfg.inner_max_iters,
        )
        state.inner_iterations += res.iterations
        sched.f[:, t] = res.f
        state.pi[:, t] = res.pi
        # injections follow the flows exactly; any leftover mismatch of the
        # inner solve shows up in the nodal residual instead
        sched.inj[:, t] = top.incidence @ res.f


def _set_unit(sched: Schedule, i: int, us) -> None:
    sched.u[i], sched.v[i], sched.w[i], sched.p[i] = us.u, us.v, us.w, us.p


def _set_storage(sched: Schedule, i: int, sd) -> None:
    sched.pc[i], sched.pd[i], sched.pe[i], sched.p_st[i] = sd.pc, sd.pd, sd.pe, sd.p


def gauss_seidel_iteration(state: AdmmState, inst: UcInstance) -> AdmmState:
    """One sequential sweep followed by the price update.

    Generators go in a fresh random order, then renewables, storage and the
    transmission blocks. Each block sees the residual left by all blocks
    updated before it in the same sweep.
    """
    top = inst.topology
    sched = state.schedule
    rho = state.rho
    rd = residual_demand(inst, sched)

    for g in state.rng.permutation(len(inst.generators)):
        n = top.gen_node[g]
        old = sched.p[g].copy()
        us = solve_1uc(inst.generators[g], state.lam[n], rd[n] + old, rho)
        _set_unit(sched, g, us)
        rd[n] -= us.p - old
    for i, spec in enumerate(inst.renewables):
        n = top.res_node[i]
        old = sched.p_res[i].copy()
        sched.p_res[i] = res_update(state.lam[n], rd[n] + old, rho, spec.capacity)
        rd[n] -= sched.p_res[i] - old
    for i, spec in enumerate(inst.storage):
        n = top.sto_node[i]
        old = sched.p_st[i].copy()
        _set_storage(sched, i, storage_dispatch(spec, state.lam[n], rd[n] + old, rho))
        rd[n] -= sched.p_st[i] - old
    _transmission(state, inst, rd + sched.inj)

    state.rd = residual_demand(inst, sched)
    update_multipliers(state)
    _advance(state)
    return state


def _unit_counts(inst: UcInstance) -> np.ndarray:
    """Number of exchange participants per node; injections count where lines attach."""
    top = inst.topology
    n = np.zeros(inst.n_nodes)
    for arr in (top.gen_node, top.res_node, top.sto_node):
        np.add.at(n, arr, 1.0)
    n += top.connected
    return np.maximum(n, 1.0)


def exchange_iteration(state: AdmmState, inst: UcInstance) -> AdmmState:
    """One Jacobi-style exchange sweep followed by the price update.

    Every unit is solved against the previous iterate with proximal center
    ``p_i + RD_n / n_n``, i.e. ``D/n - mean(p) + p_i`` with ``n_n`` the
    number of units sharing node ``n``. Prices move by ``rho * RD / n_n``.
    """
    top = inst.topology
    sched = state.schedule
    prev = sched.copy()
    rho = state.rho
    n_n = _unit_counts(inst)[:, None]
    share = residual_demand(inst, prev) / n_n

    for g, gen in enumerate(inst.generators):
        n = top.gen_node[g]
        _set_unit(sched, g, solve_1uc(gen, state.lam[n], prev.p[g] + share[n], rho))
    for i, spec in enumerate(inst.renewables):
        n = top.res_node[i]
        sched.p_res[i] = res_update(state.lam[n], prev.p_res[i] + share[n], rho, spec.capacity)
    for i, spec in enumerate(inst.storage):
        n = top.sto_node[i]
        _set_storage(sched, i, storage_dispatch(spec, state.lam[n], prev.p_st[i] + share[n], rho))
    _transmission(state, inst, prev.inj + share)

    state.rd = residual_demand(inst, sched)
    update_multipliers(state, scale=1.0 / n_n)
    _advance(state)
    return state


def _augmented(inst, sched, lam, rd, rho) -> tuple[float, float]:
    true_obj = evaluate_objective(inst, sched)
    return true_obj + float(np.sum(lam * rd)) + 0.5 * rho * float(np.sum(rd * rd)), true_obj


def run_increasing_rho(
    inst: UcInstance,
    config: SolverConfig | None = None,
    callback: Callable[[AdmmState, TraceRecord], None] | None = None,
) -> SolveResult:
    """Run sweeps until ``sum |RD| <= epsilon`` or ``max_iters`` sweeps.

    Parameters
    ----------
    inst : UcInstance
    config : SolverConfig, optional
    callback : callable, optional
        Called after every sweep with the state and that sweep's trace
        record, e.g. to inspect intermediate schedules.

    Returns
    -------
    SolveResult
        Non-convergence is reported through ``converged=False``.
    """
    config = config or SolverConfig()
    state = init_state(inst, config)
    cfg = state.config
    step = gauss_seidel_iteration if cfg.variant == "gauss-seidel" else exchange_iteration
    trace: list[TraceRecord] = []
    start = time.perf_counter()
    converged = False
    while state.k < cfg.max_iters:
        tick = time.perf_counter()
        lam_before = state.lam
        rho = state.rho
        step(state, inst)
        ms = (time.perf_counter() - tick) * 1e3
        rec = None
        if cfg.trace or callback is not None:
            aug, true_obj = _augmented(inst, state.schedule, lam_before, state.rd, rho)
            rec = TraceRecord(state.k, rho, state.rd_l1, state.rd_linf, aug, true_obj, ms)
            if cfg.trace:
                trace.append(rec)
        if callback is not None:
            callback(state, rec)
        if state.rd_l1 <= cfg.epsilon:
            converged = True
            break
        if state.rho > cfg.rho_max:
            break
    sched = state.schedule
    return SolveResult(
        schedule=sched,
        objective=evaluate_objective(inst, sched),
        rd_l1=state.rd_l1,
        rd_linf=state.rd_linf,
        iterations=state.k,
        converged=converged,
        trace=trace,
        lam=state.lam,
        config=cfg,
        wall_time=time.perf_counter() - start,
    )


def rho_at(config: SolverConfig, k: int) -> float:
    """Closed form ``rho0 * alpha ** (k // m)``."""
    return config.rho0 * config.alpha ** (k // config.m)

