"""Renewable, storage and transmission updates of the decomposition.

Each routine minimises ``-lam * x + rho/2 (R - x)^2`` summed over its own
variables ``x`` subject to that block's constraints, with every other block
held fixed inside the residual target ``R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import StorageSpec

__all__ = [
    "res_update",
    "StorageDispatch",
    "storage_dispatch",
    "storage_objective",
    "injection_update",
    "flow_update",
    "TransmissionStepProblem",
    "TransmissionStepResult",
    "transmission_objective",
    "solve_transmission_step",
]


def res_update(lam, r, rho, cap):
    """Renewable output minimising ``-lam p + rho/2 (r - p)^2`` on ``[0, cap]``.

    Works elementwise on arrays.
    """
    return np.clip(np.asarray(r, dtype=float) + np.asarray(lam, dtype=float) / rho, 0.0, cap)


# ---------------------------------------------------------------------------
# storage


@dataclass
class StorageDispatch:
    pc: np.ndarray
    pd: np.ndarray
    pe: np.ndarray
    p: np.ndarray
    objective: float
    newton_steps: int = 0


def storage_objective(lam, r, rho, p) -> float:
    lam, r, p = (np.asarray(x, dtype=float) for x in (lam, r, p))
    return float(np.sum(-lam * p) + 0.5 * rho * np.sum((r - p) ** 2))


def _energy_path(spec: StorageSpec, pc, pd) -> np.ndarray:
    pe = np.empty_like(pc)
    e = spec.initial_energy
    for t in range(pc.shape[0]):
        e = e + pc[t] * spec.charge_eff - pd[t] / spec.discharge_eff
        pe[t] = e
    return pe


def _strict_start(spec: StorageSpec, T: int, use_c: bool, use_d: bool):
    """A point strictly inside every inequality, or ``None`` if none exists."""
    ec, ed = spec.charge_eff, spec.discharge_eff
    e0, lo, hi = spec.initial_energy, spec.energy_min, spec.energy_max
    pc = np.zeros(T)
    pd = np.zeros(T)
    if use_c and use_d:
        base = 0.5 * min(spec.charge_limit, spec.discharge_limit / (ec * ed))
        # drift toward the middle of the energy band without overshooting it
        drift = (0.5 * (lo + hi) - e0) / (2.0 * T)
        if drift > 0:
            drift = min(drift, 0.5 * ec * base)
        else:
            drift = max(drift, -0.25 * spec.discharge_limit / ed)
        pc[:] = base
        pd[:] = ec * ed * base - ed * drift
    elif use_c:
        if e0 >= hi:
            return None
        pc[:] = min(0.5 * spec.charge_limit, (hi - e0) / (2.0 * T * ec))
    elif use_d:
        if e0 <= lo:
            return None
        pd[:] = min(0.5 * spec.discharge_limit, ed * (e0 - lo) / (2.0 * T))
    return pc, pd


def storage_dispatch(spec: StorageSpec, lam, r, rho: float, tol: float = 1e-9) -> StorageDispatch:
    """Optimal charge/discharge schedule for one storage unit.

    Solves the convex QP over ``(pc, pd)`` with a primal-feasible
    predictor-corrector interior-point method started from a strictly
    feasible point, so every iterate meets the bounds and the energy
    recursion holds by construction. Iteration stops once the complementarity
    gap is below ``tol * (1 + |objective|)``.

    Raises
    ------
    ValueError
        If ``rho <= 0``.
    """
    lam = np.asarray(lam, dtype=float)
    r = np.asarray(r, dtype=float)
    T = lam.shape[0]
    if rho <= 0:
        raise ValueError("rho must be positive")
    ec, ed = spec.charge_eff, spec.discharge_eff

    def done(pc, pd, steps=0):
        pc, pd = _unwind_overlap(spec, pc + 0.0, pd + 0.0)
        p = pd - pc
        # the path is feasible in exact arithmetic; clip away rounding at the bounds
        pe = np.clip(_energy_path(spec, pc, pd), spec.energy_min, spec.energy_max)
        return StorageDispatch(pc, pd, pe, p, storage_objective(lam, r, rho, p), steps)

    use_c = spec.charge_limit > 0
    use_d = spec.discharge_limit > 0
    if not (use_c or use_d):
        return done(np.zeros(T), np.zeros(T))
    if spec.energy_max <= spec.energy_min:
        # energy pinned: every unit charged must be discharged in the same step
        eta = ec * ed
        if eta >= 1.0 or not (use_c and use_d):
            return done(np.zeros(T), np.zeros(T))
        cap = min(spec.charge_limit, spec.discharge_limit / eta)
        p = np.clip(r + lam / rho, -(1.0 - eta) * cap, 0.0)
        pc = np.minimum(-p / (1.0 - eta), cap)
        return done(pc, np.minimum(eta * pc, spec.discharge_limit))

    start = _strict_start(spec, T, use_c, use_d)
    if start is None:
        return done(np.zeros(T), np.zeros(T))
    blocks = [b for b, used in (("c", use_c), ("d", use_d)) if used]
    x0 = np.concatenate([start[0] if b == "c" else start[1] for b in blocks])
    ub = np.concatenate(
        [np.full(T, spec.charge_limit if b == "c" else spec.discharge_limit) for b in blocks]
    )
    # p = B x, cumulative energy change = E x
    B = np.hstack([(-np.eye(T) if b == "c" else np.eye(T)) for b in blocks])
    Lo = np.tril(np.ones((T, T)))
    E = np.hstack([(ec * Lo if b == "c" else -Lo / ed) for b in blocks])
    e_lo = spec.energy_min - spec.initial_energy
    e_hi = spec.energy_max - spec.initial_energy
    # objective divided by rho: 1/2 |Bx|^2 + (lin/rho).Bx
    Q = B.T @ B
    c = B.T @ ((-lam - rho * r) / rho)
    x, steps = _feasible_ipm(Q, c, E, ub, e_lo, e_hi, x0, tol)
    parts = dict(zip(blocks, np.split(x, len(blocks))))
    pc = parts.get("c", np.zeros(T))
    pd = parts.get("d", np.zeros(T))
    pc, pd = _pull_inside(spec, pc, pd, start)
    return done(pc, pd, steps)


def _feasible_ipm(Q, c, E, ub, e_lo, e_hi, x, tol, max_iter=100):
    """Minimise ``1/2 x'Qx + c'x`` s.t. ``0 <= x <= ub``, ``e_lo <= Ex <= e_hi``.

    ``x`` must be strictly feasible on entry; slacks are recomputed from
    ``x`` at every iteration so primal feasibility is never traded away.
    """
    n = x.shape[0]
    T = E.shape[0]

    def slack(x):
        ex = E @ x
        return np.concatenate((x, ub - x, ex - e_lo, e_hi - ex))

    def g_t(v):  # G' v with G = [-I; I; -E; E]
        return -v[:n] + v[n : 2 * n] + E.T @ (v[2 * n + T :] - v[2 * n : 2 * n + T])

    def g(dx):
        edx = E @ dx
        return np.concatenate((-dx, dx, -edx, edx))

    s = slack(x)
    m = s.shape[0]
    z = np.ones(m)
    it = 0
    for it in range(1, max_iter + 1):
        rd = Q @ x + c + g_t(z)
        mu = s @ z / m
        fval = 0.5 * x @ Q @ x + c @ x
        if s @ z <= tol * (1.0 + abs(fval)) and np.max(np.abs(rd)) <= 1e-9 * (1.0 + np.max(np.abs(c))):
            break
        d = z / s
        H = Q + np.diag(d[:n] + d[n : 2 * n]) + (E.T * (d[2 * n : 2 * n + T] + d[2 * n + T :])) @ E
        try:
            cho = cho_factor(H)
            solve = lambda rhs: cho_solve(cho, rhs)
        except np.linalg.LinAlgError:
            solve = lambda rhs: np.linalg.lstsq(H, rhs, rcond=None)[0]

        def direction(rc):
            dx = solve(-rd + g_t(rc / s))
            ds = -g(dx)
            dz = (-rc - z * ds) / s
            return dx, ds, dz

        def max_step(v, dv):
            neg = dv < 0
            return min(1.0, float(np.min(-v[neg] / dv[neg]))) if np.any(neg) else 1.0

        dx, ds, dz = direction(s * z)
        a_aff = min(max_step(s, ds), max_step(z, dz))
        mu_aff = (s + a_aff * ds) @ (z + a_aff * dz) / m
        sigma = (mu_aff / mu) ** 3
        dx, ds, dz = direction(s * z + ds * dz - sigma * mu)
        a = 0.99 * min(max_step(s, ds), max_step(z, dz))
        xn = x + a * dx
        sn = slack(xn)
        while np.any(sn <= 0) and a > 1e-16:
            a *= 0.5
            xn = x + a * dx
            sn = slack(xn)
        if a <= 1e-16:
            break
        x, s, z = xn, sn, z + a * dz
    return x, it


def _unwind_overlap(spec: StorageSpec, pc, pd):
    """Cancel simultaneous charging and discharging where the energy band allows.

    Lowering both by the same amount leaves the net output, hence the
    objective, unchanged and raises the stored energy from that step on, so
    it is limited by the headroom below ``energy_max`` over the remaining steps.
    """
    loss = 1.0 / spec.discharge_eff - spec.charge_eff
    pe = _energy_path(spec, pc, pd)
    for t in np.nonzero((pc > 0) & (pd > 0))[0]:
        x = min(pc[t], pd[t])
        if loss > 0:
            headroom = max(0.0, float(np.min(spec.energy_max - pe[t:])))
            x = min(x, headroom / loss)
        if x <= 0:
            continue
        pc[t] -= x
        pd[t] -= x
        pe[t:] += x * loss
    return np.maximum(pc, 0.0), np.maximum(pd, 0.0)


def _pull_inside(spec, pc, pd, start):
    """Blend toward the strictly feasible start until the recursion is in bounds."""
    pc = np.clip(pc, 0.0, spec.charge_limit)
    pd = np.clip(pd, 0.0, spec.discharge_limit)
    theta = 1.0
    for _ in range(60):
        c = start[0] + theta * (pc - start[0])
        d = start[1] + theta * (pd - start[1])
        pe = _energy_path(spec, c, d)
        if np.all(pe >= spec.energy_min) and np.all(pe <= spec.energy_max):
            return c, d
        # step back from the optimum geometrically; theta = 0 is the start itself
        theta = max(0.0, 1.0 - 2.0 * (1.0 - theta)) if theta < 1.0 else 1.0 - 1e-12
    return start


# ---------------------------------------------------------------------------
# transmission


def injection_update(lam, r, pi, rho, rho_trans, sum_f):
    """Vertex of the injection parabola for one node (elementwise on arrays)."""
    return (lam + rho * r - pi + rho_trans * sum_f) / (rho + rho_trans)


def flow_update(pi_from, pi_to, inj_from, inj_to, rest_from, rest_to, rho_trans, f_min, f_max):
    """Optimal flow on one line with all other variables fixed.

    ``rest_from``/``rest_to`` are the signed net inflows at the two end
    nodes over all *other* lines. The line delivers ``f`` into its
    ``to`` node and withdraws it from its ``from`` node.
    """
    c_to = inj_to - rest_to
    c_from = inj_from - rest_from
    f = (pi_to - pi_from + rho_trans * (c_to - c_from)) / (2.0 * rho_trans)
    return min(max(f, f_min), f_max)


@dataclass
class TransmissionStepProblem:
    """Per-step transmission QP data plus the warm-start iterate."""

    lam: np.ndarray
    r: np.ndarray
    line_from: np.ndarray
    line_to: np.ndarray
    f_min: np.ndarray
    f_max: np.ndarray
    rho: float
    rho_trans: float
    inj: np.ndarray | None = None
    f: np.ndarray | None = None
    pi: np.ndarray | None = None


@dataclass
class TransmissionStepResult:
    inj: np.ndarray
    f: np.ndarray
    pi: np.ndarray
    iterations: int
    converged: bool
    residual: float
    objective_trace: list[float] = field(default_factory=list)


def transmission_objective(lam, r, rho, inj) -> float:
    lam, r, inj = (np.asarray(x, dtype=float) for x in (lam, r, inj))
    return float(np.sum(-lam * inj + 0.5 * rho * (r - inj) ** 2))


def solve_transmission_step(
    prob: TransmissionStepProblem,
    inner_tol: float = 1e-6,
    inner_max_iters: int = 500,
    record: bool = False,
) -> TransmissionStepResult:
    """Gauss-Seidel ADMM on the injection/flow coupling of one time step.

    A sweep updates every injection, then every flow in ascending line
    order, then the coupling multipliers. Iteration stops once both the
    coupling residual ``max |inj - net inflow|`` and the scaled change of
    the net inflows fall below ``inner_tol``. Nodes without lines are pinned
    to zero injection.
    """
    N = prob.lam.shape[0]
    L = prob.line_from.shape[0]
    rho, rt = float(prob.rho), float(prob.rho_trans)
    if rho <= 0 or rt <= 0:
        raise ValueError("rho and rho_trans must be positive")
    inj = np.zeros(N) if prob.inj is None else np.array(prob.inj, dtype=float)
    f = np.zeros(L) if prob.f is None else np.array(prob.f, dtype=float)
    pi = np.zeros(N) if prob.pi is None else np.array(prob.pi, dtype=float)
    if L == 0:
        inj[:] = 0.0
        return TransmissionStepResult(inj, f, pi, 0, True, 0.0)

    fr, to = prob.line_from.tolist(), prob.line_to.tolist()
    fmin, fmax = prob.f_min.tolist(), prob.f_max.tolist()
    connected = np.zeros(N, dtype=bool)
    connected[prob.line_from] = True
    connected[prob.line_to] = True
    inj[~connected] = 0.0
    pi[~connected] = 0.0
    lam, r = prob.lam, prob.r

    def net_inflow(f):
        s = np.zeros(N)
        np.add.at(s, prob.line_to, f)
        np.subtract.at(s, prob.line_from, f)
        return s

    s = net_inflow(f)
    trace = []
    converged = False
    residual = np.inf
    it = 0
    fl = f.tolist()
    for it in range(1, inner_max_iters + 1):
        s_old = s.copy()
        inj[connected] = injection_update(lam, r, pi, rho, rt, s)[connected]
        inj_l = inj.tolist()
        pi_l = pi.tolist()
        sl = s.tolist()
        for l in range(L):
            a, b = fr[l], to[l]
            old = fl[l]
            # remove this line from both end sums, re-optimise, put it back
            new = flow_update(
                pi_l[a], pi_l[b], inj_l[a], inj_l[b], sl[a] + old, sl[b] - old, rt, fmin[l], fmax[l]
            )
            fl[l] = new
            sl[a] += old - new
            sl[b] += new - old
        s = np.array(sl)
        gap = inj - s
        pi += rt * gap
        residual = float(np.max(np.abs(gap)))
        dual = rt * float(np.max(np.abs(s - s_old)))
        if record:
            trace.append(transmission_objective(lam, r, rho, inj))
        if residual <= inner_tol and dual <= inner_tol:
            converged = True
            break
    f = np.array(fl)
    return TransmissionStepResult(inj, f, pi, it, converged, residual, trace)
