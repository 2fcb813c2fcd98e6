"""Unit-commitment instance and schedule types.

Also holds the pure functions that score a schedule: the production cost,
the per-constraint feasibility report and the nodal residual demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GeneratorSpec",
    "RenewableSpec",
    "StorageSpec",
    "LineSpec",
    "UcInstance",
    "Schedule",
    "Violation",
    "validate_instance",
    "evaluate_objective",
    "check_feasibility",
    "residual_demand",
    "CONSTRAINT_FAMILIES",
]


@dataclass
class GeneratorSpec:
    """Thermal unit with quadratic cost and inter-temporal limits.

    ``initial_status`` is signed: ``+k`` means the unit has been on for ``k``
    steps producing ``initial_power``, ``-k`` means it has been off for ``k``
    steps. When omitted the unit starts cold (off long enough for any
    transition to be legal).
    """

    id: str
    node: str
    p_min: float
    p_max: float
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    start_cost: float = 0.0
    ramp_up: float = np.inf
    ramp_down: float = np.inf
    startup_limit: float = np.inf
    shutdown_limit: float = np.inf
    min_uptime: int = 1
    min_downtime: int = 1
    initial_status: int | None = None
    initial_power: float = 0.0

    def __post_init__(self):
        if self.initial_status is None:
            self.initial_status = -max(self.min_uptime, self.min_downtime)

    @property
    def initially_on(self) -> bool:
        return self.initial_status > 0


@dataclass
class RenewableSpec:
    id: str
    node: str
    p_max: float
    availability: np.ndarray

    def __post_init__(self):
        self.availability = np.asarray(self.availability, dtype=float)

    @property
    def capacity(self) -> np.ndarray:
        """Usable output per step, ``availability * p_max``."""
        return self.availability * self.p_max


@dataclass
class StorageSpec:
    id: str
    node: str
    charge_limit: float
    discharge_limit: float
    energy_min: float
    energy_max: float
    charge_eff: float = 1.0
    discharge_eff: float = 1.0
    initial_energy: float | None = None

    def __post_init__(self):
        if self.initial_energy is None:
            self.initial_energy = self.energy_min


@dataclass
class LineSpec:
    """Transmission line; positive flow runs from ``from_node`` to ``to_node``."""

    id: str
    from_node: str
    to_node: str
    f_min: float
    f_max: float


@dataclass
class _Topology:
    gen_node: np.ndarray
    res_node: np.ndarray
    sto_node: np.ndarray
    line_from: np.ndarray
    line_to: np.ndarray
    # signed node-line incidence, +1 where the line delivers into the node
    incidence: np.ndarray
    connected: np.ndarray


@dataclass
class UcInstance:
    horizon: int
    node_ids: list[str]
    demand: np.ndarray
    generators: list[GeneratorSpec] = field(default_factory=list)
    renewables: list[RenewableSpec] = field(default_factory=list)
    storage: list[StorageSpec] = field(default_factory=list)
    lines: list[LineSpec] = field(default_factory=list)

    def __post_init__(self):
        self.node_ids = [str(n) for n in self.node_ids]
        self.demand = np.atleast_2d(np.asarray(self.demand, dtype=float))

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def node_index(self, node_id: str) -> int:
        return self.node_ids.index(str(node_id))

    @cached_property
    def topology(self) -> _Topology:
        idx = {n: i for i, n in enumerate(self.node_ids)}
        gen_node = np.array([idx[g.node] for g in self.generators], dtype=int)
        res_node = np.array([idx[r.node] for r in self.renewables], dtype=int)
        sto_node = np.array([idx[s.node] for s in self.storage], dtype=int)
        line_from = np.array([idx[l.from_node] for l in self.lines], dtype=int)
        line_to = np.array([idx[l.to_node] for l in self.lines], dtype=int)
        inc = np.zeros((self.n_nodes, len(self.lines)))
        inc[line_to, np.arange(len(self.lines))] += 1.0
        inc[line_from, np.arange(len(self.lines))] -= 1.0
        connected = np.abs(inc).sum(axis=1) > 0
        return _Topology(gen_node, res_node, sto_node, line_from, line_to, inc, connected)

    def truncated(self, horizon: int) -> "UcInstance":
        """Copy of the instance restricted to the first ``horizon`` steps."""
        if not 1 <= horizon <= self.horizon:
            raise ValueError(f"horizon must be in [1, {self.horizon}], got {horizon}")
        renewables = [
            RenewableSpec(r.id, r.node, r.p_max, r.availability[:horizon].copy())
            for r in self.renewables
        ]
        return UcInstance(
            horizon=horizon,
            node_ids=list(self.node_ids),
            demand=self.demand[:, :horizon].copy(),
            generators=list(self.generators),
            renewables=renewables,
            storage=list(self.storage),
            lines=list(self.lines),
        )


@dataclass
class Schedule:
    """All decision variables over the horizon, one row per unit.

    Commitment matrices are stored as floats so that relaxed (fractional)
    schedules share the type.
    """

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    p: np.ndarray
    p_res: np.ndarray
    pc: np.ndarray
    pd: np.ndarray
    pe: np.ndarray
    p_st: np.ndarray
    inj: np.ndarray
    f: np.ndarray

    @classmethod
    def zeros(cls, inst: UcInstance) -> "Schedule":
        T = inst.horizon
        G, R, S = len(inst.generators), len(inst.renewables), len(inst.storage)
        pe = np.tile(
            np.array([s.initial_energy for s in inst.storage], dtype=float)[:, None], (1, T)
        ).reshape(S, T)
        return cls(
            u=np.zeros((G, T)),
            v=np.zeros((G, T)),
            w=np.zeros((G, T)),
            p=np.zeros((G, T)),
            p_res=np.zeros((R, T)),
            pc=np.zeros((S, T)),
            pd=np.zeros((S, T)),
            pe=pe,
            p_st=np.zeros((S, T)),
            inj=np.zeros((inst.n_nodes, T)),
            f=np.zeros((len(inst.lines), T)),
        )

    def copy(self) -> "Schedule":
        return Schedule(**{k: np.array(v, copy=True) for k, v in self.__dict__.items()})

    def arrays(self) -> dict[str, np.ndarray]:
        return dict(self.__dict__)


def _check_shapes(inst: UcInstance, sched: Schedule) -> None:
    T = inst.horizon
    expected = {
        "u": len(inst.generators),
        "v": len(inst.generators),
        "w": len(inst.generators),
        "p": len(inst.generators),
        "p_res": len(inst.renewables),
        "pc": len(inst.storage),
        "pd": len(inst.storage),
        "pe": len(inst.storage),
        "p_st": len(inst.storage),
        "inj": inst.n_nodes,
        "f": len(inst.lines),
    }
    for name, rows in expected.items():
        shape = np.shape(getattr(sched, name))
        if shape != (rows, T):
            raise ValueError(f"schedule field {name!r} has shape {shape}, expected {(rows, T)}")


# ---------------------------------------------------------------------------
# validation


def validate_instance(inst: UcInstance) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    report: list[str] = []
    T = inst.horizon
    nodes = set(inst.node_ids)
    if not isinstance(T, (int, np.integer)) or T < 1:
        report.append(f"horizon: must be a positive integer, got {T!r}")
        return report
    if len(nodes) != len(inst.node_ids):
        report.append("nodes: duplicate node ids")
    if inst.demand.shape != (len(inst.node_ids), T):
        report.append(f"demand: shape {inst.demand.shape} != ({len(inst.node_ids)}, {T})")
    else:
        for n, t in zip(*np.nonzero(~(inst.demand >= 0))):
            report.append(
                f"node {inst.node_ids[n]}: demand at step {t} is {inst.demand[n, t]!r}, must be >= 0"
            )

    def unit_node(kind, unit_id, node):
        if str(node) not in nodes:
            report.append(f"{kind} {unit_id}: references unknown node {node!r}")

    for g in inst.generators:
        where = f"generator {g.id}"
        unit_node("generator", g.id, g.node)
        if not 0 <= g.p_min <= g.p_max:
            report.append(f"{where}: requires 0 <= p_min <= p_max (p_min={g.p_min}, p_max={g.p_max})")
        if g.c < 0:
            report.append(f"{where}: quadratic cost c={g.c} must be >= 0")
        for name in ("ramp_up", "ramp_down", "startup_limit", "shutdown_limit"):
            if getattr(g, name) < 0:
                report.append(f"{where}: {name} must be >= 0")
        if g.startup_limit < g.p_min:
            report.append(f"{where}: startup_limit {g.startup_limit} < p_min {g.p_min}")
        if g.shutdown_limit < g.p_min:
            report.append(f"{where}: shutdown_limit {g.shutdown_limit} < p_min {g.p_min}")
        for name in ("min_uptime", "min_downtime"):
            val = getattr(g, name)
            if int(val) != val or val < 1:
                report.append(f"{where}: {name} must be an integer >= 1, got {val}")
        if int(g.initial_status) != g.initial_status or g.initial_status == 0:
            report.append(f"{where}: initial_status must be a nonzero integer")
        elif g.initially_on and not g.p_min <= g.initial_power <= g.p_max:
            report.append(
                f"{where}: initial_power {g.initial_power} outside [p_min, p_max] while on"
            )
        elif not g.initially_on and g.initial_power != 0:
            report.append(f"{where}: initial_power must be 0 while off")

    for r in inst.renewables:
        where = f"renewable {r.id}"
        unit_node("renewable", r.id, r.node)
        if r.p_max < 0:
            report.append(f"{where}: p_max must be >= 0")
        if r.availability.shape != (T,):
            report.append(f"{where}: availability length {r.availability.size} != horizon {T}")
            continue
        for t in np.nonzero(~((r.availability >= 0) & (r.availability <= 1)))[0]:
            report.append(
                f"{where}: availability at step {t} is {r.availability[t]!r}, outside [0, 1]"
            )

    for s in inst.storage:
        where = f"storage {s.id}"
        unit_node("storage", s.id, s.node)
        if not 0 <= s.energy_min <= s.initial_energy <= s.energy_max:
            report.append(f"{where}: requires 0 <= energy_min <= initial_energy <= energy_max")
        if s.charge_limit < 0 or s.discharge_limit < 0:
            report.append(f"{where}: charge/discharge limits must be >= 0")
        for name in ("charge_eff", "discharge_eff"):
            if not 0 < getattr(s, name) <= 1:
                report.append(f"{where}: {name} must lie in (0, 1]")

    for l in inst.lines:
        where = f"line {l.id}"
        for end in (l.from_node, l.to_node):
            if str(end) not in nodes:
                report.append(f"{where}: references unknown node {end!r}")
        if l.from_node == l.to_node:
            report.append(f"{where}: from and to node coincide")
        if not l.f_min <= 0 <= l.f_max:
            report.append(f"{where}: requires f_min <= 0 <= f_max")

    for kind, units in (
        ("generator", inst.generators),
        ("renewable", inst.renewables),
        ("storage", inst.storage),
        ("line", inst.lines),
    ):
        ids = [u.id for u in units]
        if len(set(ids)) != len(ids):
            report.append(f"{kind}s: duplicate ids")
    return report


# ---------------------------------------------------------------------------
# scoring


def evaluate_objective(inst: UcInstance, sched: Schedule) -> float:
    """Fixed, linear, quadratic and start-up cost summed over units and steps."""
    _check_shapes(inst, sched)
    if not inst.generators:
        return 0.0
    a = np.array([g.a for g in inst.generators])[:, None]
    b = np.array([g.b for g in inst.generators])[:, None]
    c = np.array([g.c for g in inst.generators])[:, None]
    sc = np.array([g.start_cost for g in inst.generators])[:, None]
    p = sched.p
    return float(np.sum(a * sched.u + b * p + c * p * p + sc * sched.v))


def residual_demand(inst: UcInstance, sched: Schedule) -> np.ndarray:
    """Unmet demand per node and step after production and net import."""
    _check_shapes(inst, sched)
    top = inst.topology
    supply = np.zeros_like(inst.demand)
    np.add.at(supply, top.gen_node, sched.p)
    np.add.at(supply, top.res_node, sched.p_res)
    np.add.at(supply, top.sto_node, sched.p_st)
    return inst.demand - (supply + sched.inj)


@dataclass(frozen=True)
class Violation:
    constraint: str
    entity: str
    t: int
    magnitude: float

    def __str__(self):
        return f"{self.constraint} at {self.entity}, step {self.t}: {self.magnitude:.6g}"


CONSTRAINT_FAMILIES = (
    "binary",
    "commitment_logic",
    "start_stop_exclusive",
    "min_output",
    "max_output",
    "min_uptime",
    "min_downtime",
    "ramp_up",
    "ramp_down",
    "renewable_cap",
    "charge_limit",
    "discharge_limit",
    "storage_net",
    "energy_limit",
    "energy_balance",
    "injection",
    "flow_limit",
    "nodal_balance",
)


def _history(status: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Start/stop indicators for the ``length`` steps before the horizon."""
    v = np.zeros(length)
    w = np.zeros(length)
    k = abs(int(status))
    if k <= length:
        # index -k in the history array is step 1-k
        (v if status > 0 else w)[length - k] = 1.0
    return v, w


def _scaled(limit: float, x: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.where(x == 0, 0.0, limit * x)


def check_feasibility(
    inst: UcInstance,
    sched: Schedule,
    tol: float = 1e-6,
    exclude: Iterable[str] = (),
) -> list[Violation]:
    """List every constraint whose residual exceeds ``tol``.

    Ramp and min up/down time constraints at the first step are evaluated
    against the generator's initial status and power. Families named in
    ``exclude`` are skipped.
    """
    _check_shapes(inst, sched)
    skip = set(exclude)
    unknown = skip - set(CONSTRAINT_FAMILIES)
    if unknown:
        raise ValueError(f"unknown constraint families: {sorted(unknown)}")
    out: list[Violation] = []

    def report(name, entity, residual):
        if name in skip:
            return
        residual = np.atleast_1d(residual)
        for t in np.nonzero(residual > tol)[0]:
            out.append(Violation(name, entity, int(t), float(residual[t])))

    T = inst.horizon
    for i, g in enumerate(inst.generators):
        u, v, w, p = sched.u[i], sched.v[i], sched.w[i], sched.p[i]
        ent = f"generator {g.id}"
        for name, x in (("binary", u), ("binary", v), ("binary", w)):
            report(name, ent, np.minimum(np.abs(x), np.abs(x - 1)))
        u0 = 1.0 if g.initially_on else 0.0
        p0 = float(g.initial_power) if g.initially_on else 0.0
        u_prev = np.concatenate(([u0], u[:-1]))
        p_prev = np.concatenate(([p0], p[:-1]))
        report("commitment_logic", ent, np.abs(u - u_prev - (v - w)))
        report("start_stop_exclusive", ent, v + w - 1)
        report("min_output", ent, u * g.p_min - p)
        report("max_output", ent, p - g.p_max * u)
        UT, DT = int(g.min_uptime), int(g.min_downtime)
        hv, hw = _history(g.initial_status, max(UT, DT))
        v_ext = np.concatenate((hv, v))
        w_ext = np.concatenate((hw, w))
        H = len(hv)
        up = np.array([v_ext[H + t - UT + 1 : H + t + 1].sum() for t in range(T)])
        down = np.array([w_ext[H + t - DT + 1 : H + t + 1].sum() for t in range(T)])
        report("min_uptime", ent, up - u)
        report("min_downtime", ent, down - (1 - u))
        # (SU - RU) v + RU u rewritten as SU v + RU (u - v) so infinite limits stay finite
        up_rhs = _scaled(g.startup_limit, v) + _scaled(g.ramp_up, u - v)
        down_rhs = _scaled(g.shutdown_limit, w) + _scaled(g.ramp_down, u_prev - w)
        report("ramp_up", ent, (p - p_prev) - up_rhs)
        report("ramp_down", ent, (p_prev - p) - down_rhs)

    for i, r in enumerate(inst.renewables):
        ent = f"renewable {r.id}"
        report("renewable_cap", ent, np.maximum(sched.p_res[i] - r.capacity, -sched.p_res[i]))

    for i, s in enumerate(inst.storage):
        ent = f"storage {s.id}"
        pc, pd, pe = sched.pc[i], sched.pd[i], sched.pe[i]
        report("charge_limit", ent, np.maximum(pc - s.charge_limit, -pc))
        report("discharge_limit", ent, np.maximum(pd - s.discharge_limit, -pd))
        report("storage_net", ent, np.abs(sched.p_st[i] - (pd - pc)))
        report("energy_limit", ent, np.maximum(pe - s.energy_max, s.energy_min - pe))
        pe_prev = np.concatenate(([s.initial_energy], pe[:-1]))
        balance = pe - (pe_prev + pc * s.charge_eff - pd / s.discharge_eff)
        report("energy_balance", ent, np.abs(balance))

    top = inst.topology
    net_in = top.incidence @ sched.f if inst.lines else np.zeros_like(sched.inj)
    for n, node in enumerate(inst.node_ids):
        report("injection", f"node {node}", np.abs(sched.inj[n] - net_in[n]))
    for i, l in enumerate(inst.lines):
        report("flow_limit", f"line {l.id}", np.maximum(sched.f[i] - l.f_max, l.f_min - sched.f[i]))

    rd = residual_demand(inst, sched)
    for n, node in enumerate(inst.node_ids):
        report("nodal_balance", f"node {node}", np.abs(rd[n]))
    return out


def node_members(inst: UcInstance) -> list[dict[str, Sequence[int]]]:
    """Indices of the generators, renewables and storage units at each node."""
    top = inst.topology
    return [
        {
            "generators": np.nonzero(top.gen_node == n)[0],
            "renewables": np.nonzero(top.res_node == n)[0],
            "storage": np.nonzero(top.sto_node == n)[0],
        }
        for n in range(inst.n_nodes)
    ]
