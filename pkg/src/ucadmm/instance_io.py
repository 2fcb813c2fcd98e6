"""JSON instance/schedule files, CSV convergence traces and synthetic instances.

Instance layout (all powers in MW, energies in MWh, costs in currency
units per step, per MWh or per MWh^2)::

    {
      "horizon": 24,
      "nodes": [{"id": "n0", "demand": [...]}],
      "generators": [{"id": "g0", "node": "n0", "p_min": 50, "p_max": 200,
                      "a": 100, "b": 20, "c": 0.01, "start_cost": 300,
                      "ramp_up": 80, "ramp_down": 80,
                      "startup_limit": 100, "shutdown_limit": 100,
                      "min_uptime": 3, "min_downtime": 2,
                      "initial_status": -3, "initial_power": 0}],
      "renewables": [{"id": "w0", "node": "n0", "p_max": 60,
                      "availability": [...]}],
      "storage": [{"id": "s0", "node": "n0", "charge_limit": 20,
                   "discharge_limit": 20, "energy_min": 0, "energy_max": 80,
                   "charge_eff": 0.9, "discharge_eff": 0.9,
                   "initial_energy": 0}],
      "lines": [{"id": "l0", "from": "n0", "to": "n1",
                 "f_min": -100, "f_max": 100}]
    }

Generator fields after ``p_max`` are optional; ramp and start/stop limits
default to unlimited, min up/down times to 1 and the initial status to a
cold start. Floats are written with ``repr`` precision so a save/load cycle
reproduces every number bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import IO, Any, Iterable

import numpy as np

from .model import (
    GeneratorSpec,
    LineSpec,
    RenewableSpec,
    Schedule,
    StorageSpec,
    UcInstance,
    validate_instance,
)

__all__ = [
    "InstanceFormatError",
    "InstanceValidationError",
    "TraceRecord",
    "TRACE_COLUMNS",
    "instance_to_dict",
    "instance_from_dict",
    "load_instance",
    "save_instance",
    "schedule_to_dict",
    "schedule_from_dict",
    "load_schedule",
    "save_schedule",
    "write_trace",
    "read_trace",
    "save_results",
    "SyntheticParams",
    "generate_synthetic",
]


class InstanceFormatError(ValueError):
    """The document is not valid JSON or misses / mistypes a field."""


class InstanceValidationError(ValueError):
    def __init__(self, report: list[str]):
        self.report = list(report)
        super().__init__("invalid instance:\n  " + "\n  ".join(self.report))


@dataclass
class TraceRecord:
    k: int
    rho: float
    rd_l1: float
    rd_linf: float
    aug_obj: float
    true_obj: float
    ms: float


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRecord))


# ---------------------------------------------------------------------------
# instances

_GEN_REQUIRED = ("id", "node", "p_min", "p_max")
_GEN_OPTIONAL = {
    "a": 0.0,
    "b": 0.0,
    "c": 0.0,
    "start_cost": 0.0,
    "ramp_up": math.inf,
    "ramp_down": math.inf,
    "startup_limit": math.inf,
    "shutdown_limit": math.inf,
    "min_uptime": 1,
    "min_downtime": 1,
    "initial_status": None,
    "initial_power": 0.0,
}
_STO_REQUIRED = ("id", "node", "charge_limit", "discharge_limit", "energy_min", "energy_max")
_STO_OPTIONAL = {"charge_eff": 1.0, "discharge_eff": 1.0, "initial_energy": None}


def _field(obj: dict, key: str, where: str, kind=float):
    if not isinstance(obj, dict):
        raise InstanceFormatError(f"{where}: expected an object")
    if key not in obj:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    try:
        if kind is str:
            return str(val)
        if kind is int:
            if isinstance(val, bool) or int(val) != val:
                raise ValueError
            return int(val)
        if kind is list:
            arr = np.asarray(val, dtype=float)
            if arr.ndim != 1:
                raise ValueError
            return arr
        if val is None:
            return math.inf
        return float(val)
    except (TypeError, ValueError):
        raise InstanceFormatError(f"{where}: field {key!r} has invalid value {val!r}") from None


def _optional(obj, key, default, where, kind=float):
    if key not in obj or (obj[key] is None and default is None):
        return default
    return _field(obj, key, where, kind)


def instance_from_dict(doc: Any) -> UcInstance:
    """Build and validate an instance from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level: expected an object")
    T = _field(doc, "horizon", "top level", int)
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise InstanceFormatError("top level: missing or empty field 'nodes'")
    node_ids, demand = [], []
    for i, nd in enumerate(nodes):
        where = f"nodes[{i}]"
        node_ids.append(_field(nd, "id", where, str))
        dem = _field(nd, "demand", where, list)
        if dem.shape != (T,):
            raise InstanceValidationError([f"node {node_ids[-1]}: demand length {dem.size} != horizon {T}"])
        demand.append(dem)

    gens = []
    for i, g in enumerate(doc.get("generators", [])):
        where = f"generators[{i}]"
        kw = {k: _field(g, k, where, str if k in ("id", "node") else float) for k in _GEN_REQUIRED}
        for k, default in _GEN_OPTIONAL.items():
            kind = int if k in ("min_uptime", "min_downtime", "initial_status") else float
            kw[k] = _optional(g, k, default, where, kind)
        gens.append(GeneratorSpec(**kw))

    res = []
    for i, r in enumerate(doc.get("renewables", [])):
        where = f"renewables[{i}]"
        res.append(
            RenewableSpec(
                id=_field(r, "id", where, str),
                node=_field(r, "node", where, str),
                p_max=_field(r, "p_max", where),
                availability=_field(r, "availability", where, list),
            )
        )

    sto = []
    for i, s in enumerate(doc.get("storage", [])):
        where = f"storage[{i}]"
        kw = {k: _field(s, k, where, str if k in ("id", "node") else float) for k in _STO_REQUIRED}
        for k, default in _STO_OPTIONAL.items():
            kw[k] = _optional(s, k, default, where)
        sto.append(StorageSpec(**kw))

    lines = []
    for i, l in enumerate(doc.get("lines", [])):
        where = f"lines[{i}]"
        lines.append(
            LineSpec(
                id=_field(l, "id", where, str),
                from_node=_field(l, "from", where, str),
                to_node=_field(l, "to", where, str),
                f_min=_field(l, "f_min", where),
                f_max=_field(l, "f_max", where),
            )
        )

    inst = UcInstance(T, node_ids, np.array(demand), gens, res, sto, lines)
    report = validate_instance(inst)
    if report:
        raise InstanceValidationError(report)
    return inst


def _num(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def instance_to_dict(inst: UcInstance) -> dict:
    gens = []
    for g in inst.generators:
        d = {
            "id": g.id,
            "node": g.node,
            "p_min": _num(g.p_min),
            "p_max": _num(g.p_max),
        }
        for k in _GEN_OPTIONAL:
            val = getattr(g, k)
            d[k] = int(val) if k in ("min_uptime", "min_downtime", "initial_status") else _num(val)
        gens.append(d)
    return {
        "horizon": int(inst.horizon),
        "nodes": [
            {"id": n, "demand": [float(x) for x in inst.demand[i]]}
            for i, n in enumerate(inst.node_ids)
        ],
        "generators": gens,
        "renewables": [
            {"id": r.id, "node": r.node, "p_max": float(r.p_max),
             "availability": [float(x) for x in r.availability]}
            for r in inst.renewables
        ],
        "storage": [
            {
                "id": s.id,
                "node": s.node,
                **{k: float(getattr(s, k)) for k in _STO_REQUIRED[2:]},
                **{k: float(getattr(s, k)) for k in _STO_OPTIONAL},
            }
            for s in inst.storage
        ],
        "lines": [
            {"id": l.id, "from": l.from_node, "to": l.to_node,
             "f_min": _num(l.f_min), "f_max": _num(l.f_max)}
            for l in inst.lines
        ],
    }


def _read(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_instance(source: str | Path | IO) -> UcInstance:
    """Parse and validate an instance from a path or a (byte or text) stream.

    Raises
    ------
    InstanceFormatError
        Malformed JSON (message carries line and column) or a missing /
        mistyped field (message names it).
    InstanceValidationError
        Well-formed document violating an instance invariant; ``.report``
        lists every violation.
    """
    text = _read(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(doc)


def save_instance(inst: UcInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# schedules


def _row(x) -> list[float]:
    return [float(v) for v in x]


def schedule_to_dict(inst: UcInstance, sched: Schedule, **extra) -> dict:
    doc = {"horizon": int(inst.horizon)}
    doc.update(extra)
    doc["generators"] = [
        {"id": g.id, "u": _row(sched.u[i]), "v": _row(sched.v[i]), "w": _row(sched.w[i]),
         "p": _row(sched.p[i])}
        for i, g in enumerate(inst.generators)
    ]
    doc["renewables"] = [{"id": r.id, "p": _row(sched.p_res[i])} for i, r in enumerate(inst.renewables)]
    doc["storage"] = [
        {"id": s.id, "pc": _row(sched.pc[i]), "pd": _row(sched.pd[i]), "pe": _row(sched.pe[i]),
         "p": _row(sched.p_st[i])}
        for i, s in enumerate(inst.storage)
    ]
    doc["nodes"] = [{"id": n, "inj": _row(sched.inj[i])} for i, n in enumerate(inst.node_ids)]
    doc["lines"] = [{"id": l.id, "f": _row(sched.f[i])} for i, l in enumerate(inst.lines)]
    return doc


def schedule_from_dict(doc: dict) -> Schedule:
    T = int(doc["horizon"])

    def mat(entries, key):
        return np.array([e[key] for e in entries], dtype=float).reshape(len(entries), T)

    g, r, s = doc.get("generators", []), doc.get("renewables", []), doc.get("storage", [])
    return Schedule(
        u=mat(g, "u"), v=mat(g, "v"), w=mat(g, "w"), p=mat(g, "p"),
        p_res=mat(r, "p"),
        pc=mat(s, "pc"), pd=mat(s, "pd"), pe=mat(s, "pe"), p_st=mat(s, "p"),
        inj=mat(doc.get("nodes", []), "inj"),
        f=mat(doc.get("lines", []), "f"),
    )


def save_schedule(inst: UcInstance, sched: Schedule, path: str | Path, **extra) -> None:
    text = json.dumps(schedule_to_dict(inst, sched, **extra), indent=1)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_schedule(source: str | Path | IO) -> Schedule:
    return schedule_from_dict(json.loads(_read(source)))


# ---------------------------------------------------------------------------
# traces


def write_trace(records: Iterable[TraceRecord], target: str | Path | IO, timing: bool = True) -> None:
    """Write trace records as CSV. With ``timing=False`` the ``ms`` column is left blank."""
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="", encoding="utf-8") if own else target
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            row = [str(int(rec.k))] + [repr(float(x)) for x in (rec.rho, rec.rd_l1, rec.rd_linf, rec.aug_obj, rec.true_obj)]
            row.append(repr(float(rec.ms)) if timing else "")
            writer.writerow(row)
    finally:
        if own:
            fh.close()


def read_trace(source: str | Path | IO) -> list[TraceRecord]:
    text = _read(source)
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        out.append(
            TraceRecord(
                k=int(row["k"]),
                **{c: float(row[c]) for c in TRACE_COLUMNS[1:-1]},
                ms=float(row["ms"]) if row["ms"] else math.nan,
            )
        )
    return out


def save_results(result, inst: UcInstance, schedule_path, trace_path, timing: bool = True) -> None:
    """Write a solve result's schedule (JSON) and trace (CSV)."""
    save_schedule(
        inst,
        result.schedule,
        schedule_path,
        objective=float(result.objective),
        converged=bool(result.converged),
        iterations=int(result.iterations),
        rd_l1=float(result.rd_l1),
        rd_linf=float(result.rd_linf),
    )
    write_trace(result.trace, trace_path, timing=timing)


# ---------------------------------------------------------------------------
# synthetic instances


@dataclass
class SyntheticParams:
    """Size and shape of a generated instance.

    ``profile`` is ``"daily"`` (two-peak daily curve), ``"flat"`` or
    ``"random"`` (bounded random walk).
    """

    n_gens: int = 3
    n_nodes: int = 1
    n_lines: int = 0
    n_res: int = 0
    n_storage: int = 0
    horizon: int = 24
    profile: str = "daily"
    max_updown: int = 8
    quadratic: bool = True


def _profile(kind: str, T: int, rng: np.random.Generator) -> np.ndarray:
    hours = np.arange(T) % 24
    if kind == "daily":
        base = 0.62 + 0.2 * np.exp(-((hours - 9.0) ** 2) / 8.0) + 0.28 * np.exp(-((hours - 19.0) ** 2) / 6.0)
        shape = base * rng.uniform(0.95, 1.05, T)
    elif kind == "flat":
        shape = np.full(T, 0.8) * rng.uniform(0.98, 1.02, T)
    elif kind == "random":
        steps = rng.normal(0.0, 0.06, T)
        shape = np.clip(0.75 + np.cumsum(steps), 0.45, 1.0)
    else:
        raise ValueError(f"unknown demand profile {kind!r}")
    return shape / shape.max()


def generate_synthetic(params: SyntheticParams, seed: int) -> UcInstance:
    """Random instance drawn from fixed ranges; deterministic in ``seed``.

    Generators: ``p_max`` in [50, 500] MW, ``p_min`` in [0.2, 0.5] of
    ``p_max``, ``a`` in [0, 300], ``b`` in [10, 50], ``c`` in [0, 0.05]
    (zero when ``quadratic`` is false), start cost in [0, 800], ramp rates in
    [0.4, 1] of ``p_max``, start-up / shut-down limits between
    ``max(p_min, 0.5 p_max)`` and ``p_max``, min up/down times in
    [1, ``max_updown``], cold start. Peak demand is at most total capacity
    divided by 1.3 and is spread over the nodes.
    """
    p = params
    if p.n_gens <= 0:
        raise InstanceValidationError(["no capacity: at least one generator is required"])
    if p.horizon < 1 or min(p.n_nodes, p.n_lines, p.n_res, p.n_storage) < 0 or p.n_nodes < 1:
        raise ValueError("counts must be >= 0, n_nodes >= 1 and horizon >= 1")
    if p.n_lines > 0 and p.n_nodes < 2:
        raise ValueError("lines need at least two nodes")
    rng = np.random.default_rng(seed)
    T = p.horizon
    node_ids = [f"n{i}" for i in range(p.n_nodes)]
    gen_nodes = [node_ids[i % p.n_nodes] for i in range(p.n_gens)]

    gens = []
    for i in range(p.n_gens):
        pmax = float(np.round(rng.uniform(50, 500), 1))
        pmin = float(np.round(pmax * rng.uniform(0.2, 0.5), 1))
        lim_lo = max(pmin, 0.5 * pmax)
        ut, dt = (int(x) for x in rng.integers(1, p.max_updown + 1, 2))
        gens.append(
            GeneratorSpec(
                id=f"g{i}",
                node=gen_nodes[i],
                p_min=pmin,
                p_max=pmax,
                a=float(np.round(rng.uniform(0, 300), 2)),
                b=float(np.round(rng.uniform(10, 50), 3)),
                c=float(np.round(rng.uniform(0, 0.05), 5)) if p.quadratic else 0.0,
                start_cost=float(np.round(rng.uniform(0, 800), 2)),
                ramp_up=float(np.round(pmax * rng.uniform(0.4, 1.0), 1)),
                ramp_down=float(np.round(pmax * rng.uniform(0.4, 1.0), 1)),
                startup_limit=float(np.round(rng.uniform(lim_lo, pmax), 1)),
                shutdown_limit=float(np.round(rng.uniform(lim_lo, pmax), 1)),
                min_uptime=ut,
                min_downtime=dt,
            )
        )
    capacity = sum(g.p_max for g in gens)
    # the first step must be reachable from a cold start
    first_cap = sum(min(g.startup_limit, g.p_max) for g in gens)
    peak = capacity / 1.3 * rng.uniform(0.75, 0.95)
    shape = _profile(p.profile, T, rng)
    shape[0] = min(shape[0], 0.9 * first_cap / peak)
    total = peak * shape
    weights = rng.uniform(0.5, 1.5, p.n_nodes)
    weights /= weights.sum()
    demand = np.round(np.outer(weights, total), 3)

    res = []
    for i in range(p.n_res):
        avail = np.clip(rng.uniform(0.1, 0.9) + rng.normal(0.0, 0.15, T), 0.0, 1.0)
        res.append(
            RenewableSpec(
                id=f"r{i}",
                node=node_ids[int(rng.integers(p.n_nodes))],
                p_max=float(np.round(rng.uniform(0.1, 0.3) * peak, 1)),
                availability=np.round(avail, 4),
            )
        )

    sto = []
    for i in range(p.n_storage):
        power = float(np.round(rng.uniform(0.05, 0.15) * peak, 1))
        emax = float(np.round(power * rng.uniform(2, 6), 1))
        sto.append(
            StorageSpec(
                id=f"s{i}",
                node=node_ids[int(rng.integers(p.n_nodes))],
                charge_limit=power,
                discharge_limit=power,
                energy_min=0.0,
                energy_max=emax,
                charge_eff=float(np.round(rng.uniform(0.85, 0.98), 3)),
                discharge_eff=float(np.round(rng.uniform(0.85, 0.98), 3)),
                initial_energy=0.0,
            )
        )

    lines = []
    pairs = [(i, i + 1) for i in range(p.n_nodes - 1)]
    for i in range(p.n_lines):
        if i < len(pairs):
            a, b = pairs[i]
        else:
            a, b = (int(x) for x in rng.choice(p.n_nodes, 2, replace=False))
        cap = float(np.round(rng.uniform(0.3, 1.0) * peak, 1))
        lines.append(LineSpec(f"l{i}", node_ids[a], node_ids[b], -cap, cap))

    inst = UcInstance(T, node_ids, demand, gens, res, sto, lines)
    report = validate_instance(inst)
    if report:
        raise InstanceValidationError(report)
    return inst
