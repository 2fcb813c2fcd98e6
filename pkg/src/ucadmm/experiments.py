"""Reproducible instance suites and batch runs against the exact oracle."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .admm import SolverConfig, run_increasing_rho
from .instance_io import SyntheticParams, generate_synthetic
from .model import UcInstance
from .oracle import solve_exact_tiny

__all__ = ["tiny_suite", "convex_instance", "SuiteRun", "run_suite", "suite_summary"]

SUITE_SEED = 1000


def tiny_suite(n: int = 20, horizon: int = 8) -> list[UcInstance]:
    """Single-node instances with 2 or 3 generators; every fourth has storage."""
    return [
        generate_synthetic(
            SyntheticParams(n_gens=2 + i % 2, horizon=horizon, max_updown=3, n_storage=int(i % 4 == 0)),
            SUITE_SEED + i,
        )
        for i in range(n)
    ]


def convex_instance(seed: int, n_gens: int = 3, horizon: int = 8) -> UcInstance:
    """Instance whose unit commitment is convex: no minimum output, no-load
    cost, start cost, up/down time or binding ramps."""
    inst = generate_synthetic(SyntheticParams(n_gens=n_gens, horizon=horizon, max_updown=1), seed)
    gens = [
        replace(
            g,
            p_min=0.0,
            a=0.0,
            start_cost=0.0,
            min_uptime=1,
            min_downtime=1,
            ramp_up=np.inf,
            ramp_down=np.inf,
            startup_limit=np.inf,
            shutdown_limit=np.inf,
        )
        for g in inst.generators
    ]
    return replace(inst, generators=gens)


@dataclass
class SuiteRun:
    instance: int
    alpha: float
    seed: int
    variant: str
    converged: bool
    iterations: int
    objective: float
    exact: float
    rd_l1: float

    @property
    def gap(self) -> float:
        """Relative gap to the exact optimum, in percent."""
        return (self.objective - self.exact) / abs(self.exact) * 100.0 if self.exact else 0.0


def run_suite(
    instances: list[UcInstance],
    alphas=(1.01,),
    seeds=(0, 1, 2),
    variant: str = "gauss-seidel",
    exact: list[float] | None = None,
    callback=None,
    **config,
) -> list[SuiteRun]:
    """Solve every (instance, alpha, seed) and record the gap to the oracle.

    ``callback(inst, state, record)``, when given, is called after every sweep.
    Remaining keyword arguments go to ``SolverConfig``.
    """
    if exact is None:
        exact = [solve_exact_tiny(inst).cost for inst in instances]
    out = []
    for i, inst in enumerate(instances):
        for a in alphas:
            for s in seeds:
                cfg = SolverConfig(alpha=a, seed=s, variant=variant, trace=False, **config)
                hook = None if callback is None else (lambda st, rec, inst=inst: callback(inst, st, rec))
                r = run_increasing_rho(inst, cfg, hook)
                out.append(SuiteRun(i, a, s, variant, r.converged, r.iterations, r.objective, exact[i], r.rd_l1))
    return out


def suite_summary(runs: list[SuiteRun]) -> dict:
    """Aggregate statistics; gaps are taken over converged runs only."""
    gaps = np.array([r.gap for r in runs if r.converged])
    stat = (lambda f: float(f(gaps))) if gaps.size else (lambda f: float("nan"))
    return {
        "runs": len(runs),
        "converged": int(sum(r.converged for r in runs)),
        "mean_iters": float(np.mean([r.iterations for r in runs])),
        "mean": stat(np.mean),
        "median": stat(np.median),
        "min": stat(np.min),
        "max": stat(np.max),
    }
