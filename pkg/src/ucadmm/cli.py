"""Command line: ``ucadmm solve | compare | generate``.

Exit codes: 0 success (for ``solve``: converged), 2 ``solve`` finished
without converging, 1 any error. ``UCADMM_THREADS`` caps the number of
worker processes ``compare`` uses (default 1).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .admm import VARIANTS, SolverConfig, run_increasing_rho
from .instance_io import (
    InstanceFormatError,
    InstanceValidationError,
    SyntheticParams,
    generate_synthetic,
    load_instance,
    save_instance,
    save_results,
)
from .model import UcInstance
from .oracle import OracleBudgetError, solve_exact_tiny

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2
BUNDLED_PREFIX = "bundled:"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def bundled_instances() -> list[str]:
    root = resources.files("ucadmm") / "data"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_instance(spec: str, horizon: int | None = None) -> UcInstance:
    """Load from a path or ``bundled:NAME``, optionally truncated."""
    try:
        if spec.startswith(BUNDLED_PREFIX):
            name = spec[len(BUNDLED_PREFIX):]
            if name not in bundled_instances():
                raise CliError(f"no bundled instance {name!r}; available: {', '.join(bundled_instances())}")
            with (resources.files("ucadmm") / "data" / f"{name}.json").open("rb") as fh:
                inst = load_instance(fh)
        else:
            inst = load_instance(Path(spec))
    except FileNotFoundError:
        raise CliError(f"instance file not found: {spec}") from None
    except InstanceValidationError as exc:
        raise CliError(str(exc)) from None
    except InstanceFormatError as exc:
        raise CliError(f"{spec}: {exc}") from None
    if horizon is not None:
        if not 1 <= horizon <= inst.horizon:
            raise CliError(f"--horizon must be in [1, {inst.horizon}]")
        inst = inst.truncated(horizon)
    return inst


def _positive(kind):
    def conv(text):
        try:
            val = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val

    return conv


def _alpha(text):
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
    if not val >= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must be >= 1, got {text}")
    return val


def _alpha_list(text):
    return [_alpha(x) for x in text.split(",") if x.strip()]


def _variant_list(text):
    out = [x.strip() for x in text.split(",") if x.strip()]
    bad = [x for x in out if x not in VARIANTS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"variants must be among {', '.join(VARIANTS)}")
    return out


def _solver_flags(p: argparse.ArgumentParser, seeds: bool = False) -> None:
    p.add_argument("--instance", required=True, help="instance JSON path or bundled:NAME")
    p.add_argument("--m", type=_positive(int), default=1, help="sweeps per penalty level")
    p.add_argument("--rho0", type=_positive(float), default=1e-4)
    p.add_argument("--epsilon", type=_positive(float), default=None,
                   help="L1 residual tolerance (default 1e-3 * sum_t max_n demand)")
    p.add_argument("--max-iters", type=_positive(int), default=5000)
    p.add_argument("--horizon", type=_positive(int), default=None, help="keep only the first K steps")
    p.add_argument("--rho-trans", type=_positive(float), default=None)
    p.add_argument("--inner-tol", type=_positive(float), default=None)
    p.add_argument("--lambda-range", type=float, nargs=2, metavar=("LO", "HI"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ucadmm", description="Unit commitment by ADMM with an increasing penalty.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one instance")
    _solver_flags(s)
    s.add_argument("--alpha", type=_alpha, default=1.1, help="penalty growth factor (>= 1)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--variant", choices=VARIANTS, default="gauss-seidel")
    s.add_argument("--out", default="schedule.json", help="schedule JSON output")
    s.add_argument("--trace", default="trace.csv", help="trace CSV output")
    s.add_argument("--timing", action="store_true",
                   help="fill the trace's ms column (makes the file run-dependent)")

    c = sub.add_parser("compare", help="ADMM gap to the exact optimum over seeds and alphas")
    _solver_flags(c)
    c.add_argument("--seeds", type=_positive(int), default=3, help="number of seeds, 0..K-1")
    c.add_argument("--alphas", type=_alpha_list, default=[1.01, 1.05, 1.1, 1.2])
    c.add_argument("--variants", type=_variant_list, default=list(VARIANTS))

    g = sub.add_parser("generate", help="write a synthetic instance")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--gens", type=int, default=3)
    g.add_argument("--nodes", type=int, default=1)
    g.add_argument("--lines", type=int, default=0)
    g.add_argument("--renewables", type=int, default=0)
    g.add_argument("--storage", type=int, default=0)
    g.add_argument("--horizon", type=_positive(int), default=24)
    g.add_argument("--profile", choices=("daily", "flat", "random"), default="daily")
    g.add_argument("--max-updown", type=_positive(int), default=8)
    g.add_argument("--linear", action="store_true", help="zero quadratic cost coefficients")
    return parser


def _config(args, alpha: float, seed: int, variant: str) -> SolverConfig:
    try:
        return SolverConfig(
            rho0=args.rho0,
            alpha=alpha,
            m=args.m,
            epsilon=args.epsilon,
            max_iters=args.max_iters,
            seed=seed,
            variant=variant,
            lambda_range=tuple(args.lambda_range) if args.lambda_range else None,
            rho_trans=args.rho_trans,
            inner_tol=args.inner_tol,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def run_solve(args) -> int:
    inst = read_instance(args.instance, args.horizon)
    cfg = _config(args, args.alpha, args.seed, args.variant)
    result = run_increasing_rho(inst, cfg)
    try:
        save_results(result, inst, args.out, args.trace, timing=args.timing)
    except OSError as exc:
        raise CliError(f"cannot write results: {exc}") from None
    print(
        f"converged={str(result.converged).lower()} iterations={result.iterations} "
        f"objective={result.objective:.6f} rd_l1={result.rd_l1:.6g} wall={result.wall_time:.3f}s"
    )
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


@dataclass
class CompareRow:
    variant: str
    alpha: float
    seed: int
    converged: bool
    iterations: int
    objective: float
    gap: float


def _compare_job(job):
    inst, cfg, exact = job
    r = run_increasing_rho(inst, cfg)
    gap = (r.objective - exact) / abs(exact) * 100.0 if exact else 0.0
    return CompareRow(cfg.variant, cfg.alpha, cfg.seed, r.converged, r.iterations, r.objective, gap)


def _threads() -> int:
    raw = os.environ.get("UCADMM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"UCADMM_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def compare_runs(inst: UcInstance, configs: list[SolverConfig], exact: float, threads: int = 1) -> list[CompareRow]:
    jobs = [(inst, cfg, exact) for cfg in configs]
    if threads <= 1 or len(jobs) <= 1:
        return [_compare_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        # map keeps submission order, so output does not depend on scheduling
        return list(pool.map(_compare_job, jobs))


def summarize(rows: list[CompareRow]) -> list[dict]:
    """Aggregate per (variant, alpha) in first-seen order."""
    out = []
    keys = list(dict.fromkeys((r.variant, r.alpha) for r in rows))
    for variant, alpha in keys:
        sel = [r for r in rows if r.variant == variant and r.alpha == alpha]
        gaps = np.array([r.gap for r in sel if r.converged])
        out.append(
            {
                "variant": variant,
                "alpha": alpha,
                "runs": len(sel),
                "converged": sum(r.converged for r in sel),
                "mean_iters": float(np.mean([r.iterations for r in sel])),
                "mean": float(gaps.mean()) if gaps.size else float("nan"),
                "median": float(np.median(gaps)) if gaps.size else float("nan"),
                "min": float(gaps.min()) if gaps.size else float("nan"),
                "max": float(gaps.max()) if gaps.size else float("nan"),
            }
        )
    return out


def run_compare(args) -> int:
    inst = read_instance(args.instance, args.horizon)
    try:
        exact = solve_exact_tiny(inst)
    except OracleBudgetError as exc:
        raise CliError(f"{exc}; use a smaller instance or --horizon") from None
    except ValueError as exc:
        raise CliError(f"exact solve failed: {exc}") from None
    configs = [
        _config(args, a, s, v) for v in args.variants for a in args.alphas for s in range(args.seeds)
    ]
    rows = compare_runs(inst, configs, exact.cost, _threads())
    print(f"exact optimum {exact.cost:.6f}")
    print(f"{'variant':<13} {'alpha':>6} {'seed':>4} {'conv':>5} {'iters':>6} {'objective':>16} {'gap %':>9}")
    for r in rows:
        gap = f"{r.gap:9.4f}" if r.converged else f"{'-':>9}"
        print(f"{r.variant:<13} {r.alpha:>6g} {r.seed:>4} {str(r.converged).lower():>5} "
              f"{r.iterations:>6} {r.objective:>16.6f} {gap}")
    print()
    print(f"{'variant':<13} {'alpha':>6} {'conv':>7} {'iters':>9} {'mean %':>9} {'median %':>9} "
          f"{'min %':>9} {'max %':>9}")
    for s in summarize(rows):
        print(f"{s['variant']:<13} {s['alpha']:>6g} {s['converged']:>3}/{s['runs']:<3} {s['mean_iters']:>9.1f} "
              f"{s['mean']:>9.4f} {s['median']:>9.4f} {s['min']:>9.4f} {s['max']:>9.4f}")
    return EXIT_OK


def run_generate(args) -> int:
    params = SyntheticParams(
        n_gens=args.gens,
        n_nodes=args.nodes,
        n_lines=args.lines,
        n_res=args.renewables,
        n_storage=args.storage,
        horizon=args.horizon,
        profile=args.profile,
        max_updown=args.max_updown,
        quadratic=not args.linear,
    )
    try:
        inst = generate_synthetic(params, args.seed)
        save_instance(inst, args.out)
    except (ValueError, OSError) as exc:
        raise CliError(str(exc)) from None
    print(f"wrote {args.out}: {len(inst.generators)} generators, {inst.n_nodes} nodes, T={inst.horizon}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"solve": run_solve, "compare": run_compare, "generate": run_generate}[args.command]
    try:
        return handler(args)
    except CliError as exc:
        print(f"ucadmm: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
