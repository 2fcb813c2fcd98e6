"""Speed against quality across the penalty growth factor.

Solves five tiny instances with three seeds for each alpha and reports the
mean sweep count and the mean gap to the exact optimum, for both the
sequential (Gauss-Seidel) sweep and the parallel exchange sweep.
"""

from ucadmm.experiments import run_suite, suite_summary, tiny_suite
from ucadmm.oracle import solve_exact_tiny

insts = tiny_suite(5)
exact = [solve_exact_tiny(i).cost for i in insts]
print(f"{'variant':<13} {'alpha':>5} {'conv':>6} {'sweeps':>7} {'mean gap %':>11} {'max gap %':>10}")
for variant in ("gauss-seidel", "exchange"):
    for alpha in (1.01, 1.05, 1.1, 1.2):
        s = suite_summary(run_suite(insts, alphas=(alpha,), exact=exact, variant=variant))
        print(f"{variant:<13} {alpha:>5} {s['converged']:>3}/{s['runs']:<2} {s['mean_iters']:>7.1f} "
              f"{s['mean']:>11.4f} {s['max']:>10.4f}")
