"""Why the penalty has to grow.

With a constant small penalty the binary commitment keeps flipping and the
residual demand never settles. Multiplying the penalty by alpha after every
sweep eventually makes any imbalance too expensive, and the run converges.
"""

from ucadmm import SolverConfig, run_increasing_rho
from ucadmm.admm import default_epsilon
from ucadmm.cli import read_instance

inst = read_instance("bundled:tiny")
eps = default_epsilon(inst)
print(f"stopping tolerance: sum |RD| <= {eps:.3g}")

for alpha in (1.0, 1.01, 1.1, 1.2):
    r = run_increasing_rho(inst, SolverConfig(alpha=alpha, max_iters=1500))
    picks = [rec for rec in r.trace if rec.k in (1, 10, 50, 200, 1000) or rec is r.trace[-1]]
    path = "  ".join(f"k={rec.k}: {rec.rd_l1:.3g}" for rec in picks)
    print(f"alpha={alpha:<5} converged={str(r.converged):<5} objective={r.objective:10.2f}  residual  {path}")
