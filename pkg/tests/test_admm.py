import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucadmm import (
    SolverConfig,
    SyntheticParams,
    check_feasibility,
    exchange_iteration,
    gauss_seidel_iteration,
    generate_synthetic,
    init_state,
    load_instance,
    residual_demand,
    rho_at,
    run_increasing_rho,
    update_multipliers,
)
from ucadmm.admm import default_epsilon, default_lambda_range
from ucadmm.experiments import convex_instance
from ucadmm.oracle import solve_convexified, solve_exact_tiny

from conftest import gen, single_node


def test_config_validation():
    for bad in (dict(rho0=0), dict(alpha=0.9), dict(m=0), dict(variant="jacobi"), dict(lambda_range=(2, 1))):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_default_epsilon_and_lambda_range():
    inst = single_node([[10.0, 30.0], [20.0, 5.0]], [gen(b=4, c=0.5, p_max=10)], nodes=["a", "b"])
    assert default_epsilon(inst) == pytest.approx(1e-3 * (20 + 30))
    assert default_lambda_range(inst) == (0.0, pytest.approx(4 + 2 * 0.5 * 10))


def test_init_state_deterministic(small_network):
    a = init_state(small_network, SolverConfig(seed=3))
    b = init_state(small_network, SolverConfig(seed=3))
    c = init_state(small_network, SolverConfig(seed=4))
    np.testing.assert_array_equal(a.lam, b.lam)
    assert not np.array_equal(a.lam, c.lam)
    assert a.rho == 1e-4 and a.k == 0
    assert not a.schedule.u.any() and not a.schedule.p.any()
    np.testing.assert_array_equal(a.rd, small_network.demand)


def test_init_state_pinned_prices(one_gen):
    st_ = init_state(one_gen, SolverConfig(lambda_range=(0.0, 0.0)))
    assert not st_.lam.any()


def test_update_multipliers_arithmetic(one_gen):
    s = init_state(one_gen, SolverConfig(rho0=2.0, lambda_range=(1.0, 1.0)))
    s.rd = np.array([[3.0]])
    update_multipliers(s)
    assert s.lam[0, 0] == 7.0
    update_multipliers(s, scale=0.5)
    assert s.lam[0, 0] == 10.0


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1.0, 1.3), st.integers(1, 5), st.integers(1, 60))
def test_rho_trajectory_closed_form(rho0, alpha, m, iters):
    inst = single_node([[50.0, 60.0]], [gen()])
    cfg = SolverConfig(rho0=rho0, alpha=alpha, m=m, max_iters=iters, epsilon=1e-300, trace=True)
    res = run_increasing_rho(inst, cfg)
    for rec in res.trace:
        # record k carries the rho used during sweep k (0-based: k - 1)
        assert rec.rho == pytest.approx(rho_at(cfg, rec.k - 1), rel=1e-12)


def test_no_lines_leaves_injections_zero():
    inst = generate_synthetic(SyntheticParams(n_gens=3, n_nodes=2, horizon=4), 0)
    s = init_state(inst, SolverConfig())
    for _ in range(5):
        gauss_seidel_iteration(s, inst)
    assert not s.schedule.inj.any() and s.schedule.f.size == 0
    assert s.inner_iterations == 0


def test_single_unit_exchange_equals_gauss_seidel():
    # one participant: the exchange center p + RD equals the sequential residual
    inst = single_node([[40.0, 70.0, 20.0]], [gen(p_min=10, a=20, b=5, c=0.05)])
    cfg = SolverConfig(seed=1)
    a = run_increasing_rho(inst, cfg)
    b = run_increasing_rho(inst, SolverConfig(seed=1, variant="exchange"))
    np.testing.assert_allclose(a.schedule.p, b.schedule.p, rtol=0, atol=1e-9)
    assert a.iterations == b.iterations


def test_exchange_identical_units_stay_symmetric():
    inst = single_node([[60.0, 80.0]], [gen("g0", b=5, c=0.1), gen("g1", b=5, c=0.1)])
    s = init_state(inst, SolverConfig(rho0=0.1, alpha=1.0))
    for _ in range(50):
        exchange_iteration(s, inst)
    np.testing.assert_allclose(s.schedule.p[0], s.schedule.p[1], atol=1e-12)
    np.testing.assert_allclose(s.schedule.p[0], [30.0, 40.0], atol=1e-3)


def test_gauss_seidel_and_exchange_agree_on_convex_instance():
    inst = convex_instance(2)
    rel = solve_convexified(inst).cost
    eps = 1e-6 * float(inst.demand.sum())
    for variant in ("gauss-seidel", "exchange"):
        r = run_increasing_rho(inst, SolverConfig(rho0=1e-2, alpha=1.0, epsilon=eps, max_iters=5000, variant=variant))
        assert r.converged
        assert r.objective == pytest.approx(rel, rel=1e-4)


def test_every_iterate_is_unit_feasible(small_network):
    seen = []

    def check(state, rec):
        bad = check_feasibility(small_network, state.schedule, tol=1e-9, exclude=("nodal_balance",))
        assert bad == [], bad[:3]
        np.testing.assert_allclose(state.rd, residual_demand(small_network, state.schedule), atol=1e-9)
        seen.append(rec.k)

    for variant in ("gauss-seidel", "exchange"):
        seen.clear()
        res = run_increasing_rho(small_network, SolverConfig(variant=variant, alpha=1.1), callback=check)
        assert seen == list(range(1, res.iterations + 1))
        if res.converged:
            assert res.rd_l1 <= res.config.epsilon


def test_converged_run_is_feasible_up_to_epsilon():
    inst = load_instance_bundled("two_node")
    res = run_increasing_rho(inst, SolverConfig(alpha=1.1))
    assert res.converged
    assert check_feasibility(inst, res.schedule, tol=1e-9, exclude=("nodal_balance",)) == []
    assert np.abs(residual_demand(inst, res.schedule)).sum() <= default_epsilon(inst)


def test_trace_records():
    inst = load_instance_bundled("tiny")
    res = run_increasing_rho(inst, SolverConfig(alpha=1.1))
    assert [r.k for r in res.trace] == list(range(1, res.iterations + 1))
    last = res.trace[-1]
    assert last.rd_l1 == pytest.approx(res.rd_l1)
    assert last.true_obj == pytest.approx(res.objective)
    assert all(r.rd_linf <= r.rd_l1 + 1e-12 for r in res.trace)


def test_constant_small_rho_stalls_but_schedule_converges():
    inst = load_instance_bundled("tiny")
    flat = run_increasing_rho(inst, SolverConfig(alpha=1.0, max_iters=300, trace=False))
    grow = run_increasing_rho(inst, SolverConfig(alpha=1.1, trace=False))
    assert not flat.converged and flat.iterations == 300
    assert grow.converged


def test_rho_max_stops_run(one_gen):
    res = run_increasing_rho(one_gen, SolverConfig(rho0=1.0, alpha=10.0, rho_max=50.0, epsilon=1e-300))
    assert not res.converged and res.iterations == 2


def test_alpha_trend_endpoints():
    # fixed suite of 10 instances, 3 seeds: fast growth costs accuracy, saves sweeps
    from ucadmm.experiments import run_suite, suite_summary, tiny_suite

    insts = tiny_suite(10)
    exact = [solve_exact_tiny(i).cost for i in insts]
    slow = suite_summary(run_suite(insts, alphas=(1.01,), exact=exact))
    fast = suite_summary(run_suite(insts, alphas=(1.2,), exact=exact))
    assert fast["mean_iters"] < slow["mean_iters"]
    assert slow["mean"] <= fast["mean"]


def load_instance_bundled(name):
    from importlib import resources

    with (resources.files("ucadmm") / "data" / f"{name}.json").open("rb") as fh:
        return load_instance(fh)
