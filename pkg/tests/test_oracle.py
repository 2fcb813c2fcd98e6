import itertools

import numpy as np
import pytest

from ucadmm import RenewableSpec, SyntheticParams, check_feasibility, evaluate_objective, generate_synthetic
from ucadmm.oracle import (
    DispatchModel,
    InvalidCommitment,
    OracleBudgetError,
    commitment_flags,
    dispatch_given_commitment,
    enumerate_commitments,
    solve_convexified,
    solve_exact_tiny,
)

from conftest import gen, single_node


def tiny(seed, **kw):
    params = dict(n_gens=3, horizon=6, max_updown=3)
    params.update(kw)
    return generate_synthetic(SyntheticParams(**params), seed)


def test_always_on_generator_meets_demand():
    inst = single_node([[40.0, 55.0, 70.0]], [gen(p_min=10, p_max=100, a=3, b=2, c=0.1)])
    res = dispatch_given_commitment(inst, np.ones((1, 3)))
    np.testing.assert_allclose(res.schedule.p[0], [40, 55, 70], atol=1e-7)
    assert res.cost == pytest.approx(3 * 3 + 2 * 165 + 0.1 * (40**2 + 55**2 + 70**2), rel=1e-9)
    assert check_feasibility(inst, res.schedule, tol=1e-6) == []


def test_all_off_cannot_meet_demand():
    inst = single_node([[40.0, 55.0]], [gen()])
    assert dispatch_given_commitment(inst, np.zeros((1, 2))) is None


def test_invalid_commitment_rejected():
    inst = single_node([[40.0, 55.0, 60.0]], [gen(min_uptime=2)])
    with pytest.raises(InvalidCommitment):
        dispatch_given_commitment(inst, np.array([[1.0, 0.0, 0.0]]))
    with pytest.raises(InvalidCommitment):
        dispatch_given_commitment(inst, np.array([[0.5, 1.0, 1.0]]))


def test_dispatch_matches_grid_search():
    # two always-on units, three steps: search the split of demand on a fine grid
    g0 = gen("g0", p_min=10, p_max=60, b=5, c=0.2, ramp_up=15, ramp_down=15, initial_status=1, initial_power=30)
    g1 = gen("g1", p_min=5, p_max=50, b=8, c=0.05, initial_status=1, initial_power=20)
    D = np.array([50.0, 70.0, 55.0])
    inst = single_node([D], [g0, g1])
    res = dispatch_given_commitment(inst, np.ones((2, 3)))
    grid = np.linspace(10, 60, 5001)
    best = np.inf
    # dynamic program over the grid of g0's output, g1 takes the rest
    cost = np.full(grid.size, np.inf)
    prev = np.array([30.0])
    prev_cost = np.array([0.0])
    for t in range(3):
        q = D[t] - grid
        ok = (q >= 5) & (q <= 50)
        stage = np.where(ok, 5 * grid + 0.2 * grid**2 + 8 * q + 0.05 * q**2, np.inf)
        cost = np.array([
            np.min(np.where(np.abs(prev - x) <= 15 + 1e-9, prev_cost, np.inf)) for x in grid
        ]) + stage
        prev, prev_cost = grid, cost
    best = cost.min()
    assert res.cost == pytest.approx(best, rel=1e-3)
    # interior-point solution is optimal to solver tolerance
    assert res.cost <= best * (1 + 1e-8)


def test_enumeration_count_small():
    inst = single_node([[10.0, 10.0]], [gen(min_uptime=1, min_downtime=1)])
    assert len(list(enumerate_commitments(inst))) == 4
    inst2 = single_node([[10.0, 10.0, 10.0]], [gen(min_uptime=2, min_downtime=1, initial_status=-1)])
    pats = {tuple(u[0]) for u in enumerate_commitments(inst2)}
    assert (1.0, 0.0, 1.0) not in pats and (0.0, 1.0, 1.0) in pats


def test_commitment_flags():
    g = gen(initial_status=2, initial_power=50)
    v, w = commitment_flags(g, np.array([1, 0, 1]))
    np.testing.assert_array_equal(v, [0, 0, 1])
    np.testing.assert_array_equal(w, [0, 1, 0])


def test_exact_tiny_prefers_off_when_renewables_cover():
    inst = single_node(
        [[5.0, 6.0]],
        [gen(p_min=0, a=1e6)],
        [RenewableSpec("w", "n0", 10.0, np.array([1.0, 1.0]))],
    )
    ex = solve_exact_tiny(inst)
    assert not ex.schedule.u.any()
    assert ex.cost == 0


def test_exact_tiny_equals_full_enumeration():
    for seed in range(4):
        inst = tiny(seed, horizon=5, n_storage=seed % 2)
        ex = solve_exact_tiny(inst)
        model = DispatchModel(inst)
        costs = [dispatch_given_commitment(inst, u, model) for u in enumerate_commitments(inst)]
        best = min(c.cost for c in costs if c is not None)
        assert ex.cost == pytest.approx(best, rel=1e-9)
        assert check_feasibility(inst, ex.schedule, tol=1e-6) == []
        assert evaluate_objective(inst, ex.schedule) == pytest.approx(ex.cost, rel=1e-12)


def test_exact_tiny_beats_random_feasible_schedules():
    inst = tiny(42)
    ex = solve_exact_tiny(inst)
    pats = list(enumerate_commitments(inst))
    rng = np.random.default_rng(0)
    model = DispatchModel(inst)
    for i in rng.choice(len(pats), size=min(100, len(pats)), replace=False):
        res = dispatch_given_commitment(inst, pats[i], model)
        if res is not None:
            assert ex.cost <= res.cost + 1e-6


def test_budget_guard():
    with pytest.raises(OracleBudgetError):
        solve_exact_tiny(tiny(0, n_gens=5))
    with pytest.raises(OracleBudgetError):
        solve_exact_tiny(tiny(0, horizon=11))


def test_convexified_tight_on_convex_instance():
    gens = [gen("g0", p_min=0, p_max=80, b=10, c=0.05), gen("g1", p_min=0, p_max=80, b=14, c=0.01)]
    inst = single_node([[30.0, 90.0, 120.0, 60.0]], gens)
    relax = solve_convexified(inst)
    ex = solve_exact_tiny(inst)
    assert relax.cost == pytest.approx(ex.cost, rel=1e-6)


def test_convexified_is_lower_bound():
    for seed in range(5):
        inst = tiny(seed + 10, n_storage=seed % 2)
        assert solve_convexified(inst).cost <= solve_exact_tiny(inst).cost + 1e-6


def test_convexified_zero_demand():
    inst = single_node([[0.0, 0.0, 0.0]], [gen(p_min=20, a=5, start_cost=10)])
    assert solve_convexified(inst).cost == pytest.approx(0, abs=1e-6)


def test_network_instance(small_network):
    ex = solve_exact_tiny(small_network)
    assert check_feasibility(small_network, ex.schedule, tol=1e-6) == []
    assert solve_convexified(small_network).cost <= ex.cost + 1e-6
