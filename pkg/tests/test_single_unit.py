import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ucadmm import SubproblemInfeasible, solve_1uc
from ucadmm.model import Schedule, check_feasibility
from ucadmm.single_unit import build_stage_cost, unit_penalised_cost

from conftest import gen, single_node
from oracles import brute_force_1uc, random_unit


def test_stage_cost_without_penalty():
    g = gen(a=10, b=3, c=0.5, p_min=1, p_max=9)
    on, off = build_stage_cost(g, 0.0, 7.0, 0.0)
    assert on.pieces == [(1, 9, 0.5, 3, 10)] and off == 0


def test_stage_cost_penalty_only():
    g = gen(b=0.0, p_max=10)
    on, off = build_stage_cost(g, 0.0, 3.0, 2.0)
    for p in np.linspace(0, 10, 11):
        assert on(p) == pytest.approx((3 - p) ** 2)
    assert off == 9


@given(st.floats(0, 1), st.floats(0, 100), st.floats(-50, 50), st.floats(0, 500))
def test_stage_cost_quadratic_coefficient(c, rho, lam, r):
    on, _ = build_stage_cost(gen(c=c), lam, r, rho)
    assert on.cs[0][0] == c + rho / 2


def test_high_price_runs_flat_out():
    g = gen(p_min=10, p_max=80, a=5, b=1)
    res = solve_1uc(g, [1000.0, 1000.0], [0.0, 0.0], 0.0)
    np.testing.assert_array_equal(res.u, [1, 1])
    np.testing.assert_array_equal(res.p, [80, 80])


def test_no_price_stays_off():
    res = solve_1uc(gen(a=5), np.zeros(4), np.zeros(4), 0.0)
    assert res.value == 0 and not res.u.any()


def test_tie_prefers_off():
    # running at zero cost and zero price ties with staying off
    res = solve_1uc(gen(a=0, b=0, p_min=0), np.zeros(3), np.zeros(3), 0.0)
    assert not res.u.any()


def test_forced_on_by_history():
    g = gen(a=100, p_min=20, min_uptime=3, initial_status=1, initial_power=20)
    res = solve_1uc(g, np.zeros(4), np.zeros(4), 0.0)
    np.testing.assert_array_equal(res.u, [1, 1, 0, 0])


def test_infeasible_initial_state():
    # on at p0 = 100 but may only ramp down by 10 and must be below SD = 20 to stop
    g = gen(p_min=0, p_max=100, ramp_down=10, ramp_up=10, shutdown_limit=20, initial_status=5, initial_power=100)
    res = solve_1uc(g, np.zeros(2), np.zeros(2), 1.0)
    assert res.u.all() and res.p[0] >= 90
    g2 = gen(p_min=95, p_max=100, ramp_down=10, shutdown_limit=95, min_uptime=1, initial_status=5, initial_power=100,
             startup_limit=95)
    g2.p_min = 200  # break the unit on purpose: no output level is reachable
    with pytest.raises(SubproblemInfeasible):
        solve_1uc(g2, np.zeros(2), np.zeros(2), 1.0)


def check_unit_solution(g, lam, r, rho, res):
    inst = single_node(np.zeros((1, len(lam))), [g])
    s = Schedule.zeros(inst)
    s.u[0], s.v[0], s.w[0], s.p[0] = res.u, res.v, res.w, res.p
    assert check_feasibility(inst, s, tol=1e-9, exclude=("nodal_balance",)) == []
    assert np.all(res.p[res.u == 0] == 0)
    val = unit_penalised_cost(g, res.u, res.v, res.p, lam, r, rho)
    assert val == pytest.approx(res.value, rel=1e-9, abs=1e-7)


def test_matches_brute_force_on_random_units():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(40):
        g = random_unit(rng)
        T = int(rng.integers(1, 7))
        lam = rng.uniform(0, 80, T)
        r = rng.uniform(0, g.p_max, T)
        rho = float(rng.choice([0.0, 0.01, 0.5, 3.0]))
        ref = brute_force_1uc(g, lam, r, rho)
        try:
            res = solve_1uc(g, lam, r, rho)
        except SubproblemInfeasible:
            assert ref == np.inf
            continue
        check_unit_solution(g, lam, r, rho, res)
        worst = max(worst, abs(res.value - ref) / max(1.0, abs(ref)))
    assert worst <= 1e-6


def test_more_price_never_less_energy():
    rng = np.random.default_rng(5)
    for _ in range(60):
        g = random_unit(rng, cold_only=True)
        T = int(rng.integers(2, 7))
        lam = rng.uniform(0, 80, T)
        r = rng.uniform(0, g.p_max, T)
        base = solve_1uc(g, lam, r, 0.3)
        more = solve_1uc(g, lam + rng.uniform(0.1, 20), r, 0.3)
        assert more.p.sum() >= base.p.sum() - 1e-6 * g.p_max


def test_length_mismatch():
    with pytest.raises(ValueError):
        solve_1uc(gen(), np.zeros(3), np.zeros(2), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_units_feasible_and_self_consistent(seed):
    rng = np.random.default_rng(seed)
    g = random_unit(rng)
    T = int(rng.integers(1, 25))
    lam, r = rng.uniform(-20, 100, T), rng.uniform(0, g.p_max, T)
    rho = float(rng.uniform(0, 5))
    try:
        res = solve_1uc(g, lam, r, rho)
    except SubproblemInfeasible:
        return
    check_unit_solution(g, lam, r, rho, res)
