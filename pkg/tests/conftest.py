import numpy as np
import pytest

from ucadmm import GeneratorSpec, LineSpec, RenewableSpec, Schedule, StorageSpec, UcInstance


def gen(id="g0", node="n0", **kw):
    base = dict(p_min=0.0, p_max=100.0, a=0.0, b=10.0, c=0.0, start_cost=0.0)
    base.update(kw)
    return GeneratorSpec(id=id, node=node, **base)


def single_node(demand, gens=(), res=(), sto=(), nodes=None, lines=()):
    demand = np.atleast_2d(np.asarray(demand, dtype=float))
    nodes = nodes or [f"n{i}" for i in range(demand.shape[0])]
    return UcInstance(demand.shape[1], nodes, demand, list(gens), list(res), list(sto), list(lines))


@pytest.fixture
def one_gen():
    return single_node([[100.0]], [gen(p_min=10, a=10, b=2, c=0.01)])


@pytest.fixture
def small_network():
    """Two nodes, one line, one generator each, a renewable and a storage unit."""
    T = 4
    return UcInstance(
        T,
        ["a", "b"],
        np.array([[60.0, 80.0, 90.0, 70.0], [40.0, 30.0, 50.0, 60.0]]),
        [
            gen("g0", "a", p_min=20, p_max=150, a=50, b=20, c=0.02, start_cost=100, min_uptime=2),
            gen("g1", "b", p_min=10, p_max=80, a=20, b=30, c=0.01, start_cost=50, ramp_up=40,
                ramp_down=40, startup_limit=40, shutdown_limit=40),
        ],
        [RenewableSpec("r0", "b", 30.0, np.array([0.2, 0.5, 0.9, 0.1]))],
        [StorageSpec("s0", "a", 10.0, 10.0, 0.0, 30.0, 0.9, 0.9, 5.0)],
        [LineSpec("l0", "a", "b", -50.0, 50.0)],
    )


__all__ = ["gen", "single_node", "Schedule"]


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the session


def pytest_configure(config):
    config._criteria = {}


@pytest.fixture
def report_criterion(request):
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        request.config._criteria[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criteria", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
