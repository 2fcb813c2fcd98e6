import json
import subprocess
import sys

import pytest

from ucadmm.cli import main, read_instance
from ucadmm.instance_io import load_schedule, read_trace


def run(*argv, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "ucadmm", *argv], capture_output=True, text=True, cwd=cwd, timeout=600
    )


def test_solve_bundled_writes_outputs(tmp_path, capsys):
    out, trace = tmp_path / "s.json", tmp_path / "t.csv"
    code = main(["solve", "--instance", "bundled:tiny", "--out", str(out), "--trace", str(trace)])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("converged=true iterations=")
    assert "objective=" in line and "rd_l1=" in line and "wall=" in line
    inst = read_instance("bundled:tiny")
    sched = load_schedule(out)
    assert sched.p.shape == (len(inst.generators), inst.horizon)
    rows = read_trace(trace)
    assert rows[-1].k == int(line.split("iterations=")[1].split()[0])


def test_not_converged_exit_code(tmp_path):
    code = main(["solve", "--instance", "bundled:tiny", "--alpha", "1", "--max-iters", "20",
                 "--out", str(tmp_path / "s.json"), "--trace", str(tmp_path / "t.csv")])
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--instance", "bundled:tiny", "--alpha", "0.9"],
        ["solve", "--instance", "no/such/file.json"],
        ["solve", "--instance", "bundled:nope"],
        ["solve", "--instance", "bundled:tiny", "--horizon", "99"],
        ["solve", "--instance", "bundled:tiny", "--rho0", "-1"],
        ["frobnicate"],
    ],
)
def test_error_exit_code(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv + (["--out", str(tmp_path / "s.json")] if argv[0] == "solve" else [])))
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"horizon": 2,\n "nodes": [}')
    assert main(["solve", "--instance", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "line 2" in err


def test_horizon_truncation(tmp_path):
    out = tmp_path / "s.json"
    assert main(["solve", "--instance", "bundled:tiny", "--horizon", "3", "--out", str(out),
                 "--trace", str(tmp_path / "t.csv")]) == 0
    assert load_schedule(out).p.shape[1] == 3


def test_outputs_byte_identical(tmp_path):
    args = ["solve", "--instance", "bundled:two_node", "--seed", "5", "--alpha", "1.1"]
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        assert run(*args, cwd=tmp_path / d).returncode == 0
    for name in ("schedule.json", "trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_roundtrip(tmp_path):
    out = tmp_path / "g.json"
    assert main(["generate", "--out", str(out), "--gens", "3", "--nodes", "2", "--lines", "1",
                 "--storage", "1", "--horizon", "6", "--seed", "4"]) == 0
    inst = read_instance(str(out))
    assert inst.horizon == 6 and len(inst.lines) == 1
    assert main(["generate", "--out", str(out), "--gens", "0"]) == 1


def test_compare_prints_runs_and_summary(capsys):
    code = main(["compare", "--instance", "bundled:tiny", "--seeds", "2", "--alphas", "1.05,1.2",
                 "--variants", "gauss-seidel,exchange"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("exact optimum")
    runs = [l for l in out if l.startswith(("gauss-seidel ", "exchange "))]
    # 2 variants x 2 alphas x 2 seeds, then 4 summary rows
    assert len(runs) == 8 + 4
    summary = runs[8:]
    assert [s.split()[:2] for s in summary] == [
        ["gauss-seidel", "1.05"], ["gauss-seidel", "1.2"], ["exchange", "1.05"], ["exchange", "1.2"]
    ]


def test_compare_budget_error(capsys):
    assert main(["compare", "--instance", "bundled:network24"]) == 1
    assert "--horizon" in capsys.readouterr().err


def test_compare_parallel_matches_serial(capsys, monkeypatch):
    argv = ["compare", "--instance", "bundled:tiny", "--seeds", "2", "--alphas", "1.1", "--variants", "gauss-seidel"]
    main(argv)
    serial = [l for l in capsys.readouterr().out.splitlines() if l.startswith("gauss")]
    monkeypatch.setenv("UCADMM_THREADS", "2")
    main(argv)
    parallel = [l for l in capsys.readouterr().out.splitlines() if l.startswith("gauss")]
    assert serial == parallel
