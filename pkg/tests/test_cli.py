import json

import pytest

from ldgpoly.cli import main
from ldgpoly.export import read_vtk_counts
from ldgpoly.fem import read_snapshot


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_writes_outputs(tmp_path, capsys):
    code, out, _ = run(["solve", "--K", "6", "--h", "0.125", "--lambda2", "1", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "converged=True" in out
    summary = json.loads((tmp_path / "summary.jsonl").read_text())
    assert summary["converged"] and summary["stable"] and summary["label"] == "Ring"
    pf = read_snapshot(tmp_path / "solve_ring_1.field")
    assert pf.lambda_sq == 1.0
    assert read_vtk_counts(tmp_path / "solve_ring_1.vtk")["points"] == pf.mesh.n_nodes
    assert (tmp_path / "solve_ring_1.svg").exists()


def test_eig_and_export(tmp_path, capsys):
    run(["solve", "--K", "4", "--h", "0.125", "--lambda2", "2", "--out", str(tmp_path), "--no-svg", "--no-vtk"], capsys)
    snap = tmp_path / "solve_ring_2.field"
    code, out, _ = run(["eig", str(snap)], capsys)
    assert code == 0 and "stable=True" in out
    code, _, _ = run(["export", str(snap), "--out", str(tmp_path / "x")], capsys)
    assert code == 0
    assert (tmp_path / "x" / "solve_ring_2.vtk").exists()


def test_sweep(tmp_path, capsys):
    code, out, _ = run(["sweep", "--K", "6", "--h", "0.125", "--range", "0.1:30:10", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "loss of stability" in out
    assert (tmp_path / "branch.csv").exists() and (tmp_path / "events.jsonl").exists()


def test_ring_and_limit(tmp_path, capsys):
    assert run(["ring", "--domain", "disc", "--h", "0.125", "--out", str(tmp_path)], capsys)[0] == 0
    assert run(["limit", "--K", "5", "--pair", "1,3", "--h", "0.125", "--out", str(tmp_path)], capsys)[0] == 0
    assert (tmp_path / "limit_13.field").exists()


@pytest.mark.parametrize(
    "args",
    [
        ["solve", "--K", "2"],
        ["solve", "--pair", "x"],
        ["frobnicate"],
        ["limit", "--K", "6", "--h", "0.125"],
        ["solve", "--seed-kind", "pinfty", "--K", "6"],
        ["recipe", "nope"],
    ],
)
def test_usage_errors(args, capsys, tmp_path):
    assert run(args + ["--out", str(tmp_path)] if args[0] != "frobnicate" else args, capsys)[0] == 2


def test_numerical_failure(tmp_path, capsys):
    code, out, _ = run(
        ["solve", "--K", "6", "--h", "0.125", "--lambda2", "2250", "--seed-kind", "zero", "--out", str(tmp_path), "--config", str(_cfg(tmp_path))],
        capsys,
    )
    assert code == 1
    assert "converged=False" in out


def _cfg(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("version = 1\n[solve]\nmax_iter = 2\n")
    return p
