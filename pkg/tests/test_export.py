import json

import numpy as np
import pytest

from ldgpoly.continuation import BifurcationEvent, BranchRecord, SolutionBranch
from ldgpoly.export import (
    BRANCH_COLUMNS,
    append_summary,
    point_biaxiality,
    read_branch_csv,
    read_vtk_counts,
    write_branch_csv,
    write_events,
    write_vtk,
)
from ldgpoly.fem import PField, solve_linear_limit
from ldgpoly.plotting import director_samples, plot_branches, plot_field
from ldgpoly.tensor import biaxiality, reconstruct_q


@pytest.fixture
def field(hex_mesh_coarse):
    return solve_linear_limit(hex_mesh_coarse)


def test_point_biaxiality_matches_tensor(field):
    b = point_biaxiality(field)
    for i in range(0, field.mesh.n_nodes, 17):
        assert b[i] == pytest.approx(biaxiality(reconstruct_q(field.values[i])), abs=1e-12)


def test_vtk_structure(tmp_path, field):
    p = tmp_path / "f.vtk"
    write_vtk(field, p)
    info = read_vtk_counts(p)
    assert info["points"] == field.mesh.n_nodes
    assert info["cells"] == len(field.mesh.triangles)
    assert info["max_index"] == field.mesh.n_nodes - 1
    assert info["scalars"] == ["p11", "p12", "s", "s2", "beta"]
    assert info["vectors"] == "director"
    assert "np.float64" not in p.read_text()


def test_vtk_rejects_other_files(tmp_path):
    p = tmp_path / "x.vtk"
    p.write_text("nope\n")
    with pytest.raises(ValueError):
        read_vtk_counts(p)


def _branch(field):
    recs = [BranchRecord(l, field, 2 * l, 0.1 * l, -0.2, 1 - l, 1 - l > 0) for l in (0.5, 1.5, 2.5)]
    return SolutionBranch("Ring", "", recs)


def test_branch_csv_round_trip(tmp_path, field):
    p = tmp_path / "b.csv"
    b2 = SolutionBranch("Para", "1-4", _branch(field).records[:1])
    write_branch_csv([_branch(field), b2], p)
    rows = read_branch_csv(p)
    assert p.read_text().splitlines()[0] == ",".join(BRANCH_COLUMNS)
    assert len(rows) == 4
    assert rows[1]["lambda_sq"] == 1.5 and rows[1]["stable"] is False
    assert rows[3]["branch_label"] == "Para" and rows[3]["pair_id"] == "1-4"


def test_events_and_summary(tmp_path):
    p = tmp_path / "e.jsonl"
    write_events([BifurcationEvent(10.0, 10.5, "Ring", "loss", 1e-3, -1e-3)], p)
    e = json.loads(p.read_text())
    assert e["direction"] == "loss" and e["lambda_low"] == 10.0
    s = tmp_path / "s.jsonl"
    append_summary(s, a=np.float64(1.5), b="x")
    append_summary(s, a=2)
    lines = [json.loads(x) for x in s.read_text().splitlines()]
    assert lines == [{"a": 1.5, "b": "x"}, {"a": 2}]


def test_director_samples_subsample(field):
    idx = director_samples(field, 50)
    assert 10 < len(idx) < field.mesh.n_nodes
    assert len(np.unique(idx)) == len(idx)


def test_svg_is_reproducible(tmp_path, field):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    plot_field(field, a, "ring")
    plot_field(field, b, "ring")
    assert a.read_text().startswith("<?xml")
    assert a.read_bytes() == b.read_bytes()


def test_branch_plot(tmp_path, field):
    p = tmp_path / "e.svg"
    plot_branches([_branch(field)], p, "energy")
    assert p.stat().st_size > 1000
    with pytest.raises(ValueError):
        plot_branches([_branch(field)], tmp_path / "x.svg", "volume")
