import math

import numpy as np
import pytest

from ldgpoly.continuation import (
    BranchRecord,
    SolutionBranch,
    StepPolicy,
    classify_branch,
    corner_rotations,
    detect_transitions,
    energy_jumps,
    find_bd_states,
    is_ring,
    orbit,
    ring_state,
    splay_corners,
    sweep,
    symmetry_defect,
    transform_field,
)
from ldgpoly.fem import PField, l2_distance, newton_solve
from ldgpoly.geometry import make_domain, triangulate
from ldgpoly.seeds import pinfty_interpolant, ring_interpolant


@pytest.fixture(scope="module")
def hex16():
    return triangulate(make_domain("regular", K=6), 1 / 16)


@pytest.fixture(scope="module")
def hex_states_2250(hex16):
    out = {}
    for pair in [(1, 4), (1, 3)]:
        pf, rep = newton_solve(pinfty_interpolant(hex16, pair), 2250.0)
        assert rep.converged
        out[pair] = pf
    return out


def test_group_action_composes(hex_mesh_coarse, rng):
    pf = PField(hex_mesh_coarse, rng.standard_normal((hex_mesh_coarse.n_nodes, 2)))
    twice = transform_field(transform_field(pf, "rot", 1), "rot", 1)
    assert np.allclose(twice.values, transform_field(pf, "rot", 2).values)
    back = transform_field(transform_field(pf, "ref", 2), "ref", 2)
    assert np.allclose(back.values, pf.values)
    with pytest.raises(ValueError):
        transform_field(pf, "glide", 0)


def test_ring_state_is_invariant(hex_mesh_coarse):
    pf = ring_state(hex_mesh_coarse, 50.0)
    assert is_ring(pf)
    for kind in ("rot", "ref"):
        for k in range(6):
            assert symmetry_defect(pf, kind, k) < 1e-10
    assert len(orbit(pf)) == 1


def test_corner_rotations_of_limit_data(hex16):
    pf = pinfty_interpolant(hex16, (1, 4))
    rot = corner_rotations(pf)
    splay = np.isclose(rot, 2 * math.pi / 6 - math.pi, atol=0.3)
    bend = np.isclose(rot, 2 * math.pi / 6, atol=0.3)
    assert splay.sum() == 2 and bend.sum() == 4
    assert splay_corners(pf) == [1, 4]


def test_classification_at_large_lambda(hex_states_2250):
    lab = classify_branch(hex_states_2250[(1, 4)])
    assert lab.label == "Para" and lab.pair_id == "1-4"
    lab = classify_branch(hex_states_2250[(1, 3)])
    assert lab.label == "Meta" and lab.pair == (1, 3)


def test_orbit_sizes(hex_states_2250):
    assert len(orbit(hex_states_2250[(1, 4)])) == 3
    assert len(orbit(hex_states_2250[(1, 3)])) == 6


def test_sweep_and_transition(hex_mesh_coarse):
    seed = ring_interpolant(hex_mesh_coarse)
    br = sweep(seed, 0.1, 30.0, StepPolicy(step=5.0, max_step=10.0), label="Ring")
    br.check()
    assert br.lambdas[0] == 0.1 and br.lambdas[-1] == pytest.approx(30.0)
    assert not br.truncated
    assert br.mu[0] > 0 and br.mu[-1] < 0
    ev = detect_transitions(br, rel_width=1e-3)
    assert len(ev) == 1
    e = ev[0]
    assert e.direction == "loss"
    assert e.mu_low > 0 >= e.mu_high
    assert (e.lambda_high - e.lambda_low) <= 1e-3 * e.lambda_high


def test_sweep_downward_with_stop(hex_mesh_coarse):
    seed = ring_interpolant(hex_mesh_coarse)
    br = sweep(seed, 20.0, 5.0, StepPolicy(step=5.0), stop=lambda pf: pf.lambda_sq < 12)
    assert br.lambdas[0] == 20.0
    assert np.all(np.diff(br.lambdas) < 0)
    assert "stop condition" in br.truncated


def test_sweep_rejects_empty_range(hex_mesh_coarse):
    with pytest.raises(ValueError):
        sweep(ring_interpolant(hex_mesh_coarse), 1.0, 1.0)


def test_record_every_thins(hex_mesh_coarse):
    br = sweep(ring_interpolant(hex_mesh_coarse), 0.1, 20.0, StepPolicy(step=1.0, grow=1.0), record_every=5.0)
    assert 4 <= len(br.records) <= 6


def _fake_branch(lams, mus, energies=None):
    energies = energies if energies is not None else lams
    recs = [BranchRecord(l, None, e, 0.0, 0.0, m, m > 0) for l, m, e in zip(lams, mus, energies)]
    return SolutionBranch("x", records=recs)


def test_unrefined_transitions():
    br = _fake_branch([1, 2, 3, 4, 5], [1.0, 0.5, -0.1, -0.2, 0.3])
    ev = detect_transitions(br, refine=False)
    assert [(e.lambda_low, e.lambda_high, e.direction) for e in ev] == [(2, 3, "loss"), (4, 5, "gain")]


def test_branch_check():
    with pytest.raises(ValueError):
        _fake_branch([1, 3, 2], [1, 1, 1]).check()
    br = _fake_branch([1, 2], [1, 1])
    br.records[0].stable = False
    with pytest.raises(ValueError):
        br.check()


def test_energy_jumps():
    lam = np.arange(10.0)
    E = lam.copy()
    E[6:] += 50
    bound, bad = energy_jumps(_fake_branch(lam, np.ones(10), E))
    assert bad == [6]
    assert bound == pytest.approx(51.0)


def test_bd_states_on_hexagon(hex16):
    ring = ring_state(hex16, 40.0)
    states = find_bd_states(ring, 40.0)
    assert len(states) == 3
    for pf in states:
        lab = classify_branch(pf)
        assert lab.label == "BD"
        assert len(lab.pair) == 2
        assert l2_distance(pf, ring) > 1e-3
    # the two aligned edges are opposite
    for pf in states:
        i, j = classify_branch(pf).pair
        assert (j - i) % 6 == 3
