import numpy as np
import pytest

from ldgpoly.fem import (
    PField,
    apply_dirichlet,
    assemble_jacobian,
    assemble_residual,
    branch_measures,
    discretization,
    energy,
    free_block,
    l2_distance,
    newton_solve,
    nodal_set,
    read_snapshot,
    solve_linear_limit,
    triangle_zeros,
    write_snapshot,
    zero_interior,
)
from ldgpoly.geometry import make_domain, triangulate
from ldgpoly.seeds import ring_interpolant
from ldgpoly.tensor import DEFAULT_CONSTANTS

A = DEFAULT_CONSTANTS.boundary_amplitude


def smooth_direction(mesh):
    """O(1) perturbation vanishing on the boundary."""
    d = discretization(mesh)
    x, y = mesh.nodes.T
    v = np.column_stack([np.cos(3 * x) * np.sin(2 * y + 0.3), np.sin(x - y) + 0.5]).ravel()
    out = np.zeros(d.ndof)
    out[d.free_dofs] = v[d.free_dofs]
    return out


def test_pfield_is_read_only(hex_mesh_coarse):
    pf = zero_interior(hex_mesh_coarse)
    with pytest.raises(ValueError):
        pf.values[0, 0] = 1.0
    with pytest.raises(ValueError):
        PField(hex_mesh_coarse, np.zeros((3, 2)))


def test_stiffness_and_mass(hex_mesh_coarse):
    d = discretization(hex_mesh_coarse)
    one = np.ones(hex_mesh_coarse.n_nodes)
    assert np.allclose(d.stiffness @ one, 0.0, atol=1e-12)
    assert one @ (d.mass @ one) == pytest.approx(hex_mesh_coarse.domain.area)
    x = hex_mesh_coarse.nodes[:, 0]
    # int |grad x|^2 = area
    assert x @ (d.stiffness @ x) == pytest.approx(hex_mesh_coarse.domain.area)
    assert abs(d.stiffness - d.stiffness.T).max() < 1e-14


def test_zero_interior_has_boundary_data(hex_mesh_coarse):
    pf = zero_interior(hex_mesh_coarse)
    assert np.all(pf.values[hex_mesh_coarse.free] == 0)
    s_b = np.linalg.norm(pf.values[hex_mesh_coarse.boundary], axis=1)
    on_edge = hex_mesh_coarse.vertex_index == 0
    assert np.allclose(s_b[on_edge], A)
    # the director turns by 60 degrees at a corner, so p turns by 120
    assert np.allclose(s_b[~on_edge], A * np.cos(np.pi / 3))


def test_residual_of_ring_interpolant_shrinks():
    # the closed-form ring state solves the linear problem exactly
    norms = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        m = triangulate(make_domain("regular", K=6), h)
        r = assemble_residual(ring_interpolant(m), 0.0)
        sol = solve_linear_limit(m)
        norms.append(l2_distance(ring_interpolant(m), sol))
        assert np.abs(r).max() < 0.5
    assert norms[2] < norms[0] / 4


@pytest.mark.parametrize("lam", [1.0, 100.0])
def test_jacobian_matches_finite_differences(hex_mesh_coarse, lam):
    pf = ring_interpolant(hex_mesh_coarse)
    v = smooth_direction(hex_mesh_coarse)
    J = assemble_jacobian(pf, lam)
    d = discretization(hex_mesh_coarse)
    Jv = J @ v
    R0 = assemble_residual(pf, lam)
    errs = []
    for t in (1e-4, 1e-5, 1e-6):
        Rt = assemble_residual(pf.with_values(pf.flat() + t * v), lam)
        errs.append(np.linalg.norm(((Rt - R0) / t - Jv)[d.free_dofs]))
    # first-order decay of the one-sided quotient
    assert 0.05 < errs[1] / errs[0] < 0.2
    assert 0.05 < errs[2] / errs[1] < 0.2


def test_jacobian_symmetric_with_identity_rows(hex_mesh_coarse):
    pf = ring_interpolant(hex_mesh_coarse)
    J = assemble_jacobian(pf, 50.0)
    assert abs(J - J.T).max() < 1e-13
    d = discretization(hex_mesh_coarse)
    fixed = d.fixed_dofs
    assert np.allclose(J[fixed][:, fixed].toarray(), np.eye(len(fixed)))


def test_energy_gradient_is_twice_residual(hex_mesh_coarse):
    pf = ring_interpolant(hex_mesh_coarse)
    v = smooth_direction(hex_mesh_coarse)
    lam = 30.0
    g = 2 * assemble_residual(pf, lam) @ v
    t = 1e-4
    fd = (energy(pf.with_values(pf.flat() + t * v), lam) - energy(pf.with_values(pf.flat() - t * v), lam)) / (2 * t)
    assert fd == pytest.approx(g, rel=1e-7)


def test_energy_of_constant_state():
    m = triangulate(make_domain("regular", K=4), 1 / 8)
    pf = PField(m, np.tile([A, 0.0], (m.n_nodes, 1)))
    assert energy(pf, 100.0) == pytest.approx(0.0, abs=1e-12)
    zero = PField(m, np.zeros((m.n_nodes, 2)))
    assert energy(zero, 2.0) == pytest.approx(0.5 * 2.0 * A**4 * m.domain.area)


def test_branch_measures_exact_for_linear(hex_mesh_coarse):
    m = hex_mesh_coarse
    x = m.nodes[:, 0]
    pf = PField(m, np.column_stack([np.ones(m.n_nodes), x]))
    m11, m12 = branch_measures(pf)
    # centred unit hexagon: int x = int y = int xy = 0, int x^2 = 5 sqrt(3) / 16
    assert m11 == pytest.approx(m.domain.area, rel=1e-13)
    assert m12 == pytest.approx(5 * np.sqrt(3) / 16, rel=1e-13)


@pytest.mark.parametrize("lam", [1.0, 40.0])
def test_newton_converges_quadratically(hex_mesh_coarse, lam):
    pf, rep = newton_solve(ring_interpolant(hex_mesh_coarse), lam)
    assert rep.converged
    assert rep.residual <= 1e-13
    r = np.array(rep.residuals)
    assert np.all(np.isfinite(r))
    assert np.abs(assemble_residual(pf, lam)).max() <= 1e-13
    assert pf.lambda_sq == lam


def test_newton_reports_failure(hex_mesh_coarse):
    pf, rep = newton_solve(zero_interior(hex_mesh_coarse), 2250.0, max_iter=2)
    assert not rep.converged
    assert "no convergence" in rep.message


def test_linear_limit_center_zero(hex_mesh_coarse):
    pf = solve_linear_limit(hex_mesh_coarse)
    pts, _ = triangle_zeros(pf)
    assert len(pts) == 1
    assert np.linalg.norm(pts[0]) < 1e-10


def test_nodal_set_finds_point_defect(hex_mesh_coarse):
    pf = solve_linear_limit(hex_mesh_coarse)
    comps = nodal_set(pf, 0.1 * A)
    assert len(comps) == 1
    assert comps[0].kind == "point"
    assert comps[0].min_value == 0.0
    with pytest.raises(ValueError):
        nodal_set(pf, 0.0)


def test_apply_dirichlet_overwrites_boundary(hex_mesh_coarse):
    pf = PField(hex_mesh_coarse, np.ones((hex_mesh_coarse.n_nodes, 2)))
    out = apply_dirichlet(pf)
    assert np.allclose(out.values[hex_mesh_coarse.free], 1.0)
    assert np.allclose(out.values[hex_mesh_coarse.boundary], zero_interior(hex_mesh_coarse).values[hex_mesh_coarse.boundary])


@pytest.mark.parametrize("dom", [make_domain("regular", K=5), make_domain("isosceles", apex_angle=75.0), make_domain("disc")])
def test_snapshot_round_trip(tmp_path, dom):
    m = triangulate(dom, 1 / 8)
    pf = solve_linear_limit(m).with_values(solve_linear_limit(m).values, lambda_sq=3.5, provenance="ring")
    p = tmp_path / "f.field"
    write_snapshot(pf, p)
    back = read_snapshot(p)
    assert back.mesh.n_nodes == m.n_nodes
    assert np.array_equal(back.values, pf.values)
    assert back.lambda_sq == 3.5 and back.provenance == "ring"


def test_snapshot_rejects_garbage(tmp_path):
    p = tmp_path / "x.field"
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        read_snapshot(p)


def test_free_block_positive_definite_at_zero_lambda(hex_mesh_coarse):
    A_ = free_block(ring_interpolant(hex_mesh_coarse), 0.0).toarray()
    assert np.linalg.eigvalsh(A_).min() > 0
