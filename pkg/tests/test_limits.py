import math

import numpy as np
import pytest
from scipy.integrate import quad

from ldgpoly.boundary import gamma_dirichlet, p_dirichlet
from ldgpoly.geometry import make_domain, symmetry_images
from ldgpoly.limits import (
    improper_segment,
    p_infinity,
    poisson_eval,
    ring_solution,
    ring_solution_disc,
    segment_integrals,
)
from ldgpoly.seeds import conformal_map
from ldgpoly.tensor import DEFAULT_CONSTANTS

A = DEFAULT_CONSTANTS.boundary_amplitude


def poisson_quad(data, rho, phi):
    """Oracle: arc-by-arc quadrature of the Poisson kernel."""
    K = len(data)
    kern = lambda t: (1 - rho**2) / (1 - 2 * rho * math.cos(t - phi) + rho**2)
    total = 0.0
    for k in range(K):
        a, b = 2 * math.pi * k / K, 2 * math.pi * (k + 1) / K
        total += data[k] * quad(kern, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return total / (2 * math.pi)


def test_segments_partition_unity(rng):
    rho = rng.uniform(0, 0.99, 50)
    phi = rng.uniform(-10, 10, 50)
    S = segment_integrals(7, rho, phi)
    # S_k / pi are the harmonic measures of the arcs
    assert np.allclose(S.sum(axis=-1), np.pi, atol=1e-12)


def test_segment_integrals_positive(rng):
    S = segment_integrals(5, rng.uniform(0, 0.999, 100), rng.uniform(0, 2 * np.pi, 100))
    assert np.all(S > 0)


def test_exactly_one_improper_segment(rng):
    flags = improper_segment(6, rng.uniform(0, 2 * np.pi, 100))
    assert np.all(flags.sum(axis=-1) == 1)


@pytest.mark.parametrize("K", [3, 6])
def test_poisson_against_quadrature(K, rng):
    data = rng.standard_normal(K)
    for rho, phi in zip(rng.uniform(0, 0.98, 15), rng.uniform(0, 2 * np.pi, 15)):
        assert poisson_eval(data, rho, phi) == pytest.approx(poisson_quad(data, rho, phi), abs=1e-11)


def test_mean_value_and_constants(rng):
    data = rng.standard_normal(6)
    assert float(poisson_eval(data, 0.0, 0.3)) == pytest.approx(data.mean(), abs=1e-14)
    assert np.allclose(poisson_eval(np.full(5, 2.5), rng.uniform(0, 0.99, 20), rng.uniform(0, 6, 20)), 2.5, atol=1e-13)


def test_rim_rejected():
    with pytest.raises(ValueError):
        segment_integrals(4, 1.0, 0.0)


@pytest.mark.parametrize("K", [3, 5, 6])
def test_ring_center_is_isotropic(K):
    assert np.linalg.norm(ring_solution(K, fmap=conformal_map(K))([[0.0, 0.0]])) < 1e-10


def test_ring_matches_boundary_data():
    K = 6
    d = make_domain("regular", K=K)
    pb = p_dirichlet(d)
    rs = ring_solution(K, fmap=conformal_map(K))
    v = d.vertices
    mids = 0.5 * (v + np.roll(v, -1, axis=0))
    assert np.allclose(rs(mids), np.column_stack([pb.alpha, pb.beta]))
    assert np.allclose(rs(v), pb.vertex_values)
    # approaching an edge midpoint from inside
    inner = 0.999999 * mids
    assert np.allclose(rs(inner), rs(mids), atol=1e-4)


def test_ring_rejects_outside_points():
    with pytest.raises(ValueError):
        ring_solution(4, fmap=conformal_map(4))([[0.9, 0.9]])


def test_ring_rotation_law(rng):
    K = 5
    rs = ring_solution(K, fmap=conformal_map(K))
    r = np.sqrt(rng.uniform(0, 0.6, 30))
    t = rng.uniform(0, 2 * np.pi, 30)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    base = rs(pts)
    for kind, k, img in symmetry_images(pts, K):
        # p rotates by twice the rotation angle, reflects about twice the axis angle
        ang = 2 * (2 * np.pi * k / K)
        if kind == "rot":
            M = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
        else:
            M = np.array([[math.cos(ang), math.sin(ang)], [math.sin(ang), -math.cos(ang)]])
        assert np.allclose(rs(img), base @ M.T, atol=1e-10)


def test_disc_ring_solution():
    f = ring_solution_disc()
    assert np.allclose(f(1.0, 0.3), [-A * math.cos(0.6), -A * math.sin(0.6)])
    assert np.allclose(f(0.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        f(1.5, 0.0)


def test_p_infinity_has_boundary_order():
    K = 6
    gb = gamma_dirichlet(K, (1, 4))
    fn = p_infinity(K, gb, fmap=conformal_map(K))
    pts = np.array([[0.1, 0.2], [-0.3, 0.05], [0.0, -0.7]])
    assert np.allclose(np.linalg.norm(fn(pts), axis=1), A)
    d = make_domain("regular", K=K)
    v = d.vertices
    mids = 0.5 * (v + np.roll(v, -1, axis=0))
    g = fn.gamma(mids)
    assert np.allclose(g, gb.gamma)


def test_p_infinity_para_symmetry():
    # Para (1,4) is invariant under the half turn
    K = 6
    fn = p_infinity(K, gamma_dirichlet(K, (1, 4)), fmap=conformal_map(K))
    pts = np.array([[0.2, 0.3], [-0.4, 0.1]])
    assert np.allclose(fn(-pts), fn(pts), atol=1e-10)
