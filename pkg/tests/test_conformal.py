import math

import mpmath
import numpy as np
import pytest

from ldgpoly.conformal import ConformalMap, c1_coefficient, lanczos_gamma
from ldgpoly.geometry import regular_vertices
from ldgpoly.seeds import conformal_map


def mp_forward(K, z):
    """Independent oracle: ``C1 z 2F1(2/K, 1/K; 1+1/K; z^K)``."""
    mpmath.mp.dps = 30
    c1 = mpmath.gamma(1 - mpmath.mpf(1) / K) / (mpmath.gamma(1 + mpmath.mpf(1) / K) * mpmath.gamma(1 - mpmath.mpf(2) / K))
    zz = mpmath.mpc(z.real, z.imag)
    return complex(c1 * zz * mpmath.hyp2f1(mpmath.mpf(2) / K, mpmath.mpf(1) / K, 1 + mpmath.mpf(1) / K, zz**K))


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.5, 7.3, -0.5, -1.7])
def test_lanczos_gamma(x):
    assert lanczos_gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


def test_lanczos_gamma_pole():
    with pytest.raises(ValueError):
        lanczos_gamma(-2.0)


@pytest.mark.parametrize("K", [3, 4, 5, 6, 8])
def test_c1_against_mpmath(K):
    ref = mpmath.gamma(1 - 1 / K) / (mpmath.gamma(1 + 1 / K) * mpmath.gamma(1 - 2 / K))
    assert c1_coefficient(K) == pytest.approx(float(ref), rel=1e-13)


def test_c1_rejects_small_k():
    with pytest.raises(ValueError):
        c1_coefficient(2)


@pytest.mark.parametrize("K", [3, 6])
def test_forward_against_hypergeometric(K, rng):
    f = conformal_map(K)
    r = np.sqrt(rng.uniform(0, 0.999**2, 40))
    z = r * np.exp(1j * rng.uniform(0, 2 * np.pi, 40))
    got = f.forward(z)
    ref = np.array([mp_forward(K, zi) for zi in z])
    assert np.max(np.abs(got - ref)) < 1e-10


@pytest.mark.parametrize("K", [3, 4, 5, 6, 8])
def test_prevertices_map_to_vertices(K):
    f = conformal_map(K)
    zk = np.exp(2j * np.pi * np.arange(K) / K)
    v = regular_vertices(K)
    assert np.max(np.abs(f.forward(zk) - (v[:, 0] + 1j * v[:, 1]))) < 1e-8


def test_map_fixes_origin_and_is_symmetric(hex_map, rng):
    assert hex_map.forward(0.0) == 0
    z = 0.9 * rng.uniform(0, 1, 10) * np.exp(1j * rng.uniform(0, 2 * np.pi, 10))
    rot = np.exp(2j * np.pi / 6)
    assert np.allclose(hex_map.forward(rot * z), rot * hex_map.forward(z), atol=1e-12)
    assert np.allclose(hex_map.forward(np.conj(z)), np.conj(hex_map.forward(z)), atol=1e-12)


def test_inverse_round_trip_near_boundary(hex_map, rng):
    r = rng.uniform(0.9, 0.9999, 30)
    z = r * np.exp(1j * rng.uniform(0, 2 * np.pi, 30))
    assert np.max(np.abs(hex_map.inverse(hex_map.forward(z)) - z)) < 1e-10


def test_inverse_on_edge_lands_on_circle(hex_map):
    v = regular_vertices(6)
    mid = 0.5 * (v[0] + v[1])
    z = hex_map.inverse(mid[0] + 1j * mid[1])
    assert abs(z) == pytest.approx(1.0, abs=1e-12)
    assert np.angle(z) == pytest.approx(np.pi / 6, abs=1e-10)


def test_forward_rejects_outside_disc(hex_map):
    with pytest.raises(ValueError):
        hex_map.forward(1.1)


def test_small_k_rejected():
    with pytest.raises(ValueError):
        ConformalMap(2)
