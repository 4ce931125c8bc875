"""Closed-form limiting states.

``lambda -> 0``: each component of P is harmonic, so the ring solution is
the Poisson extension of the piecewise-constant edge data on the disc,
pulled back through the Schwarz-Christoffel map.

``lambda -> infinity``: ``s`` is pinned to ``B/2C`` and the director angle
is the harmonic extension of the piecewise-constant edge angles.
"""

from __future__ import annotations

import numpy as np

from .boundary import GammaBoundary, p_dirichlet
from .conformal import ConformalMap
from .geometry import PolygonDomain, make_domain
from .tensor import DEFAULT_CONSTANTS, MaterialConstants


def _continuous_antiderivative(u, x):
    """Continuous branch of ``arctan(x tan(u/2))`` in ``u``.

    Each crossing of an odd multiple of pi adds pi, which is exactly the
    extra pi carried by the improper segment integrals.
    """
    m = np.round(u / (2 * np.pi))
    r = 0.5 * u - np.pi * m  # in [-pi/2, pi/2]
    return np.pi * m + np.arctan(x * np.tan(r))


def segment_integrals(K: int, rho, phi) -> np.ndarray:
    """``S_k(rho e^{i phi})`` for ``k = 1..K``; shape ``(..., K)``.

    ``pi * S_k`` is the Poisson integral of the indicator of the disc arc
    ``D_k``.  The angle ``phi`` is first reduced to ``[0, 2 pi)``.
    """
    rho = np.asarray(rho, dtype=float)[..., None]
    phi = np.mod(np.asarray(phi, dtype=float), 2 * np.pi)[..., None]
    if np.any(rho >= 1.0) or np.any(rho < 0.0):
        raise ValueError("segment integrals need 0 <= rho < 1")
    x = (1.0 + rho) / (1.0 - rho)
    k = np.arange(1, K + 1)
    upper = 2 * np.pi * k / K - phi
    lower = 2 * np.pi * (k - 1) / K - phi
    return _continuous_antiderivative(upper, x) - _continuous_antiderivative(lower, x)


def improper_segment(K: int, phi) -> np.ndarray:
    """Which segments contain an odd multiple of pi in ``[a_k, b_k)``."""
    phi = np.mod(np.asarray(phi, dtype=float), 2 * np.pi)[..., None]
    k = np.arange(1, K + 1)
    lower = 2 * np.pi * (k - 1) / K - phi
    upper = 2 * np.pi * k / K - phi
    n = np.ceil((lower - np.pi) / (2 * np.pi))
    return (2 * n + 1) * np.pi < upper


def poisson_eval(data, rho, phi) -> np.ndarray:
    """Harmonic extension into the disc of data constant on each arc ``D_k``."""
    d = np.asarray(data, dtype=float)
    S = segment_integrals(len(d), rho, phi)
    return S @ d / np.pi


class RingSolution:
    """Evaluator ``w -> (P11, P12)`` of the harmonic ring state on ``E_K``."""

    def __init__(self, K: int, constants: MaterialConstants = DEFAULT_CONSTANTS, fmap: ConformalMap | None = None):
        self.K = K
        self.domain = make_domain("regular", K=K)
        self.constants = constants
        self.fmap = fmap or ConformalMap(K)
        self.data = p_dirichlet(self.domain, constants)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = pts[:, 0] + 1j * pts[:, 1]
        out = np.empty((len(w), 2))
        edge, vertex = _locate(self.domain, pts)
        inside = (edge < 0) & (vertex < 0)
        if inside.any():
            z = self.fmap.inverse(w[inside])
            rho, phi = np.abs(z), np.angle(z)
            out[inside, 0] = poisson_eval(self.data.alpha, rho, phi)
            out[inside, 1] = poisson_eval(self.data.beta, rho, phi)
        on_edge = edge >= 0
        out[on_edge, 0] = self.data.alpha[edge[on_edge]]
        out[on_edge, 1] = self.data.beta[edge[on_edge]]
        at_vertex = vertex >= 0
        out[at_vertex] = self.data.vertex_values[vertex[at_vertex]]
        return out


def _locate(domain: PolygonDomain, pts, tol=1e-12):
    """0-based edge index for boundary points, vertex index for corners.

    Raises for points outside the closed polygon.
    """
    v = domain.vertices
    K = len(v)
    d = np.roll(v, -1, axis=0) - v
    # outward test via edge normals of a convex polygon
    cross = d[None, :, 0] * (pts[:, None, 1] - v[None, :, 1]) - d[None, :, 1] * (pts[:, None, 0] - v[None, :, 0])
    side = cross / np.linalg.norm(d, axis=1)[None, :]
    if np.any(side < -tol):
        raise ValueError("point outside the polygon")
    dv = np.linalg.norm(pts[:, None, :] - v[None, :, :], axis=2)
    vertex = np.where(dv.min(axis=1) <= tol, dv.argmin(axis=1), -1)
    on = np.abs(side) <= tol
    edge = np.where(on.any(axis=1) & (vertex < 0), on.argmax(axis=1), -1)
    del K
    return edge, vertex


def ring_solution(K: int, constants: MaterialConstants = DEFAULT_CONSTANTS, fmap: ConformalMap | None = None) -> RingSolution:
    return RingSolution(K, constants, fmap)


def ring_solution_disc(constants: MaterialConstants = DEFAULT_CONSTANTS):
    """``(rho, phi) -> -(B/2C) rho^2 (cos 2phi, sin 2phi)``."""
    a = constants.boundary_amplitude

    def evaluate(rho, phi):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho > 1.0 + 1e-14):
            raise ValueError("disc ring solution is defined for rho <= 1")
        phi = np.asarray(phi, dtype=float)
        return np.stack([-a * rho**2 * np.cos(2 * phi), -a * rho**2 * np.sin(2 * phi)], axis=-1)

    return evaluate


class GammaInfinity:
    """Harmonic director angle for piecewise-constant edge angles."""

    def __init__(self, K: int, gamma_boundary: GammaBoundary, fmap: ConformalMap | None = None):
        if gamma_boundary.K != K:
            raise ValueError("boundary data built for a different K")
        if abs(gamma_boundary.total_rotation()) > 1e-12:
            raise ValueError("director data must have degree zero")
        self.K = K
        self.domain = make_domain("regular", K=K)
        self.gb = gamma_boundary
        self.fmap = fmap or ConformalMap(K)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = pts[:, 0] + 1j * pts[:, 1]
        out = np.empty(len(w))
        edge, vertex = _locate(self.domain, pts)
        inside = (edge < 0) & (vertex < 0)
        if inside.any():
            z = self.fmap.inverse(w[inside])
            out[inside] = poisson_eval(self.gb.gamma, np.abs(z), np.angle(z))
        out[edge >= 0] = self.gb.gamma[edge[edge >= 0]]
        # corners: mean of the adjacent edge angles (vertex w_k joins C_{k-1}, C_k)
        g = self.gb.gamma
        jumps_in = np.roll(self.gb.all_jumps, 1)
        at_v = vertex >= 0
        k = vertex[at_v]
        out[at_v] = g[k] - 0.5 * jumps_in[k]
        return out


def gamma_infinity(K: int, gamma_boundary: GammaBoundary, fmap: ConformalMap | None = None) -> GammaInfinity:
    return GammaInfinity(K, gamma_boundary, fmap)


def p_infinity(K: int, gamma_boundary: GammaBoundary, constants: MaterialConstants = DEFAULT_CONSTANTS, fmap=None):
    """Evaluator ``w -> (B/2C)(cos 2gamma, sin 2gamma)`` of the limiting state."""
    gfield = gamma_infinity(K, gamma_boundary, fmap)
    a = constants.boundary_amplitude

    def evaluate(points):
        g = gfield(points)
        return np.column_stack([a * np.cos(2 * g), a * np.sin(2 * g)])

    evaluate.gamma = gfield
    return evaluate
