"""Tangent Dirichlet data.

Two flavours: piecewise-constant ``(p11, p12)`` values on the polygon edges
for the full problem, and piecewise-constant director angles with
splay/bend corner jumps for the large-``lambda`` limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import Mesh, PolygonDomain
from .tensor import DEFAULT_CONSTANTS, MaterialConstants


@dataclass(frozen=True)
class PBoundary:
    alpha: np.ndarray
    beta: np.ndarray
    epsilon: float
    vertex_values: np.ndarray  # (K, 2), value at vertex w_k

    @property
    def K(self) -> int:
        return len(self.alpha)

    def edge_value(self, k: int) -> tuple[float, float]:
        """Constant value on edge ``C_k`` (1-based)."""
        return float(self.alpha[k - 1]), float(self.beta[k - 1])

    def at_nodes(self, mesh: Mesh) -> np.ndarray:
        """Dirichlet values at ``mesh.boundary`` nodes, shape ``(nb, 2)``."""
        edge = mesh.boundary_edge - 1
        vals = np.column_stack([self.alpha[edge], self.beta[edge]])
        if self.epsilon > 0:
            pts = mesh.nodes[mesh.boundary]
            verts = mesh.domain.vertices
            dv = np.linalg.norm(pts[:, None, :] - verts[None, :, :], axis=2)
            near = dv.argmin(axis=1)
            d = dv.min(axis=1)
            t = np.clip(d / self.epsilon, 0.0, 1.0)[:, None]
            vals = t * vals + (1.0 - t) * self.vertex_values[near]
        vmask = mesh.vertex_index > 0
        vals[vmask] = self.vertex_values[mesh.vertex_index[vmask] - 1]
        return vals


def tangent_value(direction, amplitude: float) -> tuple[float, float]:
    """``(p11, p12)`` of a director along ``direction`` with order ``amplitude``."""
    g = math.atan2(direction[1], direction[0])
    return amplitude * math.cos(2 * g), amplitude * math.sin(2 * g)


def p_dirichlet(
    domain: PolygonDomain, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0
) -> PBoundary:
    """Edge constants with vertex averaging for a polygonal domain.

    Regular polygons use the closed form
    ``alpha_k = -(B/2C) cos((2k-1) 2pi/K)``, ``beta_k = -(B/2C) sin(...)``;
    other polygons take the tangent value of each edge direction.
    ``epsilon`` is the half-width of the linear blend towards the vertex
    average and must stay below half the shortest side.
    """
    if domain.kind == "disc":
        raise ValueError("the disc has no edges; use p_dirichlet_disc")
    side = float(domain.side_lengths.min())
    if epsilon < 0 or epsilon >= 0.5 * side:
        raise ValueError(f"epsilon must lie in [0, {0.5 * side}), got {epsilon}")
    a = constants.boundary_amplitude
    K = domain.n_edges
    if domain.kind == "regular":
        ang = (2 * np.arange(1, K + 1) - 1) * 2 * np.pi / K
        alpha = -a * np.cos(ang)
        beta = -a * np.sin(ang)
    else:
        v = domain.vertices
        d = np.roll(v, -1, axis=0) - v
        vals = np.array([tangent_value(dk, a) for dk in d])
        alpha, beta = vals[:, 0], vals[:, 1]
    # vertex w_k is shared by C_{k-1} and C_k
    vertex_values = 0.5 * np.column_stack([alpha + np.roll(alpha, 1), beta + np.roll(beta, 1)])
    return PBoundary(alpha, beta, float(epsilon), vertex_values)


def p_dirichlet_disc(theta, constants: MaterialConstants = DEFAULT_CONSTANTS):
    """Tangent data on the unit circle: ``-(B/2C)(cos 2theta, sin 2theta)``."""
    a = constants.boundary_amplitude
    theta = np.asarray(theta, dtype=float)
    out = np.stack([-a * np.cos(2 * theta), -a * np.sin(2 * theta)], axis=-1)
    return tuple(float(v) for v in out) if out.ndim == 1 else out


def dirichlet_values(mesh: Mesh, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0):
    """Boundary values at ``mesh.boundary`` for any supported domain."""
    if mesh.domain.kind == "disc":
        pts = mesh.nodes[mesh.boundary]
        return p_dirichlet_disc(np.arctan2(pts[:, 1], pts[:, 0]), constants)
    return p_dirichlet(mesh.domain, constants, epsilon).at_nodes(mesh)


# --- limiting director data -------------------------------------------------


def pair_separation(K: int, pair) -> int:
    i, j = pair
    d = abs(i - j) % K
    return min(d, K - d)


def pair_class(K: int, pair) -> str:
    sep = pair_separation(K, pair)
    if K % 2 == 0 and sep == K // 2:
        return "Para"
    if sep == 1:
        return "Ortho"
    if sep == 2:
        return "Meta"
    return f"sep{sep}"


def enumerate_splay_pairs(K: int) -> list[tuple[tuple[int, int], str]]:
    """All unordered corner pairs ``(i, j)`` (1-based, ``i < j``) with class labels.

    Corner ``j`` sits between edges ``C_j`` and ``C_{j+1}`` (cyclically), i.e.
    at vertex ``w_{j+1}``.
    """
    if K < 3:
        raise ValueError(f"K must be at least 3, got {K}")
    return [(p, pair_class(K, p)) for p in combinations(range(1, K + 1), 2)]


@dataclass(frozen=True)
class GammaBoundary:
    """Unwrapped edge angles ``gamma_k`` and the ``K-1`` corner jumps.

    ``splay_pair`` holds corner indices (1-based).  The jump across corner
    ``K`` (from ``C_K`` back to ``C_1``) is implied by closure and is exposed
    as :attr:`closing_jump`.
    """

    K: int
    gamma: np.ndarray
    splay_pair: tuple[int, int]
    jumps: np.ndarray

    @property
    def closing_jump(self) -> float:
        # degree zero: the K corner rotations cancel
        return -float(np.sum(self.jumps))

    @property
    def all_jumps(self) -> np.ndarray:
        return np.append(self.jumps, self.closing_jump)

    @property
    def label(self) -> str:
        return pair_class(self.K, self.splay_pair)

    def total_rotation(self) -> float:
        return float(np.sum(self.all_jumps))


def corner_winding(K: int, splay: bool) -> float:
    """Winding number carried by a splay or bend corner."""
    return (K - 2) / (2 * K) if splay else -1.0 / K


def gamma_dirichlet(K: int, splay_pair) -> GammaBoundary:
    """Edge angles with ``gamma_1 = pi/K - pi/2`` and the chosen splay corners.

    Both corners are used as given; when one of them is corner ``K`` only
    one splay jump appears among the first ``K-1`` and the closing jump is
    the second splay jump.
    """
    i, j = (int(splay_pair[0]), int(splay_pair[1]))
    if K < 3:
        raise ValueError(f"K must be at least 3, got {K}")
    if i == j or not (1 <= i <= K and 1 <= j <= K):
        raise ValueError(f"splay pair must be two distinct corners in 1..{K}, got {splay_pair}")
    pair = (min(i, j), max(i, j))
    splay_jump = 2 * math.pi / K - math.pi
    bend_jump = 2 * math.pi / K
    jumps = np.array([splay_jump if k in pair else bend_jump for k in range(1, K)])
    gamma = np.empty(K)
    gamma[0] = math.pi / K - math.pi / 2
    gamma[1:] = gamma[0] + np.cumsum(jumps)
    return GammaBoundary(K, gamma, pair, jumps)
