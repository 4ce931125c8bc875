"""Initial fields for Newton: analytic limits sampled onto a mesh."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .boundary import gamma_dirichlet, pair_class
from .conformal import ConformalMap
from .fem import PField, apply_dirichlet, solve_linear_limit, zero_interior, read_snapshot
from .geometry import Mesh
from .limits import p_infinity, ring_solution, ring_solution_disc
from .tensor import DEFAULT_CONSTANTS, MaterialConstants


@lru_cache(maxsize=8)
def conformal_map(K: int) -> ConformalMap:
    return ConformalMap(K)


def ring_interpolant(mesh: Mesh, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0) -> PField:
    """``P_R`` at the nodes: closed form on regular polygons and the disc.

    Other domains have no closed form and get the discrete harmonic
    extension instead.
    """
    dom = mesh.domain
    if dom.kind == "regular":
        fn = ring_solution(dom.K, constants, conformal_map(dom.K))
        pf = PField.from_function(mesh, fn, 0.0, "ring")
    elif dom.kind == "disc":
        x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
        rho = np.minimum(np.hypot(x, y), 1.0)
        vals = ring_solution_disc(constants)(rho, np.arctan2(y, x))
        pf = PField(mesh, vals, 0.0, "ring")
    else:
        return solve_linear_limit(mesh, constants, epsilon)
    return apply_dirichlet(pf, constants, epsilon)


def pinfty_interpolant(
    mesh: Mesh, pair, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0
) -> PField:
    dom = mesh.domain
    if dom.kind != "regular":
        raise ValueError("limiting director data is built for regular polygons")
    gb = gamma_dirichlet(dom.K, pair)
    fn = p_infinity(dom.K, gb, constants, conformal_map(dom.K))
    tag = pair_class(dom.K, gb.splay_pair).lower()
    if tag not in ("para", "meta", "ortho"):
        tag = "custom"
    return apply_dirichlet(PField.from_function(mesh, fn, 0.0, tag), constants, epsilon)


def make_seed(
    mesh: Mesh,
    kind: str,
    pair=None,
    constants: MaterialConstants = DEFAULT_CONSTANTS,
    epsilon: float = 0.0,
    path=None,
    bd_lambda_sq: float = 40.0,
    bd_index: int = 0,
) -> PField:
    """Seed by name: ``ring``, ``zero``, ``pinfty`` (needs ``pair``), ``bd`` or ``file``."""
    if kind == "ring":
        return ring_interpolant(mesh, constants, epsilon)
    if kind == "zero":
        return zero_interior(mesh, constants, epsilon)
    if kind == "pinfty":
        if pair is None:
            raise ValueError("pinfty seeds need a splay pair")
        return pinfty_interpolant(mesh, pair, constants, epsilon)
    if kind == "file":
        return read_snapshot(path, mesh)
    if kind == "bd":
        from .continuation import find_bd_states, ring_state

        ring = ring_state(mesh, bd_lambda_sq, constants)
        states = find_bd_states(ring, bd_lambda_sq, constants)
        if not states:
            raise RuntimeError(f"no BD state found next to the ring at lambda^2={bd_lambda_sq}")
        return states[bd_index % len(states)]
    raise ValueError(f"unknown seed kind {kind!r}")
