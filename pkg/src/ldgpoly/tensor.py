"""Reduced order tensor representations and pointwise diagnostics.

The in-plane order is carried by the symmetric traceless 2x2 matrix
``P = [[p11, p12], [p12, -p11]]``.  Working at the fixed temperature
``A = -B^2/3C`` the full Q-tensor is recovered by adding ``B/6C`` to the
in-plane diagonal and putting ``-B/3C`` in the zz slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class MaterialConstants:
    """Bulk coefficients of the Landau-de Gennes potential (N/m^2).

    Defaults are the MBBA values.  Only the ratio ``B/C`` enters the reduced
    problem once the elastic constant is absorbed into ``lambda^2``.
    """

    B: float = 0.64e4
    C: float = 0.35e4

    def __post_init__(self):
        if not (self.B > 0 and self.C > 0):
            raise ValueError(f"B and C must be positive, got B={self.B}, C={self.C}")

    @property
    def boundary_amplitude(self) -> float:
        """Order parameter ``B/2C`` of the tangent Dirichlet data."""
        return self.B / (2.0 * self.C)

    @property
    def bulk_radius_sq(self) -> float:
        """Radius squared ``B^2/4C^2`` of the circle of bulk minimisers."""
        return self.boundary_amplitude**2

    @property
    def q3(self) -> float:
        return -self.B / (6.0 * self.C)


DEFAULT_CONSTANTS = MaterialConstants()


class PValue(NamedTuple):
    p11: float
    p12: float


class SGamma(NamedTuple):
    s: float
    gamma: float


def p_to_sgamma(p) -> SGamma:
    """Order parameter and director angle (mod pi) of ``(p11, p12)``.

    The isotropic point ``p = 0`` has no director; the angle is reported as 0.
    """
    p11, p12 = float(p[0]), float(p[1])
    s = math.hypot(p11, p12)
    if s == 0.0:
        return SGamma(0.0, 0.0)
    gamma = 0.5 * math.atan2(p12, p11)
    if gamma < 0.0:
        gamma += math.pi
    if gamma >= math.pi:
        gamma -= math.pi
    return SGamma(s, gamma)


def sgamma_to_p(sg) -> PValue:
    s, gamma = float(sg[0]), float(sg[1])
    if s < 0:
        raise ValueError(f"order parameter must be non-negative, got {s}")
    return PValue(s * math.cos(2 * gamma), s * math.sin(2 * gamma))


def order_and_angle(p11, p12):
    """Vectorised ``p_to_sgamma`` over nodal arrays; returns ``(s, gamma)``."""
    p11 = np.asarray(p11, dtype=float)
    p12 = np.asarray(p12, dtype=float)
    s = np.hypot(p11, p12)
    gamma = np.mod(0.5 * np.arctan2(p12, p11), np.pi)
    gamma = np.where(s == 0.0, 0.0, gamma)
    return s, gamma


def reconstruct_q(p, constants: MaterialConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    p11, p12 = float(p[0]), float(p[1])
    d = constants.B / (6.0 * constants.C)
    return np.array(
        [
            [p11 + d, p12, 0.0],
            [p12, -p11 + d, 0.0],
            [0.0, 0.0, -2.0 * d],
        ]
    )


def biaxiality(q) -> float:
    """``1 - 6 tr(Q^3)^2 / tr(Q^2)^3``, zero exactly for uniaxial ``Q``."""
    q = np.asarray(q, dtype=float)
    tr2 = float(np.trace(q @ q))
    if tr2 <= 0.0:
        raise ValueError("biaxiality is undefined for the isotropic tensor Q = 0")
    tr3 = float(np.trace(q @ q @ q))
    return 1.0 - 6.0 * tr3**2 / tr2**3


def bulk_density(p, constants: MaterialConstants = DEFAULT_CONSTANTS):
    """Bulk factor ``(|p|^2 - B^2/4C^2)^2 / 2`` without the ``lambda^2``."""
    p11 = np.asarray(p[0], dtype=float)
    p12 = np.asarray(p[1], dtype=float)
    out = 0.5 * (p11**2 + p12**2 - constants.bulk_radius_sq) ** 2
    return float(out) if out.ndim == 0 else out
