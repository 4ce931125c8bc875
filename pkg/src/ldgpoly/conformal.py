"""Schwarz-Christoffel map from the unit disc onto the regular K-gon.

``f(z) = C1(K) * int_0^z (1 - x^K)^(-2/K) dx`` sends the prevertices
``z_k = exp(2 pi i (k-1)/K)`` to the polygon vertices and fixes the origin.
Inside ``switch_radius`` the Taylor series is summed; closer to the rim the
integral is continued along the radial ray by adaptive Gauss-Kronrod
quadrature after a substitution that removes the prevertex singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.spatial import cKDTree

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """Gamma function for real ``x`` (not a non-positive integer)."""
    x = float(x)
    if x < 0.5:
        if x == math.floor(x):
            raise ValueError(f"Gamma has a pole at {x}")
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def c1_coefficient(K: int) -> float:
    """Normalisation ``Gamma(1-1/K) / (Gamma(1+1/K) Gamma(1-2/K))`` giving ``f(1) = 1``."""
    if K < 3:
        raise ValueError(f"K must be at least 3, got {K}")
    return lanczos_gamma(1 - 1 / K) / (lanczos_gamma(1 + 1 / K) * lanczos_gamma(1 - 2 / K))


def _ray_integrand(z, z0, K):
    """Integrand over ``u in [0, 1]`` of the ray segment from ``z0`` to ``z``.

    With ``x = z - u^K (z - z0)`` the prevertex singularity of
    ``(1 - x^K)^(-2/K)`` sits at ``u = 0`` where the Jacobian ``K u^(K-1)``
    cancels it.  ``1 - x^K`` is formed without cancellation near ``z_k``.
    """
    dz = z - z0
    zK = z**K
    one_minus_zK = 1.0 - zK
    one_minus_zK[np.abs(one_minus_zK) < 1e-13] = 0.0
    ratio = dz / z

    def integrand(u):
        u = u[:, None]
        uK = u**K
        eps = uK * ratio
        small = np.abs(eps) < 1e-8
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(
                small,
                zK * K * ratio * (1.0 - 0.5 * (K - 1) * eps),
                -zK * np.expm1(K * np.log1p(-eps)) / uK,
            )
            lead = np.where(one_minus_zK == 0.0, 0.0, one_minus_zK / uK)
        return (lead + q) ** (-2.0 / K) * dz * (K * u ** (K - 3))

    return integrand


_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(12)
# panels [2^-(j+1), 2^-j] down to 2^-52 plus the remainder [0, 2^-52]
_PANEL_EDGES = np.concatenate([[0.0], 2.0 ** -np.arange(52, -1, -1)])


def _graded_gauss(integrand):
    """Composite Gauss-Legendre on panels graded towards ``u = 0``.

    Returns the integral and a per-point error estimate from a lower-order
    rule on the same panels.
    """
    a, b = _PANEL_EDGES[:-1], _PANEL_EDGES[1:]
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    out = []
    for x, wts in (_GL_HI, _GL_LO):
        u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        w = (half[:, None] * wts[None, :]).ravel()
        out.append(w @ integrand(u))
    return out[0], np.abs(out[0] - out[1])


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass(eq=False)
class ConformalMap:
    K: int
    series_terms: int = 2000
    quad_tol: float = 1e-11
    switch_radius: float = 0.95
    c1: float = field(init=False)

    def __post_init__(self):
        if self.K < 3:
            raise ValueError(f"K must be at least 3, got {self.K}")
        self.c1 = c1_coefficient(self.K)

    # -- forward map ---------------------------------------------------------

    def series(self, z) -> np.ndarray:
        """Truncated Taylor series; accurate for ``|z| <= switch_radius``."""
        z = np.asarray(z, dtype=complex)
        K = self.K
        a = 2.0 / K
        zK = z**K
        coef = 1.0
        power = z.copy()
        total = z.copy()
        for n in range(1, self.series_terms):
            coef *= (n - 1 + a) / n
            power = power * zK
            term = coef * power / (1 + n * K)
            total += term
            if np.all(np.abs(term) < 1e-17):
                break
        return self.c1 * total

    def derivative(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.c1 * (1.0 - z**self.K) ** (-2.0 / self.K)

    def _ray_integral(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        z0 = z * (self.switch_radius / np.abs(z))
        start = self.series(z0)
        integrand = _ray_integrand(z, z0, self.K)
        val, err = _graded_gauss(integrand)
        for i in np.flatnonzero(err > self.quad_tol):
            # rare fallback: scalar adaptive Gauss-Kronrod
            one = _ray_integrand(z[i : i + 1], z0[i : i + 1], self.K)
            parts = [
                quad(lambda u, g=g: g(one(np.array([u]))[0, 0]), 0.0, 1.0, epsabs=self.quad_tol, epsrel=1e-13, limit=500)[0]
                for g in (np.real, np.imag)
            ]
            val[i] = parts[0] + 1j * parts[1]
        return start + self.c1 * val

    def forward(self, z) -> np.ndarray:
        """``f(z)`` for ``|z| <= 1`` (array in, array out)."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        if np.any(np.abs(z) > 1.0 + 1e-14):
            raise ValueError("forward map is defined on the closed unit disc only")
        out = np.empty_like(z)
        inner = np.abs(z) <= self.switch_radius
        if inner.any():
            out[inner] = self.series(z[inner])
        if (~inner).any():
            out[~inner] = self._ray_integral(z[~inner])
        return out[0] if scalar else out

    __call__ = forward

    # -- inverse map ---------------------------------------------------------

    def inverse(self, w, tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
        """``f^{-1}(w)`` by damped Newton started from a tabulated guess.

        Points on the polygon boundary are located on their circle arc by
        bisection.  Raises :class:`ConvergenceError` with the worst residual
        when Newton stalls.
        """
        w = np.asarray(w, dtype=complex)
        scalar = w.ndim == 0
        w = np.atleast_1d(w).copy()
        out = np.zeros_like(w)
        on_edge = _boundary_mask(w, self.K)
        if on_edge.any():
            out[on_edge] = self._inverse_boundary(w[on_edge])
        todo = ~on_edge & (w != 0)
        if todo.any():
            out[todo] = self._inverse_interior(w[todo], tol, max_iter)
        return out[0] if scalar else out

    def _inverse_interior(self, w, tol, max_iter):
        z = _initial_guess(self.K, self.switch_radius, w)
        fz = self.forward(z)
        res = np.abs(fz - w)
        active = res > tol
        for _ in range(max_iter):
            if not active.any():
                break
            idx = np.flatnonzero(active)
            step = (fz[idx] - w[idx]) / self.derivative(z[idx])
            t = np.ones(len(idx))
            accepted = np.zeros(len(idx), dtype=bool)
            znew = z[idx].copy()
            fnew = fz[idx].copy()
            for _half in range(30):
                pending = ~accepted
                if not pending.any():
                    break
                cand = z[idx][pending] - t[pending] * step[pending]
                inside = np.abs(cand) < 1.0
                fc = np.full(len(cand), np.inf + 0j)
                if inside.any():
                    fc[inside] = self.forward(cand[inside])
                better = inside & (np.abs(fc - w[idx][pending]) < res[idx][pending])
                pidx = np.flatnonzero(pending)
                znew[pidx[better]] = cand[better]
                fnew[pidx[better]] = fc[better]
                accepted[pidx[better]] = True
                t[pidx[~better]] *= 0.5
            z[idx] = znew
            fz[idx] = fnew
            newres = np.abs(fnew - w[idx])
            stalled = ~accepted
            res[idx] = newres
            active[idx] = (newres > tol) & ~stalled
        bad = res > 100 * tol
        if bad.any():
            raise ConvergenceError(
                f"inverse map did not converge at {bad.sum()} points (max residual {res.max():.3e})",
                residual=float(res.max()),
            )
        return z

    def _inverse_boundary(self, w):
        K = self.K
        verts = np.exp(2j * np.pi * np.arange(K) / K)
        ang = np.mod(np.angle(w), 2 * np.pi)
        k = np.minimum(np.floor(ang / (2 * np.pi / K)).astype(int), K - 1)
        # distance from vertex w_k is monotone along the arc D_k
        target = np.abs(w - verts[k])
        lo = 2 * np.pi * k / K
        hi = 2 * np.pi * (k + 1) / K
        for _ in range(55):
            mid = 0.5 * (lo + hi)
            d = np.abs(self.forward(np.exp(1j * mid)) - verts[k])
            lo = np.where(d < target, mid, lo)
            hi = np.where(d < target, hi, mid)
        return np.exp(0.5j * (lo + hi))


def _boundary_mask(w, K, tol=1e-12):
    verts = np.exp(2j * np.pi * np.arange(K) / K)
    a = verts
    b = np.roll(verts, -1)
    d = b - a
    rel = w[:, None] - a[None, :]
    t = np.clip((rel * np.conj(d)[None, :]).real / np.abs(d) ** 2, 0, 1)
    gap = np.abs(rel - t * d[None, :]).min(axis=1)
    return gap <= tol


@lru_cache(maxsize=16)
def _guess_table(K: int, switch_radius: float):
    fmap = ConformalMap(K, switch_radius=switch_radius)
    radii = np.concatenate([np.linspace(0.0, 0.9, 37)[1:], 1.0 - np.logspace(-1, -9, 81)])
    phis = np.linspace(0.0, np.pi / K, 61)
    R, PH = np.meshgrid(radii, phis, indexing="ij")
    z = (R * np.exp(1j * PH)).ravel()
    fz = fmap.forward(z)
    # unfold the fundamental sector with the dihedral symmetry of f
    zs, ws = [], []
    for k in range(K):
        rot = np.exp(2j * np.pi * k / K)
        zs += [z * rot, np.conj(z) * rot]
        ws += [fz * rot, np.conj(fz) * rot]
    zs = np.concatenate(zs)
    ws = np.concatenate(ws)
    return zs, cKDTree(np.column_stack([ws.real, ws.imag]))


def _initial_guess(K, switch_radius, w):
    zs, tree = _guess_table(K, switch_radius)
    _, idx = tree.query(np.column_stack([w.real, w.imag]))
    z = zs[idx]
    big = np.abs(z) >= 1.0
    z[big] *= (1.0 - 1e-12) / np.abs(z[big])
    return z
