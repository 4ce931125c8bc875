"""P1 finite elements for the reduced Landau-de Gennes system.

Unknowns are stored interleaved, ``x[2i] = p11_i`` and ``x[2i+1] = p12_i``,
which keeps the sparse factorisation fill close to that of a scalar
Laplacian.  The cubic bulk term is integrated with the three-point
mid-edge rule, the same rule in the energy, the residual and the Jacobian,
so that the residual is exactly half the discrete energy gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .boundary import dirichlet_values
from .geometry import Mesh, make_domain, triangulate
from .tensor import DEFAULT_CONSTANTS, MaterialConstants, order_and_angle

PROVENANCE = ("ring", "para", "meta", "ortho", "bd", "zero", "custom")

# basis values at the three edge midpoints
_PHI_Q = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


@dataclass(frozen=True, eq=False)
class PField:
    """Nodal ``(p11, p12)`` on a mesh with its ``lambda^2`` and provenance tag."""

    mesh: Mesh
    values: np.ndarray
    lambda_sq: float = 0.0
    provenance: str = "custom"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mesh.n_nodes, 2):
            raise ValueError(f"field shape {v.shape} does not match mesh with {self.mesh.n_nodes} nodes")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def p11(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def p12(self) -> np.ndarray:
        return self.values[:, 1]

    @property
    def s(self) -> np.ndarray:
        return np.hypot(self.p11, self.p12)

    @property
    def gamma(self) -> np.ndarray:
        return order_and_angle(self.p11, self.p12)[1]

    def flat(self) -> np.ndarray:
        return self.values.ravel().copy()

    def with_values(self, values, **changes) -> "PField":
        return replace(self, values=np.asarray(values, dtype=float).reshape(-1, 2), **changes)

    @classmethod
    def from_function(cls, mesh: Mesh, fn, lambda_sq=0.0, provenance="custom") -> "PField":
        """Sample ``fn(points) -> (N, 2)`` at the mesh nodes."""
        return cls(mesh, np.asarray(fn(mesh.nodes), dtype=float), lambda_sq, provenance)


def apply_dirichlet(pf: PField, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0) -> PField:
    """Copy of ``pf`` with boundary nodes overwritten by the tangent data."""
    v = np.array(pf.values)
    v[pf.mesh.boundary] = dirichlet_values(pf.mesh, constants, epsilon)
    return pf.with_values(v)


def zero_interior(mesh: Mesh, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0) -> PField:
    return apply_dirichlet(PField(mesh, np.zeros((mesh.n_nodes, 2)), provenance="zero"), constants, epsilon)


class Discretization:
    """Geometry factors and sparsity pattern cached for one mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        nodes, tris = mesh.nodes, mesh.triangles
        x, y = nodes[tris, 0], nodes[tris, 1]
        # gradients of the barycentric basis
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
        if np.any(area <= 0):
            raise ValueError("mesh has degenerate or clockwise triangles")
        self.area = area
        self.local_stiffness = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4 * area)[:, None, None]
        n = mesh.n_nodes
        rows = np.repeat(tris, 3, axis=1).ravel()
        cols = np.tile(tris, (1, 3)).ravel()
        self.stiffness = sp.csr_matrix((self.local_stiffness.ravel(), (rows, cols)), shape=(n, n))
        # quadrature points and weights
        self.qpoints = np.einsum("qj,tjd->tqd", _PHI_Q, nodes[tris])
        self.qweight = area / 3.0
        # interleaved 6x6 block pattern and the COO -> CSR scatter map
        dof = np.stack([2 * tris, 2 * tris + 1], axis=2).reshape(-1, 6)
        r6 = np.repeat(dof, 6, axis=1).ravel()
        c6 = np.tile(dof, (1, 6)).ravel()
        pattern = sp.csr_matrix((np.arange(1, len(r6) + 1, dtype=float), (r6, c6)), shape=(2 * n, 2 * n))
        pattern.sum_duplicates()
        pattern.sort_indices()
        self._indptr, self._indices = pattern.indptr, pattern.indices
        key = r6.astype(np.int64) * (2 * n) + c6
        row_of = np.repeat(np.arange(2 * n), np.diff(self._indptr)).astype(np.int64)
        csr_key = row_of * (2 * n) + self._indices
        self._scatter = np.searchsorted(csr_key, key)
        self.ndof = 2 * n

    @cached_property
    def free_dofs(self) -> np.ndarray:
        f = self.mesh.free
        return np.stack([2 * f, 2 * f + 1], axis=1).ravel()

    @cached_property
    def fixed_dofs(self) -> np.ndarray:
        b = self.mesh.boundary
        return np.stack([2 * b, 2 * b + 1], axis=1).ravel()

    @cached_property
    def mass(self) -> sp.csr_matrix:
        """Scalar mass matrix under the mid-edge rule (exact for P1)."""
        local = np.einsum("t,qi,qj->tij", self.qweight, _PHI_Q, _PHI_Q)
        tris = self.mesh.triangles
        n = self.mesh.n_nodes
        rows = np.repeat(tris, 3, axis=1).ravel()
        cols = np.tile(tris, (1, 3)).ravel()
        return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))

    def at_quadrature(self, values: np.ndarray) -> np.ndarray:
        """Field values at the mid-edge points, shape ``(T, 3, 2)``."""
        return np.einsum("qj,tjc->tqc", _PHI_Q, values[self.mesh.triangles])

    def block_matrix(self, local6: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self._scatter, weights=local6.ravel(), minlength=len(self._indices))
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(self.ndof, self.ndof))


_DISC_CACHE: dict[int, Discretization] = {}


def discretization(mesh: Mesh) -> Discretization:
    key = id(mesh)
    d = _DISC_CACHE.get(key)
    if d is None or d.mesh is not mesh:
        if len(_DISC_CACHE) > 8:
            _DISC_CACHE.clear()
        d = _DISC_CACHE[key] = Discretization(mesh)
    return d


def assemble_residual(pf: PField, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS, boundary=None):
    """Galerkin residual, interleaved, length ``2N``.

    Free rows hold ``int grad P . grad v + lambda^2 (|P|^2 - a^2) P . v``.
    Dirichlet rows hold the gap ``P - data`` (zero when ``boundary`` is
    ``None``, meaning the field is taken to satisfy its constraints).
    """
    d = discretization(pf.mesh)
    v = pf.values
    res = np.empty((pf.mesh.n_nodes, 2))
    res[:, 0] = d.stiffness @ v[:, 0]
    res[:, 1] = d.stiffness @ v[:, 1]
    if lambda_sq != 0.0:
        pq = d.at_quadrature(v)
        g = np.sum(pq**2, axis=2) - constants.bulk_radius_sq
        # (T, 3 nodes, 2 comps)
        loc = lambda_sq * np.einsum("t,tq,qj,tqc->tjc", d.qweight, g, _PHI_Q, pq)
        tris = pf.mesh.triangles.ravel()
        for c in range(2):
            res[:, c] += np.bincount(tris, weights=loc[:, :, c].ravel(), minlength=pf.mesh.n_nodes)
    b = pf.mesh.boundary
    res[b] = 0.0 if boundary is None else v[b] - boundary
    return res.ravel()


def _jacobian_full(pf: PField, lambda_sq: float, constants: MaterialConstants):
    d = discretization(pf.mesh)
    T = len(pf.mesh.triangles)
    loc = np.zeros((T, 3, 2, 3, 2))
    loc[:, :, 0, :, 0] = d.local_stiffness
    loc[:, :, 1, :, 1] = d.local_stiffness
    if lambda_sq != 0.0:
        pq = d.at_quadrature(pf.values)
        g = np.sum(pq**2, axis=2) - constants.bulk_radius_sq
        eye = np.eye(2)
        coef = g[:, :, None, None] * eye + 2.0 * pq[:, :, :, None] * pq[:, :, None, :]
        loc += lambda_sq * np.einsum("t,qi,qj,tqab->tiajb", d.qweight, _PHI_Q, _PHI_Q, coef)
    return d.block_matrix(loc.reshape(T, 36))


def assemble_jacobian(pf: PField, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS) -> sp.csr_matrix:
    """Symmetric Jacobian with identity rows and columns at Dirichlet dofs."""
    J = _jacobian_full(pf, lambda_sq, constants)
    d = discretization(pf.mesh)
    keep = np.zeros(d.ndof)
    keep[d.free_dofs] = 1.0
    D = sp.diags(keep)
    fixed = sp.diags(1.0 - keep)
    return (D @ J @ D + fixed).tocsr()


def free_block(pf: PField, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS) -> sp.csr_matrix:
    """Jacobian restricted to free dofs: the discrete second variation."""
    J = _jacobian_full(pf, lambda_sq, constants)
    f = discretization(pf.mesh).free_dofs
    return J[f][:, f].tocsr()


def energy(pf: PField, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS) -> float:
    """``int |grad P11|^2 + |grad P12|^2 + (lambda^2/2)(|P|^2 - a^2)^2``."""
    d = discretization(pf.mesh)
    v = pf.values
    e = float(v[:, 0] @ (d.stiffness @ v[:, 0]) + v[:, 1] @ (d.stiffness @ v[:, 1]))
    if lambda_sq != 0.0:
        g = np.sum(d.at_quadrature(v) ** 2, axis=2) - constants.bulk_radius_sq
        e += 0.5 * lambda_sq * float(np.sum(d.qweight[:, None] * g**2))
    return e


def branch_measures(pf: PField) -> tuple[float, float]:
    """``(int P11 (1+x+y), int P12 (1+x+y))``; exact for P1 under the mid-edge rule."""
    d = discretization(pf.mesh)
    wq = d.qweight[:, None] * (1.0 + d.qpoints[..., 0] + d.qpoints[..., 1])
    pq = d.at_quadrature(pf.values)
    return float(np.sum(wq * pq[..., 0])), float(np.sum(wq * pq[..., 1]))


def l2_distance(a: PField, b: PField) -> float:
    if a.mesh is not b.mesh and a.mesh.n_nodes != b.mesh.n_nodes:
        raise ValueError("fields live on different meshes")
    d = discretization(a.mesh)
    diff = a.values - b.values
    return math.sqrt(float(diff[:, 0] @ (d.mass @ diff[:, 0]) + diff[:, 1] @ (d.mass @ diff[:, 1])))


# --- Newton -----------------------------------------------------------------


@dataclass
class NewtonReport:
    converged: bool
    iterations: int
    residual: float
    step_norms: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    floor_used: bool = False
    message: str = ""


def residual_floor(pf: PField) -> float:
    return 1e-12 * (1.0 + float(np.abs(pf.values).max()))


def newton_solve(
    initial: PField,
    lambda_sq: float,
    tol: float = 1e-13,
    max_iter: int = 50,
    constants: MaterialConstants = DEFAULT_CONSTANTS,
    max_halvings: int = 10,
) -> tuple[PField, NewtonReport]:
    """Newton's method on the free dofs with backtracking by step halving.

    Converged means the free-row residual sup-norm is at most ``tol``; if
    progress stalls above ``tol`` but below the round-off floor
    ``1e-12 (1 + |P|_inf)`` the result is accepted and flagged.
    """
    d = discretization(initial.mesh)
    free = d.free_dofs
    x = initial.flat()
    pf = initial.with_values(x, lambda_sq=float(lambda_sq))

    def res_of(vals):
        return assemble_residual(pf.with_values(vals), lambda_sq, constants)[free]

    r = res_of(x)
    rnorm = float(np.abs(r).max()) if len(r) else 0.0
    report = NewtonReport(False, 0, rnorm, residuals=[rnorm])
    for it in range(1, max_iter + 1):
        if rnorm <= tol:
            report.converged = True
            break
        J = free_block(pf.with_values(x), lambda_sq, constants)
        try:
            delta = splu(J.tocsc(), permc_spec="COLAMD").solve(-r)
        except RuntimeError as exc:  # exactly singular
            report.message = f"singular Jacobian: {exc}"
            break
        l2 = float(np.linalg.norm(r))
        t = 1.0
        for _ in range(max_halvings + 1):
            trial = x.copy()
            trial[free] += t * delta
            rt = res_of(trial)
            if np.linalg.norm(rt) < l2:
                break
            t *= 0.5
        else:
            # no decrease: round-off territory or a bad seed
            if rnorm <= residual_floor(pf.with_values(x)):
                report.converged = True
                report.floor_used = True
                break
            # far from a root the merit function can mislead; take the full step
            t = 1.0
            trial = x.copy()
            trial[free] += delta
            rt = res_of(trial)
        x, r = trial, rt
        rnorm = float(np.abs(r).max())
        report.iterations = it
        report.step_norms.append(float(t * np.abs(delta).max()))
        report.residuals.append(rnorm)
        if not np.isfinite(rnorm):
            report.message = "residual is not finite"
            break
    else:
        if rnorm <= tol:
            report.converged = True
        elif rnorm <= residual_floor(pf.with_values(x)) and len(report.residuals) > 3:
            report.converged = True
            report.floor_used = True
    report.residual = rnorm
    if not report.converged and not report.message:
        report.message = f"no convergence after {report.iterations} iterations (residual {rnorm:.3e})"
    return pf.with_values(x), report


def solve_linear_limit(mesh: Mesh, constants: MaterialConstants = DEFAULT_CONSTANTS, epsilon: float = 0.0) -> PField:
    """Discrete harmonic extension of the boundary data (``lambda = 0``)."""
    sol, rep = newton_solve(zero_interior(mesh, constants, epsilon), 0.0, constants=constants)
    if not rep.converged:
        raise RuntimeError(rep.message)
    return replace(sol, provenance="ring")


# --- nodal set ----------------------------------------------------------------


@dataclass
class NodalComponent:
    """Connected low-order region of ``|P|``."""

    points: np.ndarray
    values: np.ndarray
    center: np.ndarray
    min_value: float
    kind: str  # "point" or "line"
    direction: np.ndarray


def triangle_zeros(pf: PField) -> tuple[np.ndarray, np.ndarray]:
    """Isolated zeros of the piecewise-linear interpolant and their triangles."""
    tris = pf.mesh.triangles
    x = pf.mesh.nodes[tris]
    p = pf.values[tris]
    # p(lambda) = p0 + (p1-p0) l1 + (p2-p0) l2
    A = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    scale = np.abs(A).max(axis=(1, 2)) ** 2
    ok = np.abs(det) > 1e-12 * np.maximum(scale, 1e-300)
    out_pts, out_tri = [], []
    if ok.any():
        Ai = A[ok]
        rhs = -p[ok, 0]
        dd = det[ok]
        l1 = (Ai[:, 1, 1] * rhs[:, 0] - Ai[:, 0, 1] * rhs[:, 1]) / dd
        l2 = (-Ai[:, 1, 0] * rhs[:, 0] + Ai[:, 0, 0] * rhs[:, 1]) / dd
        tol = 1e-12
        inside = (l1 >= -tol) & (l2 >= -tol) & (l1 + l2 <= 1 + tol)
        xo = x[ok][inside]
        pts = xo[:, 0] + l1[inside, None] * (xo[:, 1] - xo[:, 0]) + l2[inside, None] * (xo[:, 2] - xo[:, 0])
        out_pts.append(pts)
        out_tri.append(np.flatnonzero(ok)[inside])
    if not out_pts:
        return np.zeros((0, 2)), np.zeros(0, dtype=int)
    pts = np.concatenate(out_pts)
    tri = np.concatenate(out_tri)
    # zeros on shared edges show up twice
    if len(pts):
        _, keep = np.unique(np.round(pts / 1e-10).astype(np.int64), axis=0, return_index=True)
        keep.sort()
        pts, tri = pts[keep], tri[keep]
    return pts, tri


def nodal_set(pf: PField, threshold: float) -> list[NodalComponent]:
    """Cluster the nodes with ``|P| < threshold`` plus exact linear zeros.

    Components are connected through mesh edges.  Each is classified as a
    point defect or a line of low order by the aspect ratio of its point
    cloud; ``min_value`` is 0 when an exact zero lies inside.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    from scipy.sparse.csgraph import connected_components

    s = pf.s
    low = s < threshold
    zpts, ztri = triangle_zeros(pf)
    tris = pf.mesh.triangles
    # a triangle with an exact zero marks its nodes as low too
    low_nodes = low.copy()
    low_nodes[tris[ztri].ravel()] = True
    idx = np.flatnonzero(low_nodes)
    if len(idx) == 0:
        return []
    n = pf.mesh.n_nodes
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = e[low_nodes[e[:, 0]] & low_nodes[e[:, 1]]]
    g = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    comps = []
    zlabel = labels[tris[ztri, 0]] if len(ztri) else np.zeros(0, dtype=int)
    for lab in np.unique(labels[idx]):
        nodes_c = idx[labels[idx] == lab]
        pts = pf.mesh.nodes[nodes_c]
        vals = s[nodes_c]
        zc = zpts[zlabel == lab] if len(zpts) else np.zeros((0, 2))
        allpts = np.vstack([pts, zc])
        allvals = np.concatenate([vals, np.zeros(len(zc))])
        w = np.maximum(threshold - allvals, 0.0) + 1e-300
        center = zc.mean(axis=0) if len(zc) == 1 else np.average(allpts, axis=0, weights=w)
        cov = np.cov(allpts.T) if len(allpts) > 2 else np.zeros((2, 2))
        ev, evec = np.linalg.eigh(cov)
        h = pf.mesh.h
        kind = "line" if ev[1] > 4 * max(ev[0], 0.0) and math.sqrt(max(ev[1], 0)) > 2 * h else "point"
        comps.append(NodalComponent(allpts, allvals, center, float(allvals.min()), kind, evec[:, 1]))
    comps.sort(key=lambda c: c.min_value)
    return comps


# --- snapshots ------------------------------------------------------------------

_SNAPSHOT_MAGIC = "# ldgpoly PField v1"


def write_snapshot(pf: PField, path) -> None:
    dom = pf.mesh.domain
    lines = [
        _SNAPSHOT_MAGIC,
        f"# domain {dom.kind if dom else 'unknown'}",
        f"# K {dom.K if dom and dom.K is not None else 0}",
        f"# apex_angle {dom.apex_angle if dom and dom.apex_angle is not None else 0.0!r}",
        f"# h {pf.mesh.h!r}",
        f"# levels {pf.mesh.levels}",
        f"# lambda_sq {float(pf.lambda_sq)!r}",
        f"# provenance {pf.provenance}",
        f"# nodes {pf.mesh.n_nodes}",
        "# x y p11 p12",
    ]
    body = np.column_stack([pf.mesh.nodes, pf.values])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, body, fmt="%.17g")


def read_snapshot(path, mesh: Mesh | None = None) -> PField:
    """Load a snapshot; rebuilds the mesh from the header when none is given."""
    header = {}
    with open(path) as fh:
        first = fh.readline().strip()
        if first != _SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a PField snapshot")
        for line in fh:
            if not line.startswith("#"):
                break
            parts = line[1:].split(None, 1)
            if len(parts) == 2:
                header[parts[0]] = parts[1].strip()
    data = np.loadtxt(path, comments="#", ndmin=2)
    if mesh is None:
        kind = header.get("domain")
        K = int(header.get("K", 0)) or None
        apex = float(header.get("apex_angle", 0.0)) or None
        dom = make_domain(kind, K=K, apex_angle=apex)
        mesh = triangulate(dom, float(header["h"]))
    if mesh.n_nodes != len(data) or np.abs(mesh.nodes - data[:, :2]).max() > 1e-9:
        raise ValueError(f"{path}: node coordinates do not match the mesh")
    return PField(mesh, data[:, 2:4], float(header.get("lambda_sq", 0.0)), header.get("provenance", "custom"))


__all__ = [
    "PField",
    "NewtonReport",
    "NodalComponent",
    "Discretization",
    "apply_dirichlet",
    "zero_interior",
    "assemble_residual",
    "assemble_jacobian",
    "free_block",
    "energy",
    "branch_measures",
    "l2_distance",
    "newton_solve",
    "solve_linear_limit",
    "nodal_set",
    "triangle_zeros",
    "write_snapshot",
    "read_snapshot",
]
