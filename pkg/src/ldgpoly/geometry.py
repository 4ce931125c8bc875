"""Computational domains and their symmetric triangulations.

Polygons are fan-triangulated from the centroid and then uniformly
red-refined, so a regular K-gon mesh is exactly invariant under the
dihedral group of the polygon.  The disc reuses the same path on a fine
regular polygon whose boundary nodes are pushed out to the unit circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Guard against runaway refinement (about 4.2M triangles).
MAX_TRIANGLES = 1 << 22

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class PolygonDomain:
    """A regular K-gon of unit circumradius, an isosceles triangle or the disc.

    ``vertices`` are listed counterclockwise; edge ``C_k`` (1-based) joins
    ``w_k`` to ``w_{k+1}``.  For the disc ``vertices`` is ``None``.
    """

    kind: str
    K: int | None = None
    apex_angle: float | None = None
    vertices: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def n_edges(self) -> int:
        return 0 if self.vertices is None else len(self.vertices)

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = self.n_edges
        return [(k, (k + 1) % n) for k in range(n)]

    @property
    def side_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)

    @property
    def area(self) -> float:
        if self.kind == "disc":
            return math.pi
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def centroid(self) -> np.ndarray:
        if self.kind == "disc":
            return np.zeros(2)
        return self.vertices.mean(axis=0)

    def label(self) -> str:
        if self.kind == "regular":
            return f"regular(K={self.K})"
        if self.kind == "isosceles":
            return f"isosceles(apex={self.apex_angle:g})"
        return "disc"


def regular_vertices(K: int) -> np.ndarray:
    t = 2.0 * np.pi * np.arange(K) / K
    return np.column_stack([np.cos(t), np.sin(t)])


def make_domain(kind: str, K: int | None = None, apex_angle: float | None = None) -> PolygonDomain:
    """Build a domain.

    Parameters
    ----------
    kind : {'regular', 'isosceles', 'disc'}
    K : int
        Number of edges for ``'regular'`` (at least 3).
    apex_angle : float
        Apex angle in degrees for ``'isosceles'``, in (0, 180).
    """
    if kind == "regular":
        if K is None or int(K) != K or K < 3:
            raise ValueError(f"a regular polygon needs an integer K >= 3, got {K!r}")
        K = int(K)
        return PolygonDomain("regular", K=K, vertices=regular_vertices(K))
    if kind == "isosceles":
        if apex_angle is None or not (0.0 < apex_angle < 180.0):
            raise ValueError(f"apex angle must lie in (0, 180) degrees, got {apex_angle!r}")
        th = math.radians(apex_angle)
        # inscribed in the unit circle; the base subtends a central angle 2*th
        verts = np.array(
            [
                [0.0, 1.0],
                [-math.sin(th), -math.cos(th)],
                [math.sin(th), -math.cos(th)],
            ]
        )
        return PolygonDomain("isosceles", K=3, apex_angle=float(apex_angle), vertices=verts)
    if kind == "disc":
        return PolygonDomain("disc")
    raise ValueError(f"unknown domain kind {kind!r}")


def disc_polygon_order(h_target: float) -> int:
    """Smallest even K whose chord sagitta ``1 - cos(pi/K)`` is below ``h/4``."""
    K = 8
    while 1.0 - math.cos(math.pi / K) >= h_target / 4.0:
        K += 2
    return K


@dataclass
class Mesh:
    """Conforming P1 triangulation with boundary bookkeeping.

    ``boundary_edge`` holds the 1-based polygon edge index of each boundary
    node, ``boundary_dist`` the distance to the nearest polygon vertex and
    ``vertex_index`` the 1-based polygon vertex number (0 for non-vertex
    nodes).  For the disc these refer to the underlying fine polygon.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    boundary_edge: np.ndarray
    boundary_dist: np.ndarray
    vertex_index: np.ndarray
    domain: PolygonDomain | None = None
    levels: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def h(self) -> float:
        return float(edge_lengths(self.nodes, self.triangles).max())

    @property
    def areas(self) -> np.ndarray:
        return signed_areas(self.nodes, self.triangles)

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    @property
    def is_boundary(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary] = True
        return mask


def signed_areas(nodes, tris):
    a, b, c = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def edge_lengths(nodes, tris):
    e = np.concatenate(
        [nodes[tris[:, 1]] - nodes[tris[:, 0]], nodes[tris[:, 2]] - nodes[tris[:, 1]], nodes[tris[:, 0]] - nodes[tris[:, 2]]]
    )
    return np.hypot(e[:, 0], e[:, 1])


def boundary_edges(tris):
    """Edges (sorted node pairs) used by exactly one triangle."""
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    uniq, counts = np.unique(e, axis=0, return_counts=True)
    return uniq[counts == 1]


def _red_refine(nodes, tris, on_circle):
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges.sort(axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (nodes[uniq[:, 0]] + nodes[uniq[:, 1]])
    if on_circle is not None:
        both = on_circle[uniq[:, 0]] & on_circle[uniq[:, 1]]
        r = np.hypot(mids[both, 0], mids[both, 1])
        mids[both] /= r[:, None]
        on_circle = np.concatenate([on_circle, both])
    n0 = len(nodes)
    m = len(tris)
    m01, m12, m20 = (n0 + inv[:m], n0 + inv[m : 2 * m], n0 + inv[2 * m :])
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    new = np.concatenate(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([m01, b, m12]),
            np.column_stack([m20, m12, c]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.vstack([nodes, mids]), new, on_circle


def triangulate(domain: PolygonDomain, h_target: float = 1.0 / 64) -> Mesh:
    """Fan-triangulate from the centroid and red-refine until ``h <= h_target``."""
    if not h_target > 0:
        raise ValueError(f"h_target must be positive, got {h_target}")
    if domain.kind == "disc":
        verts = regular_vertices(disc_polygon_order(h_target))
        center = np.zeros(2)
    else:
        verts = domain.vertices
        center = domain.centroid
    n = len(verts)
    nodes = np.vstack([center, verts])
    tris = np.array([[0, 1 + k, 1 + (k + 1) % n] for k in range(n)])
    on_circle = None
    if domain.kind == "disc":
        on_circle = np.zeros(len(nodes), dtype=bool)
        on_circle[1:] = True
    levels = 0
    # the disc is sized on the unprojected polygon; projection stretches
    # rim edges by at most the sagitta fraction
    size = edge_lengths(nodes, tris).max()
    while size > h_target * (1 + 1e-12):
        if 4 * len(tris) > MAX_TRIANGLES:
            raise MemoryError(f"h_target={h_target} needs more than {MAX_TRIANGLES} triangles")
        nodes, tris, on_circle = _red_refine(nodes, tris, on_circle)
        levels += 1
        size *= 0.5
    mesh = Mesh(
        nodes=nodes,
        triangles=tris,
        boundary=np.empty(0, dtype=int),
        boundary_edge=np.empty(0, dtype=int),
        boundary_dist=np.empty(0),
        vertex_index=np.empty(0, dtype=int),
        domain=domain,
        levels=levels,
    )
    classify_boundary(mesh, domain, _polygon=verts)
    return mesh


def classify_boundary(mesh: Mesh, domain: PolygonDomain, _polygon=None):
    """Attach edge index, vertex-distance and vertex flags to boundary nodes.

    Returns ``(boundary, edge, dist, vertex)`` and stores them on ``mesh``.
    Raises ``ValueError`` if a boundary node is not on the domain boundary.
    """
    bnodes = np.unique(boundary_edges(mesh.triangles))
    pts = mesh.nodes[bnodes]
    if domain.kind == "disc":
        if _polygon is None:
            _polygon = regular_vertices(_disc_order_from_mesh(mesh))
        r = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(np.abs(r - 1.0) > BOUNDARY_TOL):
            raise ValueError("boundary node off the unit circle")
        n = len(_polygon)
        theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
        edge = np.floor(theta / (2 * np.pi / n) + 1e-12).astype(int) % n
        dv = np.linalg.norm(pts[:, None, :] - _polygon[None, :, :], axis=2)
        dist = dv.min(axis=1)
        vertex = np.where(dist < BOUNDARY_TOL, dv.argmin(axis=1) + 1, 0)
        mesh.boundary, mesh.boundary_edge = bnodes, edge + 1
        mesh.boundary_dist, mesh.vertex_index = dist, vertex
        return bnodes, edge + 1, dist, vertex

    verts = domain.vertices
    n = len(verts)
    a = verts
    b = np.roll(verts, -1, axis=0)
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    rel = pts[:, None, :] - a[None, :, :]
    t = np.einsum("pkj,kj->pk", rel, d) / L2
    tc = np.clip(t, 0.0, 1.0)
    foot = a[None, :, :] + tc[..., None] * d[None, :, :]
    gap = np.linalg.norm(pts[:, None, :] - foot, axis=2)
    scale = max(1.0, float(np.abs(verts).max()))
    edge = gap.argmin(axis=1)
    if np.any(gap[np.arange(len(pts)), edge] > BOUNDARY_TOL * scale * 10):
        raise ValueError("boundary node off the polygon boundary")
    dv = np.linalg.norm(pts[:, None, :] - verts[None, :, :], axis=2)
    dist = dv.min(axis=1)
    vertex = np.where(dist < BOUNDARY_TOL * scale * 10, dv.argmin(axis=1) + 1, 0)
    edge = np.where(vertex > 0, vertex - 1, edge)
    mesh.boundary, mesh.boundary_edge = bnodes, edge + 1
    mesh.boundary_dist, mesh.vertex_index = dist, vertex
    return bnodes, edge + 1, dist, vertex


def _disc_order_from_mesh(mesh):
    # the fan vertices are nodes 1..K of the unrefined mesh
    pts = mesh.nodes[1:]
    K = 0
    for i, p in enumerate(pts):
        if i > 0 and np.allclose(p, [1.0, 0.0]):
            break
        K += 1
    return K


def symmetry_images(points, K: int) -> list[tuple[str, int, np.ndarray]]:
    """All ``2K`` images of ``points`` under the dihedral group of ``E_K``.

    Returns ``(kind, k, image)`` with kind 'rot' (angle 2*pi*k/K) or
    'ref' (reflection about the axis at angle pi*k/K).
    """
    out = []
    pts = np.asarray(points, dtype=float)
    for k in range(K):
        t = 2 * np.pi * k / K
        R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        out.append(("rot", k, pts @ R.T))
    for k in range(K):
        t = 2 * np.pi * k / K
        S = np.array([[math.cos(t), math.sin(t)], [math.sin(t), -math.cos(t)]])
        out.append(("ref", k, pts @ S.T))
    return out


def node_permutation(mesh: Mesh, image_points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Index map ``perm`` with ``mesh.nodes[perm[i]] == image_points[i]``."""
    from scipy.spatial import cKDTree

    dist, idx = cKDTree(mesh.nodes).query(image_points)
    if np.any(dist > tol):
        raise ValueError("mesh is not invariant under the requested map")
    return idx


def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"NODES {mesh.n_nodes}\n")
        for x, y in mesh.nodes.tolist():
            fh.write(f"{x!r} {y!r}\n")
        fh.write(f"TRIANGLES {len(mesh.triangles)}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        fh.write(f"BOUNDARY {len(mesh.boundary)}\n")
        for i, k, d, v in zip(mesh.boundary.tolist(), mesh.boundary_edge.tolist(), mesh.boundary_dist.tolist(), mesh.vertex_index.tolist()):
            fh.write(f"{i} {k} {d!r} {v}\n")


def read_mesh(path, domain: PolygonDomain | None = None) -> Mesh:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    pos = 0

    def section(name):
        nonlocal pos
        head = lines[pos]
        if head[0] != name:
            raise ValueError(f"expected section {name}, found {head[0]}")
        n = int(head[1])
        rows = lines[pos + 1 : pos + 1 + n]
        pos += 1 + n
        return rows

    nodes = np.array(section("NODES"), dtype=float).reshape(-1, 2)
    tris = np.array(section("TRIANGLES"), dtype=int).reshape(-1, 3)
    brows = section("BOUNDARY")
    b = np.array([[r[0], r[1], r[3]] for r in brows], dtype=int).reshape(-1, 3)
    dist = np.array([r[2] for r in brows], dtype=float)
    return Mesh(nodes, tris, b[:, 0], b[:, 1], dist, b[:, 2], domain=domain)
