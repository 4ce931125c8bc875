"""Natural-parameter continuation in ``lambda^2`` and branch bookkeeping."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .boundary import pair_class
from .fem import PField, branch_measures, energy, l2_distance, newton_solve, nodal_set
from .geometry import node_permutation
from .stability import field_eigen
from .tensor import DEFAULT_CONSTANTS, MaterialConstants

log = logging.getLogger(__name__)


# --- symmetry ---------------------------------------------------------------------


def transform_field(pf: PField, kind: str, k: int) -> PField:
    """Apply a dihedral element of the K-gon to a field.

    Rotation by ``t = 2 pi k / K`` acts as ``P(x) -> R(2t) P(R(-t) x)``;
    reflection about the axis at ``pi k / K`` acts as
    ``P(x) -> S(2t') P(S x)`` with ``S(2t')`` the reflection of the doubled
    angle.  The mesh must be invariant under the element.
    """
    K = pf.mesh.domain.K
    t = 2 * math.pi * k / K
    c, s = math.cos(t), math.sin(t)
    x = pf.mesh.nodes
    if kind == "rot":
        pre = x @ np.array([[c, s], [-s, c]]).T  # R(-t) x
        c2, s2 = math.cos(2 * t), math.sin(2 * t)
        L = np.array([[c2, -s2], [s2, c2]])
    elif kind == "ref":
        pre = x @ np.array([[c, s], [s, -c]]).T
        c2, s2 = math.cos(2 * t), math.sin(2 * t)
        L = np.array([[c2, s2], [s2, -c2]])
    else:
        raise ValueError(f"unknown group element kind {kind!r}")
    src = node_permutation(pf.mesh, pre)
    return pf.with_values(pf.values[src] @ L.T)


def symmetry_defect(pf: PField, kind: str, k: int) -> float:
    """Sup-norm distance between ``pf`` and its image."""
    return float(np.abs(transform_field(pf, kind, k).values - pf.values).max())


# --- branches --------------------------------------------------------------------


@dataclass
class BranchRecord:
    lambda_sq: float
    field: PField
    energy: float
    m11: float
    m12: float
    mu_min: float
    stable: bool
    eigenvalues: np.ndarray | None = None
    eigvec: np.ndarray | None = None


@dataclass
class SolutionBranch:
    label: str
    pair_id: str = ""
    records: list[BranchRecord] = field(default_factory=list)
    truncated: str = ""

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lambda_sq for r in self.records])

    @property
    def mu(self) -> np.ndarray:
        return np.array([r.mu_min for r in self.records])

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def check(self):
        lam = self.lambdas
        d = np.diff(lam)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("lambda^2 must be strictly monotone along a branch")
        for r in self.records:
            if r.stable != (r.mu_min > 0):
                raise ValueError("stable flag disagrees with mu_min")


@dataclass
class StepPolicy:
    step: float = 10.0
    min_step: float = 1e-3
    max_step: float | None = None
    grow: float = 1.5
    max_jump: float | None = 0.3  # L2 distance between consecutive fields
    relative: bool = False  # steps are fractions of the current lambda^2


@dataclass
class BifurcationEvent:
    lambda_low: float
    lambda_high: float
    label: str
    direction: str  # "loss" or "gain" of stability with increasing lambda^2
    mu_low: float
    mu_high: float


def make_record(pf: PField, lambda_sq: float, constants=DEFAULT_CONSTANTS, seed: int = 0, keep_vector=False):
    eig = field_eigen(pf, lambda_sq, constants, seed=seed)
    m11, m12 = branch_measures(pf)
    return BranchRecord(
        float(lambda_sq),
        pf,
        energy(pf, lambda_sq, constants),
        m11,
        m12,
        eig.mu_min,
        bool(eig.mu_min > 0),
        eig.eigenvalues,
        eig.eigvec if keep_vector else None,
    )


def sweep(
    seed: PField,
    lambda_from: float,
    lambda_to: float,
    policy: StepPolicy | None = None,
    label: str = "",
    pair_id: str = "",
    constants: MaterialConstants = DEFAULT_CONSTANTS,
    eig_seed: int = 0,
    record_every: float | None = None,
    stop=None,
) -> SolutionBranch:
    """Follow a solution branch from ``lambda_from`` to ``lambda_to``.

    Each step warm-starts Newton from the previous solution.  A failed
    Newton solve (or a jump larger than ``policy.max_jump``) halves the
    step; below ``policy.min_step`` the branch is truncated with a reason.
    ``record_every`` thins the stored records to roughly that spacing.
    ``stop(field)`` returning true ends the branch before that state is
    recorded, e.g. when it has merged into the ring.
    """
    policy = policy or StepPolicy()
    if lambda_from == lambda_to:
        raise ValueError("empty lambda range")
    direction = 1.0 if lambda_to > lambda_from else -1.0
    branch = SolutionBranch(label or seed.provenance, pair_id)
    cur, rep = newton_solve(seed, lambda_from, constants=constants)
    if not rep.converged:
        branch.truncated = f"seed did not converge at lambda^2={lambda_from}: {rep.message}"
        return branch
    branch.records.append(make_record(cur, lambda_from, constants, eig_seed))
    lam = lambda_from
    step = abs(policy.step)
    last_kept = lam
    while direction * (lambda_to - lam) > 1e-12:
        inc = step * abs(lam) if policy.relative else step
        nxt = lam + direction * min(inc, abs(lambda_to - lam))
        trial, rep = newton_solve(cur, nxt, constants=constants)
        ok = rep.converged
        if ok and policy.max_jump is not None and l2_distance(trial, cur) > policy.max_jump:
            ok = False
        if not ok:
            step *= 0.5
            if (step * abs(lam) if policy.relative else step) < policy.min_step:
                branch.truncated = f"Newton failed below the minimum step near lambda^2={nxt:.6g}"
                log.info("branch %s truncated: %s", branch.label, branch.truncated)
                break
            continue
        if stop is not None and stop(trial):
            branch.truncated = f"stop condition met at lambda^2={nxt:.6g}"
            break
        cur, lam = replace(trial, provenance=seed.provenance), nxt
        done = direction * (lambda_to - lam) <= 1e-12
        if record_every is None or abs(lam - last_kept) >= record_every - 1e-9 or done:
            branch.records.append(make_record(cur, lam, constants, eig_seed))
            last_kept = lam
        grown = step * policy.grow
        step = grown if policy.max_step is None else min(grown, policy.max_step)
    return branch


def detect_transitions(
    branch: SolutionBranch,
    refine: bool = True,
    rel_width: float = 1e-2,
    constants: MaterialConstants = DEFAULT_CONSTANTS,
    max_bisections: int = 40,
) -> list[BifurcationEvent]:
    """Bracket every sign change of ``mu_min`` and refine it by bisection."""
    events = []
    recs = sorted(branch.records, key=lambda r: r.lambda_sq)
    for a, b in zip(recs[:-1], recs[1:]):
        if (a.mu_min > 0) == (b.mu_min > 0):
            continue
        lo, hi = a, b
        if refine:
            for _ in range(max_bisections):
                if (hi.lambda_sq - lo.lambda_sq) <= rel_width * abs(hi.lambda_sq):
                    break
                mid = 0.5 * (lo.lambda_sq + hi.lambda_sq)
                pf, rep = newton_solve(lo.field, mid, constants=constants)
                if not rep.converged:
                    pf, rep = newton_solve(hi.field, mid, constants=constants)
                if not rep.converged:
                    break
                rec = make_record(pf, mid, constants)
                if (rec.mu_min > 0) == (lo.mu_min > 0):
                    lo = rec
                else:
                    hi = rec
        direction = "loss" if lo.mu_min > 0 else "gain"
        events.append(BifurcationEvent(lo.lambda_sq, hi.lambda_sq, branch.label, direction, lo.mu_min, hi.mu_min))
    return events


def energy_jumps(branch: SolutionBranch, factor: float = 10.0) -> tuple[float, list[int]]:
    """Empirical ``|dE/dlambda^2|`` bound and indices of suspicious jumps."""
    lam, E = branch.lambdas, branch.energies
    if len(lam) < 3:
        return (float(np.max(np.abs(np.diff(E) / np.diff(lam)))) if len(lam) == 2 else 0.0), []
    slope = np.abs(np.diff(E) / np.diff(lam))
    bad = []
    for i in range(len(slope)):
        nb = np.concatenate([slope[max(0, i - 2) : i], slope[i + 1 : i + 3]])
        if len(nb) and slope[i] > factor * max(np.median(nb), 1e-12):
            bad.append(i + 1)
    return float(slope.max()), bad


# --- classification -------------------------------------------------------------


def corner_rotations(pf: PField, radius: float | None = None) -> np.ndarray:
    """Director rotation ``gamma`` swept across each polygon corner.

    Nodes in an annulus around vertex ``w_k`` are ordered by angle from
    edge ``C_{k-1}`` to edge ``C_k`` and the doubled angle is unwrapped.
    A bend corner turns by about ``2 pi/K``, a splay corner by
    ``2 pi/K - pi``.
    """
    mesh = pf.mesh
    verts = mesh.domain.vertices
    K = len(verts)
    side = float(mesh.domain.side_lengths.min())
    # wide enough to enclose a splay defect that has not yet reached its corner
    r = radius or 0.45 * side
    out = np.empty(K)
    for k in range(K):
        v = verts[k]
        rel = mesh.nodes - v
        d = np.hypot(rel[:, 0], rel[:, 1])
        ring = np.flatnonzero((d > 0.9 * r) & (d < 1.1 * r))
        # interior opens counterclockwise from the outgoing edge C_k to the incoming one
        prev = verts[k - 1] - v
        nxt = verts[(k + 1) % K] - v
        a0 = math.atan2(nxt[1], nxt[0])
        theta = np.mod(np.arctan2(rel[ring, 1], rel[ring, 0]) - a0, 2 * np.pi)
        opening = np.mod(math.atan2(prev[1], prev[0]) - a0, 2 * np.pi)
        keep = theta <= opening + 1e-9
        ring, theta = ring[keep], theta[keep]
        # sweep from the C_{k-1} side to the C_k side
        order = np.argsort(-theta)
        ang2 = np.unwrap(np.arctan2(pf.p12[ring[order]], pf.p11[ring[order]]))
        out[k] = 0.5 * (ang2[-1] - ang2[0])
    return out


def splay_corners(pf: PField, radius: float | None = None) -> list[int]:
    """1-based corner indices ``j`` (corner ``j`` sits at vertex ``w_{j+1}``)."""
    rot = corner_rotations(pf, radius)
    K = len(rot)
    return sorted(int((k - 1) % K) + 1 for k in np.flatnonzero(rot < 0))


def is_ring(pf: PField, tol: float = 1e-6) -> bool:
    """Invariance under the rotation by ``2 pi/K``, relative to ``max(1, |P|_inf)``."""
    if pf.mesh.domain.kind != "regular":
        return False
    scale = max(1.0, float(np.abs(pf.values).max()))
    return symmetry_defect(pf, "rot", 1) <= tol * scale


@dataclass
class BranchLabel:
    label: str
    pair: tuple[int, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def pair_id(self) -> str:
        return "-".join(str(i) for i in self.pair)


def low_order_lines(pf: PField, fraction: float = 0.3, constants: MaterialConstants = DEFAULT_CONSTANTS):
    """Line-shaped components of ``|P| < fraction * B/2C`` away from corners.

    Returns ``(center, direction, component)`` triples.
    """
    thr = fraction * constants.boundary_amplitude
    side = float(pf.mesh.domain.side_lengths.min())
    out = []
    for c in nodal_set(pf, thr):
        dv = np.linalg.norm(c.points[:, None, :] - pf.mesh.domain.vertices[None], axis=2).min(axis=1)
        pts = c.points[dv > 0.15 * side]
        if len(pts) < 3:
            continue
        ev, evec = np.linalg.eigh(np.cov(pts.T))
        if ev[1] > 4 * max(ev[0], 1e-30) and math.sqrt(ev[1]) > 0.05 * side:
            out.append((pts.mean(axis=0), evec[:, 1], c))
    return out


def edge_alignment(domain, center, direction) -> tuple[int, float, float]:
    """Nearest edge (1-based), its distance, and ``|sin|`` of the angle to it."""
    v = domain.vertices
    best = None
    for k in range(len(v)):
        a, b = v[k], v[(k + 1) % len(v)]
        t = b - a
        t = t / np.linalg.norm(t)
        n = np.array([-t[1], t[0]])
        dist = abs(float((center - a) @ n))
        sin = abs(float(direction[0] * t[1] - direction[1] * t[0]))
        if best is None or dist < best[1]:
            best = (k + 1, dist, sin)
    return best


def classify_branch(pf: PField, constants: MaterialConstants = DEFAULT_CONSTANTS) -> BranchLabel:
    """Ring, Para/Meta/Ortho (with splay pair), BD, or other.

    Ring means rotation invariance under ``2 pi/K``.  BD means at least one
    interior line of low order aligned with an edge.  Otherwise the splay
    corners, found from the sign of the director rotation across each
    corner, decide the class when there are exactly two.
    """
    diag = {}
    if pf.mesh.domain.kind != "regular":
        raise ValueError("branch classification needs a regular polygon")
    K = pf.mesh.domain.K
    if is_ring(pf):
        return BranchLabel("Ring", (), {"rotation_defect": symmetry_defect(pf, "rot", 1)})
    splay = splay_corners(pf)
    diag["splay_corners"] = splay
    lines = low_order_lines(pf, constants=constants)
    aligned = []
    for center, direction, _ in lines:
        edge, dist, sin = edge_alignment(pf.mesh.domain, center, direction)
        if sin < 0.25:
            aligned.append(edge)
    diag["low_order_edges"] = aligned
    if aligned:
        return BranchLabel("BD", tuple(sorted(set(aligned))), diag)
    if len(splay) == 2:
        lab = pair_class(K, tuple(splay))
        if lab in ("Para", "Meta", "Ortho"):
            return BranchLabel(lab, tuple(splay), diag)
    return BranchLabel("other", tuple(splay), diag)


# --- branch switching ----------------------------------------------------------


def _free_to_field(base: PField, vec: np.ndarray) -> np.ndarray:
    from .fem import discretization

    d = discretization(base.mesh)
    x = np.zeros(d.ndof)
    x[d.free_dofs] = vec
    return x.reshape(-1, 2)


def symmetric_direction(base: PField, eigen, kind: str, k: int, n_modes: int | None = None) -> np.ndarray | None:
    """Critical eigenvector projected onto the fixed space of one group element.

    Uses the eigenvectors with negative (or, failing that, the two
    smallest) eigenvalues.  Returns nodal values scaled to unit sup-norm,
    or ``None`` if the projection vanishes.
    """
    vals = eigen.eigenvalues
    V = eigen.vectors
    if n_modes is None:
        n_modes = max(int(np.sum(vals < 0)), 2)
    best = None
    for j in range(min(n_modes, V.shape[1])):
        f = base.with_values(_free_to_field(base, V[:, j]))
        g = transform_field(f, kind, k)
        pr = 0.5 * (f.values + g.values)
        if best is None or np.linalg.norm(pr) > np.linalg.norm(best):
            best = pr
    if best is None or np.abs(best).max() < 1e-8:
        return None
    return best / np.abs(best).max()


def switch_branch(
    base: PField,
    lambda_sq: float,
    direction: np.ndarray,
    amplitudes=(0.1, 0.25, 0.5, 1.0),
    min_distance: float = 1e-3,
    constants: MaterialConstants = DEFAULT_CONSTANTS,
) -> PField | None:
    """Newton from ``base + eps * direction``; the first solution away from ``base``."""
    for eps in amplitudes:
        seed = base.with_values(base.values + eps * direction)
        pf, rep = newton_solve(seed, lambda_sq, constants=constants)
        if rep.converged and l2_distance(pf, base) > min_distance:
            return pf
    return None


def orbit(pf: PField, tol: float = 1e-6) -> list[PField]:
    """Distinct images of ``pf`` under the dihedral group of the polygon."""
    K = pf.mesh.domain.K
    out: list[PField] = []
    for kind in ("rot", "ref"):
        for k in range(K):
            img = transform_field(pf, kind, k)
            if all(l2_distance(img, q) > tol for q in out):
                out.append(img)
    return out


def ring_state(mesh, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS, steps: int = 12) -> PField:
    """Ring branch at ``lambda_sq`` by continuation from the discrete harmonic map.

    The steps are geometric in ``lambda^2``; the symmetric iterates stay
    on the symmetric branch even after it loses stability.
    """
    from .fem import solve_linear_limit

    pf = solve_linear_limit(mesh, constants)
    if lambda_sq == 0:
        return pf
    for lam in np.geomspace(min(1.0, lambda_sq), lambda_sq, steps):
        pf, rep = newton_solve(pf, lam, constants=constants)
        if not rep.converged:
            raise RuntimeError(f"ring continuation failed at lambda^2={lam:.6g}: {rep.message}")
    return replace(pf, provenance="ring", lambda_sq=float(lambda_sq))


def find_bd_states(
    ring: PField, lambda_sq: float, constants: MaterialConstants = DEFAULT_CONSTANTS, amplitudes=(0.1, 0.25, 0.5, 1.0)
) -> list[PField]:
    """BD states near the ring's loss of stability, via reflection-symmetric switching.

    The ring Hessian at ``lambda_sq`` (just past the onset) has a
    degenerate unstable eigenspace.  Restricting it to the fixed space of
    each reflection and perturbing both ways yields the bifurcating states;
    those classified BD are kept and completed to their full group orbit.
    """
    from .stability import field_eigen

    eig = field_eigen(ring, lambda_sq, constants, block=6)
    found: list[PField] = []
    for k in (0, 1):
        v = symmetric_direction(ring, eig, "ref", k)
        if v is None:
            continue
        for sign in (1.0, -1.0):
            pf = switch_branch(ring, lambda_sq, sign * v, amplitudes, constants=constants)
            if pf is None or classify_branch(pf, constants).label != "BD":
                continue
            for img in orbit(replace(pf, provenance="bd")):
                if all(l2_distance(img, q) > 1e-6 for q in found):
                    found.append(img)
    return found
