"""Named presets that regenerate the data behind each figure.

Every recipe writes into ``out`` and returns the list of files it made.
Bifurcation presets default to ``h = 1/32`` so that they finish in a few
minutes; pass a smaller ``h`` for publication-grade meshes.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .boundary import enumerate_splay_pairs
from .continuation import (
    StepPolicy,
    classify_branch,
    detect_transitions,
    find_bd_states,
    is_ring,
    ring_state,
    sweep,
)
from .export import write_branch_csv, write_events, write_vtk
from .fem import energy, newton_solve, solve_linear_limit, triangle_zeros, write_snapshot
from .geometry import make_domain, triangulate
from .plotting import plot_branches, plot_field
from .seeds import pinfty_interpolant, ring_interpolant
from .stability import classify_stability
from .tensor import DEFAULT_CONSTANTS

log = logging.getLogger(__name__)

RECIPES = (
    "ring-gallery",
    "hexagon-bd",
    "hexagon-2250",
    "bifurcation-hexagon",
    "bifurcation-pentagon",
    "isosceles-migration",
    "lambda1-vs-ring",
)


def _field_outputs(pf, out: Path, stem: str, title=None, vtk=True, svg=True):
    files = [out / f"{stem}.field"]
    write_snapshot(pf, files[0])
    if vtk:
        files.append(out / f"{stem}.vtk")
        write_vtk(pf, files[-1])
    if svg:
        files.append(out / f"{stem}.svg")
        plot_field(pf, files[-1], title)
    return files


def ring_gallery(out: Path, h=1.0 / 64, constants=DEFAULT_CONSTANTS, **_):
    files = []
    for K in (3, 4, 5, 6):
        mesh = triangulate(make_domain("regular", K=K), h)
        files += _field_outputs(ring_interpolant(mesh, constants), out, f"ring_K{K}", f"ring, K = {K}")
    mesh = triangulate(make_domain("disc"), h)
    files += _field_outputs(ring_interpolant(mesh, constants), out, "ring_disc", "ring, disc")
    return files


def hexagon_bd(out: Path, h=1.0 / 64, lambda_sq=40.0, constants=DEFAULT_CONSTANTS, **_):
    mesh = triangulate(make_domain("regular", K=6), h)
    ring = ring_state(mesh, lambda_sq, constants)
    files = []
    rows = []
    for i, pf in enumerate(find_bd_states(ring, lambda_sq, constants)):
        lab = classify_branch(pf, constants)
        st = classify_stability(pf, lambda_sq, constants=constants)
        rows.append([i, lab.label, lab.pair_id, lambda_sq, energy(pf, lambda_sq, constants), st.eigen.mu_min, st.index])
        files += _field_outputs(pf, out, f"bd_{i}", f"BD, edges {lab.pair_id}")
    files.append(out / "bd_states.csv")
    with open(files[-1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", "label", "pair_id", "lambda_sq", "energy", "mu_min", "index"])
        w.writerows(rows)
    return files


def large_lambda_states(mesh, lambda_sq=2250.0, constants=DEFAULT_CONSTANTS):
    """Newton from every splay-pair seed; ``(pair, class, field, report)``."""
    out = []
    for pair, cls in enumerate_splay_pairs(mesh.domain.K):
        seed = pinfty_interpolant(mesh, pair, constants)
        pf, rep = newton_solve(seed, lambda_sq, constants=constants)
        out.append((pair, cls, pf, rep))
    return out


def hexagon_2250(out: Path, h=1.0 / 64, lambda_sq=2250.0, constants=DEFAULT_CONSTANTS, **_):
    mesh = triangulate(make_domain("regular", K=6), h)
    files = []
    rows = []
    for pair, cls, pf, rep in large_lambda_states(mesh, lambda_sq, constants):
        st = classify_stability(pf, lambda_sq, constants=constants) if rep.converged else None
        lab = classify_branch(pf, constants)
        rows.append(
            [f"{pair[0]}-{pair[1]}", cls, lab.label, int(rep.converged), energy(pf, lambda_sq, constants),
             st.eigen.mu_min if st else math.nan, int(st.stable) if st else 0]
        )
        files += _field_outputs(pf, out, f"hex2250_{pair[0]}{pair[1]}", f"{cls} ({pair[0]},{pair[1]})", vtk=False)
    files.append(out / "hexagon_2250.csv")
    with open(files[-1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_id", "seed_class", "label", "converged", "energy", "mu_min", "stable"])
        w.writerows(rows)
    return files


@dataclass
class BifurcationData:
    """Branches and stability events behind one bifurcation diagram."""

    mesh: object
    lambda_star: float
    branches: list
    events: list
    bd_states: list = field(default_factory=list)
    bd_lambda_sq: float = math.nan

    def branch(self, label):
        return [b for b in self.branches if b.label == label]


def compute_bifurcation(K: int, h=1.0 / 32, constants=DEFAULT_CONSTANTS, lambda_max=2250.0, ring_max=600.0, classes=None):
    """Ring sweep up, one representative of each large-lambda class swept down, BD swept up.

    Branches related by a symmetry of the polygon coincide in energy, so
    one representative per class is enough for the diagram.  Downward
    sweeps stop once the state has become rotation invariant, i.e. merged
    into the ring.
    """
    mesh = triangulate(make_domain("regular", K=K), h)
    branches, events = [], []
    ring0 = solve_linear_limit(mesh, constants)
    rb = sweep(ring0, 0.1, ring_max, StepPolicy(step=5.0, max_step=20.0, grow=1.25), label="Ring", constants=constants)
    branches.append(rb)
    ring_events = detect_transitions(rb, constants=constants)
    events += ring_events
    lam_star = ring_events[0].lambda_high if ring_events else math.nan
    stop_at = 1.05 * lam_star if ring_events else 10.0
    merged = lambda pf: is_ring(pf, 1e-4)
    down = StepPolicy(step=0.15, max_step=0.15, grow=1.0, relative=True, min_step=1e-3)
    seen = set()
    for pair, cls in enumerate_splay_pairs(K):
        if cls in seen or (classes is not None and cls not in classes):
            continue
        seen.add(cls)
        log.info("sweeping %s (%d,%d) down from %g", cls, pair[0], pair[1], lambda_max)
        br = sweep(
            pinfty_interpolant(mesh, pair, constants), lambda_max, stop_at, down,
            label=cls, pair_id=f"{pair[0]}-{pair[1]}", constants=constants, stop=merged,
        )
        branches.append(br)
        events += detect_transitions(br, constants=constants)
    bd_lam = 1.5 * (lam_star if ring_events else 10.0)
    bd = find_bd_states(ring_state(mesh, bd_lam, constants), bd_lam, constants)
    if bd:
        lab = classify_branch(bd[0], constants)
        up = StepPolicy(step=0.15, max_step=0.15, grow=1.0, relative=True, min_step=1e-3)
        br = sweep(replace(bd[0], provenance="bd"), bd_lam, ring_max, up, label="BD", pair_id=lab.pair_id, constants=constants)
        branches.append(br)
        events += detect_transitions(br, constants=constants)
    return BifurcationData(mesh, lam_star, branches, events, bd, bd_lam)


def bifurcation_diagram(K: int, out: Path, h=1.0 / 32, constants=DEFAULT_CONSTANTS, **kw):
    data = compute_bifurcation(K, h, constants, **kw)
    files = [out / f"branches_K{K}.csv", out / f"events_K{K}.jsonl", out / f"energy_K{K}.svg", out / f"m11_K{K}.svg", out / f"m12_K{K}.svg"]
    write_branch_csv(data.branches, files[0])
    write_events(data.events, files[1])
    plot_branches(data.branches, files[2], "energy")
    plot_branches(data.branches, files[3], "m11")
    plot_branches(data.branches, files[4], "m12")
    return files


def bifurcation_hexagon(out: Path, h=1.0 / 32, constants=DEFAULT_CONSTANTS, **_):
    return bifurcation_diagram(6, out, h, constants)


def bifurcation_pentagon(out: Path, h=1.0 / 32, constants=DEFAULT_CONSTANTS, **_):
    return bifurcation_diagram(5, out, h, constants)


def zero_location(pf):
    """Location of the isotropic point of a field with a single defect.

    The exact zero of the piecewise-linear interpolant when one lies off
    the polygon vertices, otherwise the node minimising ``|p|``.  For apex
    angles of 90 degrees or more the boundary data has zero winding and the
    minimum sits on the apex vertex itself.
    """
    pts, _ = triangle_zeros(pf)
    off_vertex = np.linalg.norm(pts[:, None] - pf.mesh.domain.vertices[None], axis=2).min(axis=1) > 1e-9
    interior = pts[off_vertex]
    if len(interior) == 0:
        return pf.mesh.nodes[np.argmin(pf.s)].copy()
    # coincident hits on a shared edge or vertex
    if len(interior) > 1 and np.ptp(interior, axis=0).max() > 4 * pf.mesh.h:
        raise RuntimeError(f"expected one zero, found {len(interior)}")
    return interior.mean(axis=0)


def isosceles_migration(out: Path, h=1.0 / 64, angles=(120.0, 90.0, 75.0, 60.0), constants=DEFAULT_CONSTANTS, **_):
    files, rows = [], []
    for ang in angles:
        dom = make_domain("isosceles", apex_angle=ang)
        mesh = triangulate(dom, h)
        pf = solve_linear_limit(mesh, constants)
        z = zero_location(pf)
        apex = dom.vertices[0]
        d_apex = float(np.linalg.norm(z - apex))
        rows.append([ang, z[0], z[1], d_apex, float(np.linalg.norm(z - dom.centroid)),
                     d_apex / float(np.linalg.norm(dom.centroid - apex)), float(pf.s.min())])
        files += _field_outputs(pf, out, f"isosceles_{int(ang)}", f"apex {ang:g} deg", vtk=False)
    files.append(out / "isosceles_zeros.csv")
    with open(files[-1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["apex_angle", "zero_x", "zero_y", "dist_apex", "dist_centroid", "progress", "min_s"])
        w.writerows(rows)
    return files


def compare_lambda1(mesh, constants=DEFAULT_CONSTANTS):
    """``max |s0 s1 sin(2g0 - 2g1)|`` and ``max |s1^2 - s0^2|`` between lambda^2 = 0 and 1."""
    p0 = solve_linear_limit(mesh, constants)
    p1, rep = newton_solve(p0, 1.0, constants=constants)
    if not rep.converged:
        raise RuntimeError(rep.message)
    # s0 s1 sin(2g0 - 2g1) is the cross product of the two (p11, p12) vectors
    cross = p0.p12 * p1.p11 - p0.p11 * p1.p12
    return float(np.abs(cross).max()), float(np.abs(p1.s**2 - p0.s**2).max()), p0, p1


def lambda1_vs_ring(out: Path, h=1.0 / 64, constants=DEFAULT_CONSTANTS, **_):
    files, rows = [], []
    doms = [("K3", make_domain("regular", K=3)), ("K4", make_domain("regular", K=4)),
            ("K5", make_domain("regular", K=5)), ("K6", make_domain("regular", K=6)), ("disc", make_domain("disc"))]
    for name, dom in doms:
        mesh = triangulate(dom, h)
        angle_dev, s_dev, p0, p1 = compare_lambda1(mesh, constants)
        rows.append([name, mesh.n_nodes, mesh.h, angle_dev, s_dev])
        files += _field_outputs(p1, out, f"lambda1_{name}", f"$\\lambda^2$ = 1, {dom.label()}", vtk=False)
    files.append(out / "lambda1_vs_ring.csv")
    with open(files[-1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["domain", "nodes", "h", "max_angle_dev", "max_s2_dev"])
        w.writerows(rows)
    return files


_TABLE = {
    "ring-gallery": ring_gallery,
    "hexagon-bd": hexagon_bd,
    "hexagon-2250": hexagon_2250,
    "bifurcation-hexagon": bifurcation_hexagon,
    "bifurcation-pentagon": bifurcation_pentagon,
    "isosceles-migration": isosceles_migration,
    "lambda1-vs-ring": lambda1_vs_ring,
}


def run_recipe(name: str, out, h=None, constants=DEFAULT_CONSTANTS):
    if name not in _TABLE:
        raise KeyError(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    kw = {"constants": constants}
    if h is not None:
        kw["h"] = h
    return _TABLE[name](out, **kw)
