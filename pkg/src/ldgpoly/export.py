"""Writers for branch tables, legacy VTK fields and run summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .continuation import BifurcationEvent, SolutionBranch
from .fem import PField
from .tensor import DEFAULT_CONSTANTS, MaterialConstants

BRANCH_COLUMNS = ("branch_label", "pair_id", "lambda_sq", "energy", "m11", "m12", "mu_min", "stable")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_branch_csv(branches, path) -> None:
    """One row per record; several branches may share a file."""
    if isinstance(branches, SolutionBranch):
        branches = [branches]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BRANCH_COLUMNS)
        for b in branches:
            for r in b.records:
                w.writerow(
                    [b.label, b.pair_id, _fmt(r.lambda_sq), _fmt(r.energy), _fmt(r.m11), _fmt(r.m12), _fmt(r.mu_min), int(r.stable)]
                )


def read_branch_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("lambda_sq", "energy", "m11", "m12", "mu_min"):
            r[k] = float(r[k])
        r["stable"] = bool(int(r["stable"]))
    return rows


def write_events(events: list[BifurcationEvent], path) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(
                json.dumps(
                    {
                        "label": e.label,
                        "direction": e.direction,
                        "lambda_low": e.lambda_low,
                        "lambda_high": e.lambda_high,
                        "mu_low": e.mu_low,
                        "mu_high": e.mu_high,
                    }
                )
                + "\n"
            )


def append_summary(path, **entry) -> None:
    """Append one JSON line; numpy scalars are converted."""
    clean = {k: (v.item() if isinstance(v, np.generic) else v) for k, v in entry.items()}
    with open(path, "a") as fh:
        fh.write(json.dumps(clean, sort_keys=True) + "\n")


def point_biaxiality(pf: PField, constants: MaterialConstants = DEFAULT_CONSTANTS) -> np.ndarray:
    """``1 - 6 tr(Q^3)^2 / tr(Q^2)^3`` at every node, vectorised.

    With eigenvalues ``d + s, d - s, -2d`` (``d = B/6C``) the traces are
    polynomials in ``s`` and ``d``.
    """
    d = constants.B / (6.0 * constants.C)
    s = pf.s
    tr2 = 2 * s**2 + 6 * d**2
    tr3 = (d + s) ** 3 + (d - s) ** 3 - 8 * d**3
    return 1.0 - 6.0 * tr3**2 / tr2**3


def write_vtk(pf: PField, path, constants: MaterialConstants = DEFAULT_CONSTANTS, title: str | None = None) -> None:
    """Legacy ASCII unstructured grid with scalars and the director field."""
    mesh = pf.mesh
    n, t = mesh.n_nodes, len(mesh.triangles)
    s = pf.s
    g = pf.gamma
    lines = [
        "# vtk DataFile Version 2.0",
        (title or f"ldgpoly field lambda_sq={pf.lambda_sq!r} provenance={pf.provenance}")[:255],
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist()]
    lines.append(f"CELLS {t} {4 * t}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {t}")
    lines += ["5"] * t
    lines.append(f"POINT_DATA {n}")
    scalars = {
        "p11": pf.p11,
        "p12": pf.p12,
        "s": s,
        "s2": s**2,
        "beta": point_biaxiality(pf, constants),
    }
    for name, arr in scalars.items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(v)) for v in arr]
    lines.append("VECTORS director double")
    lines += [f"{c!r} {sn!r} 0.0" for c, sn in zip(np.cos(g).tolist(), np.sin(g).tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk_counts(path) -> dict:
    """Structural check of a legacy VTK file: counts and index ranges."""
    text = Path(path).read_text().splitlines()
    if text[0] != "# vtk DataFile Version 2.0":
        raise ValueError("not a legacy VTK file")
    info = {}
    i = 0
    while i < len(text):
        parts = text[i].split()
        if parts and parts[0] == "POINTS":
            info["points"] = int(parts[1])
        elif parts and parts[0] == "CELLS":
            ncell = int(parts[1])
            idx = np.array([list(map(int, text[i + 1 + j].split()[1:])) for j in range(ncell)])
            info["cells"] = ncell
            info["max_index"] = int(idx.max())
            i += ncell
        elif parts and parts[0] == "SCALARS":
            info.setdefault("scalars", []).append(parts[1])
        elif parts and parts[0] == "VECTORS":
            info["vectors"] = parts[1]
        i += 1
    return info
