"""Matplotlib figures: director fields on an ``s^2`` background and branch diagrams.

The Agg backend is selected before pyplot is imported so the module works
headless.  SVG or PNG output is chosen from the file suffix.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.tri import Triangulation  # noqa: E402

from .fem import PField  # noqa: E402

FIELD_CMAP = "viridis"
# fixed so that repeated runs give identical files
_SVG_META = {"Date": None}


def _save(fig, path):
    path = str(path)
    kw = {"metadata": _SVG_META} if path.endswith(".svg") else {"dpi": 120}
    if path.endswith(".svg"):
        matplotlib.rcParams["svg.hashsalt"] = "ldgpoly"
    fig.savefig(path, bbox_inches="tight", **kw)
    plt.close(fig)


def director_samples(pf: PField, n_target: int = 600) -> np.ndarray:
    """Roughly uniform subset of node indices for drawing director segments."""
    pts = pf.mesh.nodes
    span = np.ptp(pts, axis=0).max()
    cell = span / np.sqrt(n_target)
    keys = np.floor(pts / cell).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return np.sort(first)


def plot_field(pf: PField, path, title: str | None = None, n_directors: int = 600):
    """``s^2`` colour map with headless white director segments."""
    m = pf.mesh
    tri = Triangulation(m.nodes[:, 0], m.nodes[:, 1], m.triangles)
    fig, ax = plt.subplots(figsize=(5.0, 4.4))
    tc = ax.tripcolor(tri, pf.s**2, shading="gouraud", cmap=FIELD_CMAP)
    fig.colorbar(tc, ax=ax, label=r"$s^2$")
    sel = director_samples(pf, n_directors)
    g = pf.gamma[sel]
    span = np.ptp(m.nodes, axis=0).max()
    ax.quiver(
        m.nodes[sel, 0],
        m.nodes[sel, 1],
        np.cos(g),
        np.sin(g),
        color="white",
        pivot="mid",
        headwidth=0,
        headlength=0,
        headaxislength=0,
        scale=1.6 * np.sqrt(n_directors) / span,
        scale_units="xy",
        width=0.004,
    )
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])
    ax.set_title(title or f"{pf.provenance}, $\\lambda^2$ = {pf.lambda_sq:g}")
    _save(fig, path)


def _styled_segments(ax, x, y, stable, color, label):
    """Solid where stable, dashed where unstable."""
    first = True
    start = 0
    for i in range(1, len(x) + 1):
        if i == len(x) or stable[i] != stable[start]:
            sl = slice(start, min(i + 1, len(x)))
            ax.plot(x[sl], y[sl], "-" if stable[start] else "--", color=color, label=label if first else None)
            first = False
            start = i
    return ax


def plot_branches(branches, path, measure: str = "energy"):
    """Energy (or ``m11``/``m12``) against ``lambda^2`` for a set of branches."""
    if measure not in ("energy", "m11", "m12", "mu_min"):
        raise ValueError(f"cannot plot measure {measure!r}")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    colors = {"Ring": "k", "Para": "tab:blue", "Meta": "tab:green", "Ortho": "tab:red", "BD": "tab:purple"}
    seen = set()
    for b in branches:
        if not b.records:
            continue
        recs = sorted(b.records, key=lambda r: r.lambda_sq)
        x = np.array([r.lambda_sq for r in recs])
        y = np.array([getattr(r, measure) for r in recs])
        st = np.array([r.stable for r in recs])
        base = b.label.split()[0] if b.label else "other"
        c = colors.get(base, "tab:gray")
        _styled_segments(ax, x, y, st, c, None if base in seen else base)
        seen.add(base)
    ax.set_xlabel(r"$\lambda^2$")
    ax.set_ylabel({"energy": "energy", "m11": r"$\int P_{11}(1+x+y)$", "m12": r"$\int P_{12}(1+x+y)$"}[measure])
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
