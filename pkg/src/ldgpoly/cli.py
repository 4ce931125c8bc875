"""Command-line driver.

Exit status: 0 on success (including a truncated sweep), 1 on numerical
failure, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .continuation import StepPolicy, classify_branch, detect_transitions, sweep
from .export import append_summary, write_branch_csv, write_events, write_vtk
from .fem import PField, branch_measures, energy, newton_solve, read_snapshot, write_snapshot
from .geometry import make_domain, triangulate
from .limits import p_infinity
from .plotting import plot_branches, plot_field
from .recipes import RECIPES, run_recipe
from .seeds import conformal_map, make_seed, ring_interpolant
from .boundary import gamma_dirichlet
from .stability import classify_stability, field_eigen

log = logging.getLogger("ldgpoly")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parse_pair(text):
    try:
        a, b = (int(t) for t in text.replace("-", ",").split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"pair must look like 1,4 (got {text!r})") from exc
    return [a, b]


def _parse_range(text):
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError("range must be start:stop or start:stop:step")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--domain", choices=["regular", "isosceles", "disc"])
    common.add_argument("--K", type=int, help="number of polygon edges")
    common.add_argument("--apex", type=float, help="apex angle in degrees (isosceles)")
    common.add_argument("--h", type=float, help="target mesh size")
    common.add_argument("--lambda2", type=float, help="lambda^2")
    common.add_argument("--range", type=_parse_range, help="sweep range start:stop[:step]")
    common.add_argument("--seed-kind", choices=["ring", "zero", "pinfty", "bd", "file"])
    common.add_argument("--pair", type=_parse_pair, help="splay corner pair, e.g. 1,4")
    common.add_argument("--out", help="output directory")
    common.add_argument("--no-vtk", action="store_true")
    common.add_argument("--no-svg", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ldgpoly", description="Reduced Landau-de Gennes states on polygons")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Newton solve at one lambda^2")
    sub.add_parser("sweep", parents=[common], help="continuation in lambda^2")
    sub.add_parser("ring", parents=[common], help="sample the closed-form lambda = 0 state")
    sub.add_parser("limit", parents=[common], help="sample the limiting state for a splay pair")
    e = sub.add_parser("eig", parents=[common], help="smallest Hessian eigenvalue of a snapshot")
    e.add_argument("snapshot")
    x = sub.add_parser("export", parents=[common], help="convert a snapshot to VTK/SVG")
    x.add_argument("snapshot")
    r = sub.add_parser("recipe", parents=[common], help="run a named figure preset")
    r.add_argument("name", choices=RECIPES)
    return p


def config_from_args(args):
    over: dict = {}

    def put(section, key, value):
        if value is not None:
            over.setdefault(section, {})[key] = value

    put("domain", "kind", args.domain)
    put("domain", "K", args.K)
    put("domain", "apex_angle", args.apex)
    put("domain", "h", args.h)
    put("solve", "lambda_sq", args.lambda2)
    if args.range is not None:
        put("sweep", "start", args.range[0])
        put("sweep", "stop", args.range[1])
        if len(args.range) == 3:
            put("sweep", "step", args.range[2])
    put("seed", "kind", args.seed_kind)
    put("seed", "pair", args.pair)
    if args.out is not None:
        over["out"] = args.out
    if args.no_vtk:
        put("export", "vtk", False)
    if args.no_svg:
        put("export", "svg", False)
    if args.domain == "isosceles" and args.K is None:
        put("domain", "K", 3)
    return load_config(args.config, over)


def _mesh(cfg):
    d = cfg["domain"]
    if d["kind"] == "regular":
        dom = make_domain("regular", K=d["K"])
    elif d["kind"] == "isosceles":
        dom = make_domain("isosceles", apex_angle=float(d["apex_angle"]))
    else:
        dom = make_domain("disc")
    return triangulate(dom, float(d["h"]))


def _seed(cfg, mesh):
    s = cfg["seed"]
    return make_seed(
        mesh, s["kind"], cfg.pair, cfg.constants, float(cfg["boundary"]["epsilon"]), s["file"],
        bd_index=int(s["bd_axis"]),
    )


def _outputs(cfg, pf, stem, title=None):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if cfg["export"]["snapshot"]:
        files.append(out / f"{stem}.field")
        write_snapshot(pf, files[-1])
    if cfg["export"]["vtk"]:
        files.append(out / f"{stem}.vtk")
        write_vtk(pf, files[-1], cfg.constants)
    if cfg["export"]["svg"]:
        files.append(out / f"{stem}.svg")
        plot_field(pf, files[-1], title)
    return files


def cmd_solve(cfg) -> int:
    mesh = _mesh(cfg)
    lam = float(cfg["solve"]["lambda_sq"])
    seed = _seed(cfg, mesh)
    pf, rep = newton_solve(
        seed, lam, tol=float(cfg["solve"]["tol"]), max_iter=int(cfg["solve"]["max_iter"]),
        constants=cfg.constants, max_halvings=int(cfg["solve"]["max_halvings"]),
    )
    entry = {
        "command": "solve",
        "domain": mesh.domain.label(),
        "h": mesh.h,
        "lambda_sq": lam,
        "seed": seed.provenance,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "residual": rep.residual,
    }
    stem = f"solve_{seed.provenance}_{lam:g}"
    if rep.converged:
        m11, m12 = branch_measures(pf)
        entry.update(energy=energy(pf, lam, cfg.constants), m11=m11, m12=m12)
        st = classify_stability(pf, lam, constants=cfg.constants)
        entry.update(mu_min=st.eigen.mu_min, stable=st.stable, index=st.index)
        if mesh.domain.kind == "regular":
            lab = classify_branch(pf, cfg.constants)
            entry.update(label=lab.label, pair_id=lab.pair_id)
        _outputs(cfg, pf, stem)
    else:
        entry["message"] = rep.message
        _outputs(cfg, pf, stem + "_failed")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    append_summary(out / "summary.jsonl", **entry)
    print(" ".join(f"{k}={v}" for k, v in entry.items()))
    return EXIT_OK if rep.converged else EXIT_NUMERIC


def cmd_sweep(cfg) -> int:
    mesh = _mesh(cfg)
    w = cfg["sweep"]
    seed = _seed(cfg, mesh)
    policy = StepPolicy(step=float(w["step"]), min_step=float(w["min_step"]), max_step=float(w["max_step"]))
    every = float(w["record_every"]) or None
    label = seed.provenance
    br = sweep(seed, float(w["start"]), float(w["stop"]), policy, label=label,
               pair_id="" if cfg.pair is None else f"{cfg.pair[0]}-{cfg.pair[1]}",
               constants=cfg.constants, record_every=every)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if not br.records:
        print(f"sweep failed: {br.truncated}", file=sys.stderr)
        return EXIT_NUMERIC
    events = detect_transitions(br, constants=cfg.constants)
    write_branch_csv(br, out / "branch.csv")
    write_events(events, out / "events.jsonl")
    if cfg["export"]["svg"]:
        plot_branches([br], out / "branch_energy.svg", "energy")
    if cfg["export"]["snapshot"]:
        write_snapshot(br.records[-1].field, out / "branch_last.field")
    print(f"records={len(br.records)} events={len(events)} truncated={br.truncated or 'no'}")
    for e in events:
        print(f"{e.direction} of stability in [{e.lambda_low:.6g}, {e.lambda_high:.6g}]")
    return EXIT_OK


def cmd_ring(cfg) -> int:
    mesh = _mesh(cfg)
    pf = ring_interpolant(mesh, cfg.constants, float(cfg["boundary"]["epsilon"]))
    _outputs(cfg, pf, "ring", f"ring, {mesh.domain.label()}")
    print(f"nodes={mesh.n_nodes} energy={energy(pf, 0.0, cfg.constants)!r}")
    return EXIT_OK


def cmd_limit(cfg) -> int:
    mesh = _mesh(cfg)
    if mesh.domain.kind != "regular":
        raise UsageError("limit needs a regular polygon")
    if cfg.pair is None:
        raise UsageError("limit needs --pair")
    K = mesh.domain.K
    fn = p_infinity(K, gamma_dirichlet(K, cfg.pair), cfg.constants, conformal_map(K))
    pf = PField.from_function(mesh, fn, 0.0, "custom")
    _outputs(cfg, pf, f"limit_{cfg.pair[0]}{cfg.pair[1]}", f"limit, pair {cfg.pair}")
    return EXIT_OK


def cmd_eig(cfg, path) -> int:
    pf = read_snapshot(path)
    lam = pf.lambda_sq
    eig = field_eigen(pf, lam, cfg.constants)
    idx = int(np.sum(eig.eigenvalues < 0))
    print(f"lambda_sq={lam!r} mu_min={eig.mu_min!r} residual={eig.residual:.3e} "
          f"stable={eig.mu_min > 0} index={idx} eigenvalues={list(map(float, eig.eigenvalues))}")
    return EXIT_OK


def cmd_export(cfg, path) -> int:
    pf = read_snapshot(path)
    stem = Path(path).stem
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["export"]["vtk"]:
        write_vtk(pf, out / f"{stem}.vtk", cfg.constants)
    if cfg["export"]["svg"]:
        plot_field(pf, out / f"{stem}.svg")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "ring":
            return cmd_ring(cfg)
        if args.command == "limit":
            return cmd_limit(cfg)
        if args.command == "eig":
            return cmd_eig(cfg, args.snapshot)
        if args.command == "export":
            return cmd_export(cfg, args.snapshot)
        if args.command == "recipe":
            files = run_recipe(args.name, cfg["out"], args.h, cfg.constants)
            for f in files:
                print(f)
            return EXIT_OK
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # anything else is a failure of the computation
        log.debug("unhandled", exc_info=True)
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
