"""Run configuration: a versioned TOML file plus command-line overrides.

Example::

    version = 1
    out = "runs/hexagon"

    [domain]
    kind = "regular"      # regular | isosceles | disc
    K = 6
    h = 0.015625

    [solve]
    lambda_sq = 2250.0
    tol = 1e-13

    [seed]
    kind = "pinfty"       # ring | zero | pinfty | bd | file
    pair = [1, 4]

Unknown sections or keys are rejected.  Every default is listed in
:data:`DEFAULTS`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from .tensor import MaterialConstants

SCHEMA_VERSION = 1

DEFAULTS: dict = {
    "version": SCHEMA_VERSION,
    "out": "ldgpoly-out",
    "rng_seed": 0,
    "domain": {"kind": "regular", "K": 6, "apex_angle": None, "h": 1.0 / 64},
    "constants": {"B": 0.64e4, "C": 0.35e4},
    "boundary": {"epsilon": 0.0},
    "solve": {"lambda_sq": 1.0, "tol": 1e-13, "max_iter": 50, "max_halvings": 10},
    "sweep": {"start": 0.1, "stop": 600.0, "step": 10.0, "min_step": 1e-3, "max_step": 40.0, "record_every": 0.0},
    "seed": {"kind": "ring", "pair": None, "file": None, "bd_axis": 0, "bd_sign": -1},
    "eig": {"tol": 1e-8, "block": 4},
    "export": {"vtk": True, "svg": True, "snapshot": True},
}

_KINDS = {"regular", "isosceles", "disc"}
_SEEDS = {"ring", "zero", "pinfty", "bd", "file"}


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit status 2."""


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown key {where}{k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k} must be a table")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def constants(self) -> MaterialConstants:
        c = self.data["constants"]
        return MaterialConstants(float(c["B"]), float(c["C"]))

    @property
    def pair(self) -> tuple[int, int] | None:
        p = self.data["seed"]["pair"]
        return None if p is None else (int(p[0]), int(p[1]))


def validate(data: dict) -> RunConfig:
    if data.get("version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {data.get('version')!r} (expected {SCHEMA_VERSION})")
    d = data["domain"]
    if d["kind"] not in _KINDS:
        raise ConfigError(f"domain.kind must be one of {sorted(_KINDS)}")
    if d["kind"] == "regular" and (not isinstance(d["K"], int) or d["K"] < 3):
        raise ConfigError(f"domain.K must be an integer >= 3, got {d['K']!r}")
    if d["kind"] == "isosceles":
        a = d["apex_angle"]
        if a is None or not (0 < float(a) < 180):
            raise ConfigError("domain.apex_angle (degrees) must lie in (0, 180)")
    if not (0 < float(d["h"]) <= 1.0):
        raise ConfigError("domain.h must lie in (0, 1]")
    c = data["constants"]
    if not (float(c["B"]) > 0 and float(c["C"]) > 0):
        raise ConfigError("constants B and C must be positive")
    s = data["solve"]
    if float(s["lambda_sq"]) < 0:
        raise ConfigError("solve.lambda_sq must be non-negative")
    if float(s["tol"]) <= 0 or int(s["max_iter"]) < 1:
        raise ConfigError("solve.tol must be positive and solve.max_iter at least 1")
    w = data["sweep"]
    if float(w["start"]) == float(w["stop"]):
        raise ConfigError("sweep range is empty")
    if float(w["start"]) < 0 or float(w["stop"]) < 0:
        raise ConfigError("sweep bounds must be non-negative")
    if float(w["step"]) <= 0 or float(w["min_step"]) <= 0:
        raise ConfigError("sweep.step and sweep.min_step must be positive")
    sd = data["seed"]
    if sd["kind"] not in _SEEDS:
        raise ConfigError(f"seed.kind must be one of {sorted(_SEEDS)}")
    if sd["kind"] == "pinfty":
        p = sd["pair"]
        if p is None or len(p) != 2:
            raise ConfigError("seed.pair must name two corners for pinfty seeds")
    if sd["kind"] == "file" and not sd["file"]:
        raise ConfigError("seed.file is required for file seeds")
    if float(data["boundary"]["epsilon"]) < 0:
        raise ConfigError("boundary.epsilon must be non-negative")
    return RunConfig(data)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the TOML file, then ``overrides`` (same nesting)."""
    data = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        data = _merge(data, raw)
    if overrides:
        data = _merge(data, overrides)
    return validate(data)
