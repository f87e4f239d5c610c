"""Flat ``key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment. Sections use dotted keys
(``solver.cfl``). Vectors and lists are comma separated. Unknown keys are
rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

from .experiments import DEFAULT_MUS
from .mms import CASES
from .presets import PRESETS


class ConfigError(ValueError):
    def __init__(self, message, *, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("not a boolean")


def _vec2(s):
    v = tuple(float(c) for c in s.split(","))
    if len(v) != 2:
        raise ValueError("expected two comma-separated numbers")
    return v


def _floats(s):
    return tuple(float(c) for c in s.split(",") if c.strip())


def _ints(s):
    return tuple(_int(c) for c in s.split(",") if c.strip())


def _str(s):
    return s


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# key: (parser, default, check, help)
KEYS: dict[str, tuple[Callable, Any, Optional[Callable], str]] = {
    "n_cells": (_int, 200, lambda v: v >= 2, "number of mesh cells on [0, 1]"),
    "lambda": (_float, 1.0, _pos, "longitudinal viscosity (> 0)"),
    "mu": (_float, 1e-3, _nonneg, "shear viscosity (>= 0; 0 selects the limit system)"),
    "nu": (_float, 0.5, _pos, "magnetic diffusivity (> 0)"),
    "gamma": (_float, 1.0, _pos, "gas constant in p = gamma*rho*theta (> 0)"),
    "kappa1": (_float, 1.0, _pos, "conductivity coefficient, kappa = kappa1*theta^q"),
    "q": (_float, 2.0, _pos, "conductivity exponent (> 0)"),
    "preset": (_str, "smooth-shear", lambda v: v in PRESETS, "initial data: " + ", ".join(PRESETS)),
    "initial.file": (_str, "", None, "snapshot CSV used when preset = snapshot"),
    "boundary.kind": (_str, "constant", lambda v: v in ("constant", "sinusoid"),
                      "wall data for w: constant or sinusoid"),
    "boundary.w_minus": (_vec2, None, None, "w at x=0 (constant part); default depends on preset"),
    "boundary.w_plus": (_vec2, None, None, "w at x=1 (constant part); default depends on preset"),
    "boundary.amp_minus": (_vec2, (0.0, 0.0), None, "sinusoid amplitude at x=0"),
    "boundary.amp_plus": (_vec2, (0.0, 0.0), None, "sinusoid amplitude at x=1"),
    "boundary.omega": (_float, 1.0, None, "sinusoid angular frequency"),
    "boundary.phase": (_float, 0.0, None, "sinusoid phase"),
    "solver.cfl": (_float, 0.4, lambda v: 0 < v <= 1, "Courant number in (0, 1]"),
    "solver.t_end": (_float, 1.0, _pos, "final time"),
    "solver.dt_max": (_float, math.inf, _pos, "time step cap"),
    "solver.snapshot_every": (_float, 0.1, _pos, "snapshot interval"),
    "solver.pos_floor": (_float, 1e-12, _nonneg, "positivity floor for rho and theta"),
    "solver.max_halvings": (_int, 20, _nonneg, "dt halvings allowed per step"),
    "solver.theta_picard_iters": (_int, 2, lambda v: v >= 1, "lagged-conductivity sweeps"),
    "sweep.mu_values": (_floats, DEFAULT_MUS,
                        lambda v: len(v) >= 3 and all(m > 0 for m in v) and len(set(v)) == len(v),
                        "at least 3 distinct positive shear viscosities"),
    "sweep.include_limit": (_bool, True, lambda v: v, "solve the mu = 0 baseline (required)"),
    "sweep.thickness_exponent": (_float, 0.4, lambda v: 0 < v < 0.5,
                                 "a in delta(mu) = mu^a, 0 < a < 1/2"),
    "sweep.check_refinement": (_bool, False, None, "also solve the baseline on a 2x mesh"),
    "mms.case": (_str, "coupled", lambda v: v in CASES, "one of " + ", ".join(CASES)),
    "mms.resolutions": (_ints, (100, 200, 400),
                        lambda v: len(v) >= 3 and all(b > a for a, b in zip(v, v[1:])) and v[0] >= 2,
                        "strictly increasing cell counts, at least 3"),
    "bl.record_mu": (_str, "", None, "directory written by `solve` with mu > 0"),
    "bl.record_0": (_str, "", None, "directory written by `solve` with mu = 0"),
    "out": (_str, "out", None, "output directory"),
    "jobs": (_int, 0, _nonneg, "worker processes (0 = number of processors)"),
}


def describe_keys() -> str:
    lines = []
    for k, (_, default, _, doc) in KEYS.items():
        if isinstance(default, tuple):
            default = ",".join(f"{v:g}" if isinstance(v, float) else str(v) for v in default)
        lines.append(f"  {k:<26} {doc} [default: {default}]")
    return "\n".join(lines)


@dataclass
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config(text: str, *, base_dir: Optional[Path] = None) -> RunConfig:
    values = {k: entry[1] for k, entry in KEYS.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key=key, line=lineno)
        seen.add(key)
        parser = KEYS[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}", key=key,
                              line=lineno) from None
    return validate(RunConfig(values), base_dir=base_dir)


def validate(cfg: RunConfig, *, base_dir: Optional[Path] = None) -> RunConfig:
    for key, (_, _, check, doc) in KEYS.items():
        v = cfg.values[key]
        if check is not None and v is not None and not check(v):
            raise ConfigError(f"invalid value for {key!r}: {v!r} ({doc})", key=key)
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    for key in ("initial.file", "bl.record_mu", "bl.record_0"):
        v = cfg.values[key]
        if v:
            p = Path(v)
            if not p.is_absolute():
                p = base / p
            if not p.exists():
                raise ConfigError(f"{key!r}: {v} does not exist", key=key)
            cfg.values[key] = str(p)
    if cfg["preset"] == "snapshot" and not cfg["initial.file"]:
        raise ConfigError("preset = snapshot needs 'initial.file'", key="initial.file")
    return cfg
