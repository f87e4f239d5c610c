"""CSV and key=value file formats.

Snapshot CSV::

    # t=<time>
    x,rho,u,w1,w2,b1,b2,theta
    ...one row per node...

Diagnostics CSV has header ``t,dt,mass,total_energy,entropy_prod,min_rho,min_theta,bflux``.
Floats are written with 17 significant digits, which round-trips exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .core import InitialData, Mesh, PhysParams, State, ValidationError
from .solver import DIAG_COLUMNS, RunRecord

SNAPSHOT_HEADER = ("x", "rho", "u", "w1", "w2", "b1", "b2", "theta")
RATE_HEADER = ("mu", "E", "E_rho", "E_u", "E_w", "E_b", "E_theta")
BL_HEADER = ("mu", "delta", "interior_sup", "global_sup", "mismatch")


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_rows(path, header, rows, comment=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        if comment:
            f.write(f"# {comment}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_snapshot(path, state: State, mesh: Mesh) -> Path:
    cols = np.vstack([mesh.x, state.rho, state.u, state.w, state.b, state.theta]).T
    return _write_rows(path, SNAPSHOT_HEADER, cols.tolist(), comment=f"t={fmt(state.t)}")


def read_snapshot(path) -> tuple[State, Mesh]:
    path = Path(path)
    t = None
    with open(path) as f:
        lines = f.read().splitlines()
    body = []
    for ln in lines:
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition("=")
            if key.strip() == "t":
                t = float(val)
        elif ln.strip():
            body.append(ln)
    if t is None:
        raise ValidationError(f"{path}: missing '# t=' line")
    if not body or tuple(body[0].split(",")) != SNAPSHOT_HEADER:
        raise ValidationError(f"{path}: bad snapshot header")
    data = np.array([[float(v) for v in ln.split(",")] for ln in body[1:]])
    mesh = Mesh(data.shape[0] - 1)
    if np.max(np.abs(data[:, 0] - mesh.x)) > 1e-12:
        raise ValidationError(f"{path}: nodes are not a uniform grid on [0, 1]")
    state = State(t=t, rho=data[:, 1], u=data[:, 2], w=data[:, 3:5].T, b=data[:, 5:7].T,
                  theta=data[:, 7])
    return state, mesh


def snapshot_initial_data(state: State) -> InitialData:
    return InitialData(rho0=state.rho, u0=state.u, w0=state.w, b0=state.b, theta0=state.theta,
                       t0=state.t)


def write_diagnostics(path, record: RunRecord) -> Path:
    rows = [[getattr(d, c) for c in DIAG_COLUMNS] for d in record.diag]
    return _write_rows(path, DIAG_COLUMNS, rows)


def read_csv_columns(path) -> dict[str, np.ndarray]:
    with open(path) as f:
        rows = [r for r in csv.reader(ln for ln in f if not ln.startswith("#"))]
    header, body = rows[0], rows[1:]
    arr = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(header))
    return {k: arr[:, i] for i, k in enumerate(header)}


def write_key_values(path, items) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for k, v in items:
            f.write(f"{k}={fmt(v)}\n")
    return path


def read_key_values(path) -> dict[str, str]:
    out = {}
    with open(path) as f:
        for ln in f:
            ln = ln.strip()
            if ln and not ln.startswith("#"):
                k, _, v = ln.partition("=")
                out[k.strip()] = v.strip()
    return out


def params_items(params: PhysParams):
    return [("lambda", params.lam), ("mu", params.mu), ("nu", params.nu),
            ("gamma", params.gamma), ("kappa1", params.kappa1), ("q", params.q)]


def write_record(directory, record: RunRecord, extra=()) -> list[str]:
    """Write snapshots, diagnostics and a summary manifest; return the relative file names."""
    directory = Path(directory)
    names = []
    for i, s in enumerate(record.snapshots):
        name = f"snapshots/snapshot_{i:05d}.csv"
        write_snapshot(directory / name, s, record.mesh)
        names.append(name)
    write_diagnostics(directory / "diagnostics.csv", record)
    names.append("diagnostics.csv")
    names.append("summary.txt")
    d0 = record.initial_diag
    rho_min = min(float(np.min(s.rho)) for s in record.snapshots)
    rho_max = max(float(np.max(s.rho)) for s in record.snapshots)
    th_min = min(float(np.min(s.theta)) for s in record.snapshots)
    th_max = max(float(np.max(s.theta)) for s in record.snapshots)
    items = [("n_cells", record.mesh.n_cells), *params_items(record.params),
             ("t_start", record.snapshots[0].t), ("t_end", record.final.t),
             ("steps", len(record.diag)),
             ("halvings", int(sum(d.halvings for d in record.diag))),
             ("mass_drift", (record.diag[-1].mass - d0.mass) / d0.mass if record.diag else 0.0),
             ("energy_residual", record.energy_residual() if record.diag else 0.0),
             ("min_entropy_prod", min((d.entropy_prod for d in record.diag), default=math.nan)),
             ("min_rho", rho_min), ("max_rho", rho_max),
             ("min_theta", th_min), ("max_theta", th_max),
             *extra,
             ("files", ",".join(names))]
    write_key_values(directory / "summary.txt", items)
    return names


def load_record(directory) -> RunRecord:
    """Reload snapshots and parameters written by :func:`write_record`."""
    directory = Path(directory)
    summary = read_key_values(directory / "summary.txt")
    params = PhysParams(lam=float(summary["lambda"]), mu=float(summary["mu"]),
                        nu=float(summary["nu"]), gamma=float(summary["gamma"]),
                        kappa1=float(summary["kappa1"]), q=float(summary["q"]))
    files = sorted((directory / "snapshots").glob("snapshot_*.csv"))
    if not files:
        raise ValidationError(f"{directory}: no snapshots")
    snaps = []
    mesh = None
    for p in files:
        s, m = read_snapshot(p)
        if mesh is not None and m != mesh:
            raise ValidationError(f"{p}: mesh differs from earlier snapshots")
        mesh = m
        snaps.append(s)
    return RunRecord(mesh=mesh, params=params, snapshots=snaps)


def write_rate_report(path, rate) -> Path:
    rows = []
    for mu, e in rate.pairs:
        pf = rate.per_field[mu]
        rows.append([mu, e, pf["rho"], pf["u"], pf["w"], pf["b"], pf["theta"]])
    for mu in rate.failed:
        rows.append([mu] + [math.nan] * 6)
    return _write_rows(path, RATE_HEADER, rows)


def write_bl_report(path, bl) -> Path:
    return _write_rows(path, BL_HEADER, [list(r) for r in bl.rows])
