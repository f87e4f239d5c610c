"""Command line entry point: ``planar-mhd {solve,sweep,bl,mms}``.

Exit status: 0 success, 2 invalid configuration or inputs, 3 solver failure.
Failures also print one ``error: kind=... key=... message=...`` line to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io, presets
from .config import ConfigError, RunConfig, describe_keys, parse_config
from .core import BoundaryData, InitialData, Mesh, PhysParams, ValidationError
from .diagnostics import AlignmentError
from .experiments import (BLReport, SweepPlan, baseline_refinement_error, bl_profile, run_sweep)
from .mms import mms_verify
from .solver import SolverControls, SolverFailure, solve

logger = logging.getLogger("planar_mhd")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


def params_from(cfg: RunConfig, mu=None) -> PhysParams:
    return PhysParams(lam=cfg["lambda"], mu=cfg["mu"] if mu is None else mu, nu=cfg["nu"],
                      gamma=cfg["gamma"], kappa1=cfg["kappa1"], q=cfg["q"])


def controls_from(cfg: RunConfig) -> SolverControls:
    return SolverControls(cfl=cfg["solver.cfl"], t_end=cfg["solver.t_end"],
                          dt_max=cfg["solver.dt_max"], snapshot_every=cfg["solver.snapshot_every"],
                          pos_floor=cfg["solver.pos_floor"], max_halvings=cfg["solver.max_halvings"],
                          theta_picard_iters=cfg["solver.theta_picard_iters"])


def boundary_from(cfg: RunConfig, default: BoundaryData) -> BoundaryData:
    wm = cfg["boundary.w_minus"] or default.c_minus
    wp = cfg["boundary.w_plus"] or default.c_plus
    if cfg["boundary.kind"] == "constant":
        return BoundaryData.constant(wm, wp)
    return BoundaryData("sinusoid", c_minus=wm, c_plus=wp, a_minus=cfg["boundary.amp_minus"],
                        a_plus=cfg["boundary.amp_plus"], omega=cfg["boundary.omega"],
                        phase=cfg["boundary.phase"])


@dataclass(frozen=True)
class InitialFactory:
    """Picklable ``mesh -> InitialData`` for a preset or a loaded snapshot."""

    preset: str
    bdry: BoundaryData
    snapshot: object = None

    def __call__(self, mesh: Mesh) -> InitialData:
        if self.snapshot is not None:
            state, smesh = self.snapshot
            if smesh != mesh:
                raise ValidationError(f"snapshot mesh has {smesh.n_cells} cells, requested {mesh.n_cells}")
            return io.snapshot_initial_data(state)
        return presets.build(self.preset, mesh, self.bdry)


def setup(cfg: RunConfig):
    """Return (mesh, bdry, initial factory) for the configured preset."""
    if cfg["preset"] == "snapshot":
        state, mesh = io.read_snapshot(cfg["initial.file"])
        default = BoundaryData.constant(state.w[:, 0], state.w[:, -1])
        bdry = boundary_from(cfg, default)
        return mesh, bdry, InitialFactory("snapshot", bdry, (state, mesh))
    mesh = Mesh(cfg["n_cells"])
    bdry = boundary_from(cfg, presets.default_boundary(cfg["preset"]))
    return mesh, bdry, InitialFactory(cfg["preset"], bdry)


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    mesh, bdry, factory = setup(cfg)
    rec = solve(factory(mesh), params_from(cfg), bdry, None, controls_from(cfg), mesh)
    names = io.write_record(out, rec)
    logger.info("solve: %d steps to t=%g, %d files in %s", len(rec.diag), rec.final.t, len(names), out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, jobs: int) -> int:
    mesh, bdry, factory = setup(cfg)
    plan = SweepPlan(initial=factory, bdry=bdry, params=params_from(cfg, mu=0.0),
                     n_cells=mesh.n_cells, mu_values=cfg["sweep.mu_values"],
                     include_limit=cfg["sweep.include_limit"],
                     thickness_exponent=cfg["sweep.thickness_exponent"],
                     check_refinement=cfg["sweep.check_refinement"])
    controls = controls_from(cfg)
    rate, bl, records = run_sweep(plan, controls, jobs=jobs)
    io.write_rate_report(out / "rate.csv", rate)
    io.write_bl_report(out / "bl.csv", bl)
    items = [("n_cells", mesh.n_cells), ("t_end", controls.t_end),
             ("thickness_exponent", plan.thickness_exponent),
             ("n_cases", len(rate.pairs)), ("failed", ",".join(io.fmt(m) for m in rate.failed))]
    if rate.fit is not None:
        items += [("slope", rate.fit.slope), ("intercept", rate.fit.intercept),
                  ("residual", rate.fit.residual)]
        items += [(f"slope_{k}", v) for k, v in rate.field_slopes.items()]
    items += [("notice", rate.notice), ("rate_pass", rate.passed),
              ("bl_interior_decreasing", bl.interior_decreasing()),
              ("bl_global_bounded", bl.global_bounded_below()),
              ("bl_floor_ratio", bl.floor_ratio()), ("bl_pass", bl.passed)]
    if plan.check_refinement:
        err = baseline_refinement_error(plan, controls, records[0.0])
        smallest = min((e for _, e in rate.pairs), default=np.nan)
        items += [("baseline_refinement_error", err),
                  ("baseline_refinement_ok", bool(err < 0.1 * smallest))]
    items.append(("files", "rate.csv,bl.csv,summary.txt"))
    io.write_key_values(out / "summary.txt", items)
    logger.info("sweep: slope=%s rate_pass=%s bl_pass=%s",
                io.fmt(rate.fit.slope) if rate.fit else "n/a", rate.passed, bl.passed)
    if rate.fit is None and len(rate.pairs) < 3:
        raise SolverFailure(f"only {len(rate.pairs)} cases survived; rate fit needs 3")
    return EXIT_OK


def cmd_bl(cfg: RunConfig, out: Path) -> int:
    if not cfg["bl.record_mu"] or not cfg["bl.record_0"]:
        raise ConfigError("bl needs 'bl.record_mu' and 'bl.record_0'", key="bl.record_mu")
    rec_mu = io.load_record(cfg["bl.record_mu"])
    rec_0 = io.load_record(cfg["bl.record_0"])
    if rec_0.params.mu != 0.0:
        raise ConfigError("bl.record_0 must be a mu = 0 run", key="bl.record_0")
    row = bl_profile(rec_mu, rec_0, cfg["sweep.thickness_exponent"])
    io.write_bl_report(out / "bl.csv", BLReport([row]))
    io.write_key_values(out / "summary.txt", [
        *zip(io.BL_HEADER, row),
        ("interior_le_global", row.interior_sup <= row.global_sup),
        ("files", "bl.csv,summary.txt")])
    logger.info("bl: mu=%g interior_sup=%g global_sup=%g", row.mu, row.interior_sup, row.global_sup)
    return EXIT_OK


def cmd_mms(cfg: RunConfig, out: Path, jobs: int) -> int:
    rep = mms_verify(cfg["mms.case"], cfg["mms.resolutions"], jobs=jobs)
    rows = []
    for k, errs in rep.errors.items():
        for n, e in zip(rep.resolutions, errs):
            rows.append([n, 1.0 / n, k, e])
    io._write_rows(out / "mms.csv", ("n_cells", "h", "field", "error"), rows)
    items = [tuple(ln.split("=", 1)) for ln in rep.lines()]
    items.append(("files", "mms.csv,summary.txt"))
    io.write_key_values(out / "summary.txt", items)
    logger.info("mms %s: status=%s order=%s", rep.case, rep.status, io.fmt(rep.order))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planar-mhd",
        description="Planar MHD solver with vanishing shear viscosity experiments.",
        epilog="configuration keys (key = value, one per line):\n" + describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"solve": "integrate one run; write snapshots, diagnostics and summary",
             "sweep": "mu sweep against the mu = 0 limit; write rate/boundary-layer reports",
             "bl": "boundary-layer profile of two existing solve output directories",
             "mms": "manufactured-solution order of accuracy study"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text, epilog=parser.epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, help="output directory (overrides 'out')")
        p.add_argument("--jobs", type=int, help="worker processes (overrides 'jobs')")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def _fail(kind, message, key=None) -> None:
    msg = " ".join(str(message).split())
    extra = f" key={key}" if key else ""
    print(f"error: kind={kind}{extra} message={msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, base_dir=args.config.parent if args.config else None)
        out = args.out or Path(cfg["out"])
        jobs = args.jobs if args.jobs is not None else cfg["jobs"]
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, jobs)
        if args.command == "bl":
            return cmd_bl(cfg, out)
        return cmd_mms(cfg, out, jobs)
    except ConfigError as exc:
        _fail("validation", exc, exc.key)
        return EXIT_INVALID
    except (ValidationError, AlignmentError, OSError, ValueError) as exc:
        _fail("validation", exc)
        return EXIT_INVALID
    except SolverFailure as exc:
        _fail("solver", f"{exc} (t={exc.time}, field={exc.field})")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
