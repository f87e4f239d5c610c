"""Shear-viscosity sweeps: convergence-rate fits and boundary-layer profiles.

Every viscous run is compared against the ``mu = 0`` run on the same mesh at
shared snapshot times. The composite difference norm is

    E(mu) = max_t ||(rho, u, w, b, theta) - limit||_L2
            + ||(u_x, b_x, theta_x) - limit||_L2(space-time)

and its decay is fitted as a power of ``mu``.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import diagnostics as dg
from .constitutive import ConductivityLaw
from .core import BoundaryData, InitialData, Mesh, PhysParams, State
from .solver import RunRecord, SolverControls, SolverFailure, solve

logger = logging.getLogger(__name__)

DEFAULT_MUS = tuple(10.0 ** e for e in (-2.0, -2.5, -3.0, -3.5, -4.0))

RATE_SLOPE_RANGE = (0.2, 1.2)
RATE_MAX_RESIDUAL = 0.15
BL_DECAY_FACTOR = 0.9
BL_GLOBAL_FRACTION = 0.5
BL_FLOOR_RATIO = 0.5


class FitError(ValueError):
    pass


class RateFit(NamedTuple):
    slope: float
    intercept: float
    residual: float


def rate_fit(pairs) -> RateFit:
    """Least-squares line through ``(ln mu, ln E)``; residual is the RMS deviation."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise FitError(f"rate fit needs at least 3 cases, got {len(pairs)}")
    mu = np.array([p[0] for p in pairs], dtype=float)
    err = np.array([p[1] for p in pairs], dtype=float)
    if np.any(~(err > 0)) or np.any(~np.isfinite(err)):
        raise FitError("all E values must be positive and finite (degenerate data)")
    if np.any(~(mu > 0)) or len(set(mu.tolist())) != mu.size:
        raise FitError("mu values must be positive and distinct")
    lx, ly = np.log(mu), np.log(err)
    A = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, intercept]) - ly) ** 2)))
    return RateFit(float(slope), float(intercept), resid)


@dataclass(frozen=True)
class SweepPlan:
    """Shared setup for one vanishing-viscosity sweep.

    ``initial`` builds the initial data for a given mesh so the limit run can
    be repeated on a refined mesh when ``check_refinement`` is set.
    """

    initial: Callable[[Mesh], InitialData]
    bdry: BoundaryData
    params: PhysParams
    n_cells: int = 800
    mu_values: tuple = DEFAULT_MUS
    include_limit: bool = True
    thickness_exponent: float = 0.4
    law: Optional[ConductivityLaw] = None
    check_refinement: bool = False

    def __post_init__(self):
        mus = tuple(float(m) for m in self.mu_values)
        if any(not (m > 0 and math.isfinite(m)) for m in mus):
            raise ValueError("mu values must be positive")
        if len(set(mus)) != len(mus):
            raise ValueError("mu values must be distinct")
        object.__setattr__(self, "mu_values", tuple(sorted(mus, reverse=True)))
        if not 0.0 < self.thickness_exponent < 0.5:
            raise ValueError("thickness exponent must lie in (0, 1/2)")
        if not self.include_limit:
            raise ValueError("a sweep needs the mu = 0 baseline")

    @property
    def mesh(self) -> Mesh:
        return Mesh(self.n_cells)


@dataclass
class RateReport:
    pairs: list = field(default_factory=list)
    per_field: dict = field(default_factory=dict)
    fit: Optional[RateFit] = None
    field_slopes: dict = field(default_factory=dict)
    failed: list = field(default_factory=list)
    notice: str = ""

    @property
    def passed(self) -> bool:
        if self.fit is None:
            return False
        lo, hi = RATE_SLOPE_RANGE
        return lo <= self.fit.slope <= hi and self.fit.residual <= RATE_MAX_RESIDUAL


class BLRow(NamedTuple):
    mu: float
    delta: float
    interior_sup: float
    global_sup: float
    mismatch: float


@dataclass
class BLReport:
    rows: list = field(default_factory=list)

    def interior_decreasing(self) -> bool:
        rows = sorted(self.rows, key=lambda r: -r.mu)
        return all(b.interior_sup <= BL_DECAY_FACTOR * a.interior_sup for a, b in zip(rows, rows[1:]))

    def global_bounded_below(self) -> bool:
        return all(r.global_sup >= BL_GLOBAL_FRACTION * r.mismatch for r in self.rows)

    def floor_ratio(self) -> float:
        g = [r.global_sup for r in self.rows]
        return min(g) / max(g) if g and max(g) > 0 else math.nan

    @property
    def passed(self) -> bool:
        return bool(self.rows) and self.interior_decreasing() and self.global_bounded_below()


def _check_aligned(a: RunRecord, b: RunRecord):
    if a.mesh != b.mesh:
        raise dg.AlignmentError("records are on different meshes")
    ta, tb = a.times, b.times
    if ta.shape != tb.shape or np.any(np.abs(ta - tb) > 1e-12 * np.maximum(1.0, np.abs(ta))):
        raise dg.AlignmentError("records have different snapshot times")


def difference_norms(record_mu: RunRecord, record_0: RunRecord) -> dg.DiffNorms:
    _check_aligned(record_mu, record_0)
    acc = dg.DiffNorms()
    prev = record_mu.snapshots[0].t
    for s, s_bar in zip(record_mu.snapshots, record_0.snapshots):
        acc = dg.diff_norms_update(acc, s, s_bar, record_mu.mesh, s.t - prev)
        prev = s.t
    return acc


def bl_profile(record_mu: RunRecord, record_0: RunRecord, a: float = 0.4,
               mu: Optional[float] = None) -> BLRow:
    """Interior and whole-domain sup of ``|w - w_bar|`` with margin ``delta = mu**a``.

    The mismatch is the largest distance between the imposed wall values
    (read off the viscous run) and the limit run's wall values.
    """
    _check_aligned(record_mu, record_0)
    mu = record_mu.params.mu if mu is None else mu
    delta = mu**a
    mesh = record_mu.mesh
    isup = gsup = mism = 0.0
    for s, s_bar in zip(record_mu.snapshots, record_0.snapshots):
        d = s.w - s_bar.w
        isup = max(isup, dg.interior_sup(d, mesh, delta))
        gsup = max(gsup, dg.interior_sup(d, mesh, 0.0))
        mism = max(mism, float(np.linalg.norm(d[:, 0])), float(np.linalg.norm(d[:, -1])))
    return BLRow(mu, delta, isup, gsup, mism)


def assemble_reports(baseline: RunRecord, records: dict, thickness_exponent: float = 0.4,
                     failed: Optional[list] = None) -> tuple[RateReport, BLReport]:
    """Build the rate and boundary-layer reports from solved records keyed by mu."""
    rate = RateReport(failed=list(failed or []))
    bl = BLReport()
    for mu in sorted(records, reverse=True):
        rec = records[mu]
        acc = difference_norms(rec, baseline)
        rate.pairs.append((mu, acc.composite))
        rate.per_field[mu] = acc.per_field()
        bl.rows.append(bl_profile(rec, baseline, thickness_exponent, mu=mu))
    rate.pairs.sort()
    try:
        rate.fit = rate_fit(rate.pairs)
    except FitError as exc:
        rate.notice = str(exc)
        return rate, bl
    for k in dg.FIELDS:
        vals = [(mu, rate.per_field[mu][k]) for mu, _ in rate.pairs]
        try:
            rate.field_slopes[k] = rate_fit(vals).slope
        except FitError:
            rate.field_slopes[k] = math.nan
    return rate, bl


def _solve_one(args):
    initial, params, bdry, law, controls, mesh = args
    try:
        return solve(initial, params, bdry, law, controls, mesh)
    except SolverFailure as exc:
        return exc


def _map(fn, items, jobs):
    if jobs is None or jobs <= 0:
        jobs = os.cpu_count() or 1
    if jobs == 1 or len(items) == 1:
        return [fn(it) for it in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def run_sweep(plan: SweepPlan, controls: SolverControls, *, jobs: int = 1):
    """Solve the limit run and every viscous case; return (RateReport, BLReport, records).

    ``records`` maps each mu (and 0.0 for the limit run) to its RunRecord.
    Failed viscous cases are listed in ``RateReport.failed``; a failed limit
    run is fatal.
    """
    mesh = plan.mesh
    init = plan.initial(mesh)
    mus = [0.0] + list(plan.mu_values)
    jobs_args = [(init, plan.params.with_mu(mu), plan.bdry, plan.law, controls, mesh) for mu in mus]
    results = _map(_solve_one, jobs_args, jobs)
    if isinstance(results[0], SolverFailure):
        raise results[0]
    baseline = results[0]
    records, failed = {}, []
    for mu, res in zip(plan.mu_values, results[1:]):
        if isinstance(res, SolverFailure):
            logger.warning("mu=%g failed: %s", mu, res)
            failed.append(mu)
        else:
            records[mu] = res
    rate, bl = assemble_reports(baseline, records, plan.thickness_exponent, failed)
    out = dict(records)
    out[0.0] = baseline
    return rate, bl, out


def baseline_refinement_error(plan: SweepPlan, controls: SolverControls,
                              baseline: Optional[RunRecord] = None) -> float:
    """Composite difference between the limit run and one on a mesh twice as fine."""
    mesh = plan.mesh
    fine = Mesh(2 * plan.n_cells)
    p0 = plan.params.with_mu(0.0)
    if baseline is None:
        baseline = solve(plan.initial(mesh), p0, plan.bdry, plan.law, controls, mesh)
    ref = solve(plan.initial(fine), p0, plan.bdry, plan.law, controls, fine)
    coarse = RunRecord(mesh=mesh, params=p0, snapshots=[
        State(t=s.t, rho=s.rho[::2], u=s.u[::2], w=s.w[:, ::2], b=s.b[:, ::2], theta=s.theta[::2])
        for s in ref.snapshots])
    return difference_norms(coarse, baseline).composite
