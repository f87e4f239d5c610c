"""Semi-implicit, operator-split time stepping of the planar MHD system.

One step applies, in order, the sub-steps

    continuity -> momentum -> transverse velocity -> magnetic -> temperature

each using the fields already updated earlier in the same step. Transport and
coupling terms are explicit; the diffusion terms (lambda, mu, nu, kappa) are
implicit tridiagonal solves. Nodes double as centres of dual cells whose
widths are ``h`` in the interior and ``h/2`` at the walls, so the conservative
updates telescope exactly under the trapezoid rule.

With ``mu == 0`` the transverse velocity is advanced without any wall
condition; ``BoundaryData`` is not consulted in that sub-step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from . import diagnostics as dg
from .constitutive import ConductivityLaw
from .core import BoundaryData, InitialData, Mesh, PhysParams, State, make_state
from .tridiag import LinearSolveError, tridiag_solve

logger = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    def __init__(self, message, *, field=None, time=None, last_snapshot=None):
        super().__init__(message)
        self.field = field
        self.time = time
        self.last_snapshot = last_snapshot


class PositivityEvent(Exception):
    def __init__(self, field, node, value):
        super().__init__(f"{field} = {value!r} below floor at node {node}")
        self.field = field
        self.node = node
        self.value = value


class Forcing(Protocol):
    """Hook for manufactured-solution runs.

    ``source`` returns an extra right-hand side for a field's evolution
    equation (or None); ``prescribed`` returns values that replace the field's
    sub-step entirely (or None).
    """

    def source(self, name: str, x: np.ndarray, t: float) -> Optional[np.ndarray]: ...

    def prescribed(self, name: str, x: np.ndarray, t: float) -> Optional[np.ndarray]: ...


@dataclass(frozen=True)
class SolverControls:
    cfl: float = 0.4
    t_end: float = 1.0
    dt_max: float = math.inf
    snapshot_every: float = 0.1
    pos_floor: float = 1e-12
    max_halvings: int = 20
    theta_picard_iters: int = 2

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.snapshot_every > 0:
            raise ValueError("snapshot_every must be positive")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.max_halvings < 0 or self.theta_picard_iters < 1:
            raise ValueError("max_halvings >= 0 and theta_picard_iters >= 1 required")


@dataclass(frozen=True)
class StepDiagnostics:
    t: float
    dt: float
    mass: float
    total_energy: float
    entropy_prod: float
    min_rho: float
    min_theta: float
    bflux: float
    halvings: int = 0
    min_entropy_density: float = 0.0


DIAG_COLUMNS = ("t", "dt", "mass", "total_energy", "entropy_prod", "min_rho", "min_theta", "bflux")


@dataclass
class RunRecord:
    mesh: Mesh
    params: PhysParams
    snapshots: list = field(default_factory=list)
    diag: list = field(default_factory=list)
    grad_sq: dict = field(default_factory=lambda: {k: 0.0 for k in ("u", "w", "b", "theta")})
    initial_diag: Optional[StepDiagnostics] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def final(self) -> State:
        return self.snapshots[-1]

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diag])

    def energy_residual(self) -> float:
        """``E(T) - E(0) - sum(dt * bflux)``; zero for the exact solution."""
        e0 = self.initial_diag.total_energy
        return self.diag[-1].total_energy - e0 - float(np.sum(self.series("dt") * self.series("bflux")))


# ---------------------------------------------------------------------------
# stencils


def _face_flux(q, u):
    """First-order upwind flux ``u_face * q_upwind`` on the n-1 interior faces."""
    uf = 0.5 * (u[:-1] + u[1:])
    return uf * np.where(uf >= 0.0, q[..., :-1], q[..., 1:])


def _divergence(flux, mesh: Mesh):
    """Dual-cell divergence of face fluxes; the wall faces carry zero flux."""
    out = np.zeros(flux.shape[:-1] + (mesh.n_nodes,))
    out[..., :-1] += flux
    out[..., 1:] -= flux
    return out / mesh.volumes


def _ddx(f, h):
    """Centered interior difference, first-order one-sided at the walls.

    This pairs with trapezoid weights as a summation-by-parts operator.
    """
    d = np.empty_like(f)
    d[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2 * h)
    d[..., 0] = (f[..., 1] - f[..., 0]) / h
    d[..., -1] = (f[..., -1] - f[..., -2]) / h
    return d


def _upwind1(f, u, h):
    """``u * f_x`` with first-order upwind differences."""
    back = np.empty_like(f)
    fwd = np.empty_like(f)
    back[..., 1:] = (f[..., 1:] - f[..., :-1]) / h
    back[..., 0] = 0.0
    fwd[..., :-1] = back[..., 1:]
    fwd[..., -1] = 0.0
    return u * np.where(u > 0.0, back, fwd)


def _upwind2(f, u, h):
    """``u * f_x`` with second-order upwind differences, first-order next to the walls."""
    n = f.shape[-1]
    back = np.zeros_like(f)
    fwd = np.zeros_like(f)
    back[2:] = (3 * f[2:] - 4 * f[1:-1] + f[:-2]) / (2 * h)
    back[1] = (f[1] - f[0]) / h
    fwd[:-2] = (-3 * f[:-2] + 4 * f[1:-1] - f[2:]) / (2 * h)
    fwd[n - 2] = (f[n - 1] - f[n - 2]) / h
    return u * np.where(u > 0.0, back, fwd)


def _implicit_dirichlet(rhs, r, left, right):
    """Solve ``(1 + 2r_i) x_i - r_i (x_{i-1} + x_{i+1}) = rhs_i`` on interior nodes.

    ``rhs`` has shape (..., n_nodes); wall values are ``left``/``right`` and
    are written into the returned array.
    """
    lead = rhs.shape[:-1]
    ri = r[1:-1]
    b = rhs[..., 1:-1].reshape(-1, ri.size).T.copy()
    left = np.broadcast_to(np.asarray(left, dtype=float), lead).reshape(-1)
    right = np.broadcast_to(np.asarray(right, dtype=float), lead).reshape(-1)
    b[0] += ri[0] * left
    b[-1] += ri[-1] * right
    x = tridiag_solve(-ri[1:], 1.0 + 2.0 * ri, -ri[:-1], b)
    out = np.empty_like(rhs)
    out[..., 1:-1] = x.T.reshape(lead + (ri.size,))
    out[..., 0] = left.reshape(lead)
    out[..., -1] = right.reshape(lead)
    return out


def _source(forcing, name, mesh, t):
    if forcing is None:
        return 0.0
    s = forcing.source(name, mesh.x, t)
    return 0.0 if s is None else s


# ---------------------------------------------------------------------------
# time step size


def cfl_dt(state: State, params: PhysParams, mesh: Mesh, controls: SolverControls) -> float:
    """``min(dt_max, cfl*h / max(|u| + c))`` with ``c = sqrt(gamma*theta + |b|^2/rho)``."""
    if not state.is_finite():
        raise SolverFailure("non-finite state values", time=state.t)
    c = np.sqrt(params.gamma * state.theta + np.sum(state.b**2, axis=0) / state.rho)
    speed = float(np.max(np.abs(state.u) + c))
    if not (math.isfinite(speed) and speed > 0):
        raise SolverFailure(f"invalid signal speed {speed!r}", time=state.t)
    return min(controls.dt_max, controls.cfl * mesh.h / speed)


# ---------------------------------------------------------------------------
# sub-steps


def substep_continuity(state: State, mesh: Mesh, dt: float, *, forcing=None,
                       pos_floor: float = 0.0) -> np.ndarray:
    flux = _face_flux(state.rho, state.u)
    rho = state.rho - dt * _divergence(flux, mesh)
    rho = rho + dt * _source(forcing, "rho", mesh, state.t + dt)
    _check_floor("rho", rho, pos_floor)
    return rho


def substep_momentum(state: State, params: PhysParams, mesh: Mesh, dt: float, *,
                     forcing=None) -> np.ndarray:
    """Advance u; ``state.rho`` must already hold the updated density."""
    h = mesh.h
    rho, u = state.rho, state.u
    ptot = params.gamma * rho * state.theta + 0.5 * np.sum(state.b**2, axis=0)
    rhs = u - dt * _upwind2(u, u, h) - dt * _ddx(ptot, h) / rho
    rhs = rhs + dt * _source(forcing, "u", mesh, state.t + dt)
    r = dt * params.lam / (rho * h * h)
    return _implicit_dirichlet(rhs, r, 0.0, 0.0)


def substep_transverse_velocity(state: State, params: PhysParams, bdry: BoundaryData,
                                mesh: Mesh, dt: float, *, forcing=None) -> np.ndarray:
    h = mesh.h
    rho, u, w = state.rho, state.u, state.w
    rhs = w - dt * _upwind1(w, u, h) + dt * _ddx(state.b, h) / rho
    rhs = rhs + dt * _source(forcing, "w", mesh, state.t + dt)
    if params.limit_mode:
        return rhs
    t_new = state.t + dt
    r = dt * params.mu / (rho * h * h)
    return _implicit_dirichlet(rhs, r, bdry.w_minus(t_new), bdry.w_plus(t_new))


def substep_magnetic(state: State, params: PhysParams, mesh: Mesh, dt: float, *,
                     forcing=None) -> np.ndarray:
    """Advance b; ``state.w`` must already hold the updated transverse velocity."""
    h = mesh.h
    b = state.b
    rhs = b - dt * _divergence(_face_flux(b, state.u), mesh) + dt * _ddx(state.w, h)
    rhs = rhs + dt * _source(forcing, "b", mesh, state.t + dt)
    r = np.full(mesh.n_nodes, dt * params.nu / (h * h))
    return _implicit_dirichlet(rhs, r, 0.0, 0.0)


def substep_temperature(state: State, params: PhysParams, law: ConductivityLaw, mesh: Mesh,
                        dt: float, *, forcing=None, picard_iters: int = 2,
                        pos_floor: float = 0.0) -> np.ndarray:
    """Advance theta with all other fields already at the new time level.

    Conduction is implicit with kappa lagged and refreshed ``picard_iters``
    times; face conductivities use the arithmetic mean of adjacent theta.
    The walls are insulating (zero conductive flux through the end faces).
    """
    h = mesh.h
    rho, u, th = state.rho, state.u, state.theta
    ux = dg.grad(u, mesh)
    wx = dg.grad(state.w, mesh)
    bx = dg.grad(state.b, mesh)
    heating = params.lam * ux**2 + params.mu * np.sum(wx * wx, axis=0) + params.nu * np.sum(bx * bx, axis=0)
    rhs = th - dt * _upwind1(th, u, h) - dt * params.gamma * th * _ddx(u, h) + dt * heating / rho
    rhs = rhs + dt * _source(forcing, "theta", mesh, state.t + dt)
    _check_floor("theta", rhs, pos_floor)

    a = dt / (rho * mesh.volumes * h)
    rho_f = 0.5 * (rho[:-1] + rho[1:])
    it = rhs
    for _ in range(picard_iters):
        kf = np.asarray(law(rho_f, 0.5 * (it[:-1] + it[1:])), dtype=float) * np.ones(mesh.n_cells)
        diag = 1.0 + a * (np.concatenate(([0.0], kf)) + np.concatenate((kf, [0.0])))
        it = tridiag_solve(-a[1:] * kf, diag, -a[:-1] * kf, rhs)
        if not np.all(np.isfinite(it)):
            raise SolverFailure("non-finite temperature in conduction sweep", field="theta")
        _check_floor("theta", it, pos_floor)
    return it


def _check_floor(name, values, floor):
    bad = ~(values >= floor) if floor > 0 else ~(values > 0)
    if np.any(bad):
        node = int(np.flatnonzero(bad)[0])
        raise PositivityEvent(name, node, float(values[node]))


# ---------------------------------------------------------------------------
# full step


def _advance(state, params, bdry, law, mesh, dt, t_new, controls, forcing):
    def prescribed(name):
        return None if forcing is None else forcing.prescribed(name, mesh.x, t_new)

    kw = dict(forcing=forcing)
    s = state
    rho = prescribed("rho")
    if rho is None:
        rho = substep_continuity(s, mesh, dt, pos_floor=controls.pos_floor, **kw)
    s = s.replace(rho=rho)
    u = prescribed("u")
    if u is None:
        u = substep_momentum(s, params, mesh, dt, **kw)
    s = s.replace(u=u)
    w = prescribed("w")
    if w is None:
        w = substep_transverse_velocity(s, params, bdry, mesh, dt, **kw)
    s = s.replace(w=w)
    b = prescribed("b")
    if b is None:
        b = substep_magnetic(s, params, mesh, dt, **kw)
    s = s.replace(b=b)
    th = prescribed("theta")
    if th is None:
        th = substep_temperature(s, params, law, mesh, dt, picard_iters=controls.theta_picard_iters,
                                 pos_floor=controls.pos_floor, **kw)
    return s.replace(t=t_new, theta=th)


def state_diagnostics(state: State, params: PhysParams, law: ConductivityLaw, mesh: Mesh,
                      dt: float = 0.0, halvings: int = 0) -> StepDiagnostics:
    dens = dg.entropy_production_density(state, mesh, params, law)
    return StepDiagnostics(
        t=state.t, dt=dt,
        mass=dg.total_mass(state, mesh),
        total_energy=dg.total_energy(state, mesh, params),
        entropy_prod=dg.trapz(dens, mesh),
        min_rho=float(np.min(state.rho)),
        min_theta=float(np.min(state.theta)),
        bflux=dg.boundary_flux(state, mesh, params.mu),
        halvings=halvings,
        min_entropy_density=float(np.min(dens)),
    )


def step(state: State, params: PhysParams, bdry: BoundaryData, law: ConductivityLaw,
         controls: SolverControls, mesh: Mesh, *, dt: Optional[float] = None,
         t_land: Optional[float] = None, forcing=None) -> tuple[State, StepDiagnostics]:
    """Advance one step, halving dt on positivity events.

    ``dt`` defaults to :func:`cfl_dt`. When ``t_land`` is given and the first
    attempt succeeds, the new time is set to exactly ``t_land``.
    """
    if dt is None:
        dt = cfl_dt(state, params, mesh, controls)
    elif not state.is_finite():
        raise SolverFailure("non-finite state values", time=state.t)
    last_event = None
    for halvings in range(controls.max_halvings + 1):
        t_new = t_land if (halvings == 0 and t_land is not None) else state.t + dt
        try:
            new = _advance(state, params, bdry, law, mesh, dt, t_new, controls, forcing)
        except PositivityEvent as ev:
            last_event = ev
            dt *= 0.5
            continue
        except LinearSolveError as exc:
            raise SolverFailure(f"linear solve failed: {exc}", time=state.t) from exc
        if not new.is_finite():
            raise SolverFailure("non-finite values after step", time=state.t)
        diag = state_diagnostics(new, params, law, mesh, dt, halvings)
        if not diag.min_entropy_density >= 0.0:
            raise SolverFailure("negative entropy production", field="theta", time=new.t)
        return new, diag
    raise SolverFailure(
        f"positivity rescue exhausted after {controls.max_halvings} halvings: {last_event}",
        field=last_event.field, time=state.t)


def snapshot_targets(t0: float, controls: SolverControls) -> list[float]:
    """Snapshot times ``k * snapshot_every`` strictly after ``t0``, then ``t_end``."""
    every, t_end = controls.snapshot_every, controls.t_end
    k = math.floor(t0 / every + 1e-9) + 1
    out = []
    while k * every < t_end * (1 - 1e-12):
        out.append(k * every)
        k += 1
    out.append(t_end)
    return out


def solve(initial: InitialData, params: PhysParams, bdry: BoundaryData,
          law: Optional[ConductivityLaw], controls: SolverControls, mesh: Mesh, *,
          forcing=None) -> RunRecord:
    """Integrate from ``initial.t0`` to ``controls.t_end``.

    Snapshots are stored at ``initial.t0``, every ``snapshot_every`` and at
    ``t_end``; step sizes are clipped to land on those times exactly.
    """
    if law is None:
        law = ConductivityLaw.from_params(params)
    state = make_state(mesh, initial, bdry)
    if controls.t_end <= state.t:
        raise ValueError("t_end must exceed the initial time")
    rec = RunRecord(mesh=mesh, params=params, snapshots=[state])
    rec.initial_diag = state_diagnostics(state, params, law, mesh)
    for target in snapshot_targets(state.t, controls):
        while state.t < target:
            try:
                dt = cfl_dt(state, params, mesh, controls)
                land = dt >= target - state.t
                if land:
                    dt = target - state.t
                state, diag = step(state, params, bdry, law, controls, mesh, dt=dt,
                                   t_land=target if land else None, forcing=forcing)
            except SolverFailure as exc:
                exc.time = state.t
                exc.last_snapshot = rec.snapshots[-1]
                raise
            rec.diag.append(diag)
            for k in rec.grad_sq:
                g = dg.grad(getattr(state, k), mesh)
                rec.grad_sq[k] += diag.dt * dg.trapz(g * g, mesh)
        rec.snapshots.append(state)
        logger.debug("snapshot t=%.6g steps=%d", state.t, len(rec.diag))
    return rec
