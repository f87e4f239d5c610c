"""Discrete integrals, weighted norms and difference-norm accumulators.

Spatial integrals use the trapezoid rule on the node grid. Gradients are
centered in the interior and second-order one-sided at the walls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import ConductivityLaw, total_energy_density
from .core import Mesh, PhysParams, State, weight_omega


class AlignmentError(ValueError):
    """Two states compared by a difference norm are not on the same mesh/time."""


def trapz(values, mesh: Mesh) -> float:
    """Trapezoid integral over [0, 1]; 2-vector fields are integrated per component and summed."""
    v = np.asarray(values, dtype=float).reshape(-1, mesh.n_nodes)
    return float(np.sum(v @ mesh.volumes))


def grad(values, mesh: Mesh) -> np.ndarray:
    return np.gradient(np.asarray(values, dtype=float), mesh.h, axis=-1, edge_order=2)


def l2_norm(values, mesh: Mesh) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(trapz(v * v, mesh)))


def total_mass(state: State, mesh: Mesh) -> float:
    return trapz(state.rho, mesh)


def total_energy(state: State, mesh: Mesh, params: PhysParams = None) -> float:
    dens = total_energy_density(state.rho, state.u, state.w, state.b, state.theta)
    return trapz(dens, mesh)


def entropy_production_density(state: State, mesh: Mesh, params: PhysParams,
                               law: ConductivityLaw) -> np.ndarray:
    ux = grad(state.u, mesh)
    wx = grad(state.w, mesh)
    bx = grad(state.b, mesh)
    tx = grad(state.theta, mesh)
    th = state.theta
    mech = params.lam * ux**2 + params.mu * np.sum(wx * wx, axis=0) + params.nu * np.sum(bx * bx, axis=0)
    kappa = np.asarray(law(state.rho, th)) * np.ones_like(th)
    return mech / th + kappa * tx**2 / th**2


def entropy_production(state: State, mesh: Mesh, params: PhysParams,
                       law: ConductivityLaw) -> float:
    return trapz(entropy_production_density(state, mesh, params, law), mesh)


def boundary_flux(state: State, mesh: Mesh, mu: float) -> float:
    """``mu * (w . w_x)`` evaluated at x=1 minus x=0, with one-sided wall differences."""
    if mu == 0.0:
        return 0.0
    w = state.w
    h = mesh.h
    wx0 = (-3.0 * w[:, 0] + 4.0 * w[:, 1] - w[:, 2]) / (2 * h)
    wx1 = (3.0 * w[:, -1] - 4.0 * w[:, -2] + w[:, -3]) / (2 * h)
    return float(mu * (w[:, -1] @ wx1 - w[:, 0] @ wx0))


def weighted_grad_norm(values, mesh: Mesh, weight_power: float) -> float:
    """L2 norm of ``omega**p * d(values)/dx`` with ``omega = min(x, 1-x)``."""
    if weight_power not in (0.5, 1.0, 1):
        raise ValueError("weight_power must be 1/2 or 1")
    om = weight_omega(mesh.x) ** (2 * weight_power)
    g = grad(values, mesh)
    return float(np.sqrt(trapz(om * g * g, mesh)))


def interior_sup(diff, mesh: Mesh, delta: float) -> float:
    """Max nodal magnitude of ``diff`` over nodes with delta <= x <= 1 - delta."""
    if not 0.0 <= delta < 0.5:
        raise ValueError(f"delta must lie in [0, 1/2), got {delta!r}")
    d = np.asarray(diff, dtype=float).reshape(-1, mesh.n_nodes)
    mag = np.sqrt(np.sum(d * d, axis=0))
    x = mesh.x
    slack = 1e-12
    keep = (x >= delta - slack) & (x <= 1.0 - delta + slack)
    return float(np.max(mag[keep])) if np.any(keep) else 0.0


FIELDS = ("rho", "u", "w", "b", "theta")
GRAD_FIELDS = ("u", "b", "theta")


@dataclass(frozen=True)
class DiffNorms:
    """Running difference norms between a viscous run and the limit run.

    ``linf`` holds, per field, the max over samples of ``||f - f_bar||_{L2}``;
    ``grads`` holds accumulated ``||d(f - f_bar)/dx||^2 * dt`` for u, b, theta.
    """

    linf_l2: float = 0.0
    l2qt_grads: float = 0.0
    linf: dict = field(default_factory=lambda: {k: 0.0 for k in FIELDS})
    grads: dict = field(default_factory=lambda: {k: 0.0 for k in GRAD_FIELDS})

    @property
    def composite(self) -> float:
        return self.linf_l2 + float(np.sqrt(self.l2qt_grads))

    def per_field(self) -> dict[str, float]:
        return {k: self.linf[k] + (float(np.sqrt(self.grads[k])) if k in self.grads else 0.0)
                for k in FIELDS}


def diff_norms_update(acc: DiffNorms, s: State, s_bar: State, mesh: Mesh, dt: float) -> DiffNorms:
    if s.n_nodes != mesh.n_nodes or s_bar.n_nodes != mesh.n_nodes:
        raise AlignmentError("states are not on the given mesh")
    if abs(s.t - s_bar.t) > 1e-12 * max(1.0, abs(s.t)):
        raise AlignmentError(f"state times differ: {s.t!r} vs {s_bar.t!r}")
    sq = {}
    for k in FIELDS:
        d = getattr(s, k) - getattr(s_bar, k)
        sq[k] = trapz(d * d, mesh)
    gsq = {}
    for k in GRAD_FIELDS:
        g = grad(getattr(s, k) - getattr(s_bar, k), mesh)
        gsq[k] = trapz(g * g, mesh)
    linf = {k: max(acc.linf[k], float(np.sqrt(sq[k]))) for k in FIELDS}
    grads = {k: acc.grads[k] + gsq[k] * dt for k in GRAD_FIELDS}
    return DiffNorms(
        linf_l2=max(acc.linf_l2, float(np.sqrt(sum(sq.values())))),
        l2qt_grads=acc.l2qt_grads + sum(gsq.values()) * dt,
        linf=linf,
        grads=grads,
    )
