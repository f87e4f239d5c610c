"""Mesh, simulation state, physical parameters and boundary data.

All five unknowns live on one uniform node grid over [0, 1]. Transverse
2-vectors (velocity ``w`` and magnetic field ``b``) are stored as arrays of
shape ``(2, n_nodes)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ValidationError(ValueError):
    """Raised when inputs violate a structural invariant."""


@dataclass(frozen=True)
class Mesh:
    n_cells: int

    def __post_init__(self):
        if not isinstance(self.n_cells, (int, np.integer)) or self.n_cells < 2:
            raise ValidationError(f"n_cells must be an integer >= 2, got {self.n_cells!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def x(self) -> np.ndarray:
        x = np.arange(self.n_nodes) * self.h
        x[-1] = 1.0
        return x

    @property
    def volumes(self) -> np.ndarray:
        """Dual-cell widths; their weighted sum is the trapezoid rule."""
        v = np.full(self.n_nodes, self.h)
        v[0] = v[-1] = 0.5 * self.h
        return v


def _frozen(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if shape is not None and arr.shape != shape:
        raise ValidationError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


def weight_omega(x):
    """Distance to the nearest wall, ``min(x, 1 - x)`` on [0, 1]."""
    xa = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(xa)) or np.any(xa < 0.0) or np.any(xa > 1.0):
        raise ValueError("weight_omega is defined on [0, 1] only")
    out = np.minimum(xa, 1.0 - xa)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class State:
    """Nodal values of (rho, u, w, b, theta) at time ``t``.

    Arrays are copied and made read-only on construction.
    """

    t: float
    rho: np.ndarray
    u: np.ndarray
    w: np.ndarray
    b: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.rho).shape[0]
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "rho", _frozen(self.rho, (n,)))
        object.__setattr__(self, "u", _frozen(self.u, (n,)))
        object.__setattr__(self, "w", _frozen(self.w, (2, n)))
        object.__setattr__(self, "b", _frozen(self.b, (2, n)))
        object.__setattr__(self, "theta", _frozen(self.theta, (n,)))

    @property
    def n_nodes(self) -> int:
        return self.rho.shape[0]

    def replace(self, **changes) -> "State":
        kw = dict(t=self.t, rho=self.rho, u=self.u, w=self.w, b=self.b, theta=self.theta)
        kw.update(changes)
        return State(**kw)

    def fields(self) -> dict[str, np.ndarray]:
        return {"rho": self.rho, "u": self.u, "w": self.w, "b": self.b, "theta": self.theta}

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.fields().values())


@dataclass(frozen=True)
class PhysParams:
    """Transport coefficients. ``c_v`` is fixed to 1 and not configurable."""

    lam: float = 1.0
    mu: float = 1e-3
    nu: float = 0.5
    gamma: float = 1.0
    kappa1: float = 1.0
    q: float = 2.0
    conductivity_law: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        for key in ("lam", "nu", "gamma", "kappa1", "q"):
            v = getattr(self, key)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{key} must be > 0, got {v!r}")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValidationError(f"mu must be >= 0, got {self.mu!r}")

    @property
    def limit_mode(self) -> bool:
        return self.mu == 0.0

    def with_mu(self, mu: float) -> "PhysParams":
        return PhysParams(self.lam, mu, self.nu, self.gamma, self.kappa1, self.q,
                          self.conductivity_law)


@dataclass(frozen=True)
class BoundaryData:
    """Wall values of the transverse velocity, C^1 in time by construction.

    kind ``"constant"``: ``w(t) = c``.
    kind ``"sinusoid"``: ``w(t) = c + a * sin(omega * t + phase)``.
    kind ``"spline"``: not-a-knot cubic spline through a table ``times``/``values_*``.
    """

    kind: str = "constant"
    c_minus: tuple = (0.0, 0.0)
    c_plus: tuple = (0.0, 0.0)
    a_minus: tuple = (0.0, 0.0)
    a_plus: tuple = (0.0, 0.0)
    omega: float = 1.0
    phase: float = 0.0
    times: tuple = ()
    values_minus: tuple = ()
    values_plus: tuple = ()
    _splines: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "spline"):
            raise ValidationError(f"unknown boundary kind {self.kind!r}")
        for key in ("c_minus", "c_plus", "a_minus", "a_plus"):
            v = tuple(float(c) for c in getattr(self, key))
            if len(v) != 2:
                raise ValidationError(f"{key} must be a 2-vector")
            object.__setattr__(self, key, v)
        if self.kind == "spline":
            from scipy.interpolate import CubicSpline

            t = np.asarray(self.times, dtype=float)
            vm = np.asarray(self.values_minus, dtype=float)
            vp = np.asarray(self.values_plus, dtype=float)
            if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
                raise ValidationError("spline times must be strictly increasing, >= 2 entries")
            if vm.shape != (t.size, 2) or vp.shape != (t.size, 2):
                raise ValidationError("spline values must have shape (len(times), 2)")
            object.__setattr__(self, "_splines", (CubicSpline(t, vm, axis=0),
                                                  CubicSpline(t, vp, axis=0)))

    @classmethod
    def constant(cls, w_minus, w_plus) -> "BoundaryData":
        return cls("constant", c_minus=tuple(w_minus), c_plus=tuple(w_plus))

    def _eval(self, side: int, t: float) -> np.ndarray:
        if self.kind == "spline":
            return np.asarray(self._splines[side](t), dtype=float)
        c = np.array(self.c_minus if side == 0 else self.c_plus)
        if self.kind == "constant":
            return c
        a = np.array(self.a_minus if side == 0 else self.a_plus)
        return c + a * math.sin(self.omega * t + self.phase)

    def w_minus(self, t: float) -> np.ndarray:
        return self._eval(0, t)

    def w_plus(self, t: float) -> np.ndarray:
        return self._eval(1, t)


@dataclass(frozen=True)
class InitialData:
    rho0: np.ndarray
    u0: np.ndarray
    w0: np.ndarray
    b0: np.ndarray
    theta0: np.ndarray
    t0: float = 0.0


@dataclass(frozen=True)
class Violation:
    field: str
    node: int
    value: float
    kind: str

    def __str__(self):
        return f"{self.kind} violation in {self.field} at node {self.node}: {self.value!r}"


def _endpoint_violations(state: State, bdry: Optional[BoundaryData], check_w: bool,
                         atol: float) -> list[Violation]:
    out = []
    last = state.n_nodes - 1
    for node in (0, last):
        if abs(state.u[node]) > atol:
            out.append(Violation("u", node, float(state.u[node]), "endpoint"))
        for comp in range(2):
            if abs(state.b[comp, node]) > atol:
                out.append(Violation("b", node, float(state.b[comp, node]), "endpoint"))
    if check_w and bdry is not None:
        for node, wall in ((0, bdry.w_minus(state.t)), (last, bdry.w_plus(state.t))):
            for comp in range(2):
                if abs(state.w[comp, node] - wall[comp]) > atol:
                    out.append(Violation("w", node, float(state.w[comp, node]), "endpoint"))
    return out


def validate_state(state: State, params: Optional[PhysParams] = None,
                   bdry: Optional[BoundaryData] = None, *, pos_floor: float = 0.0,
                   atol: float = 1e-12) -> list[Violation]:
    """Return every invariant violation of ``state``; an empty list means valid.

    The wall condition on ``w`` is only checked when ``params.mu > 0``.
    """
    out: list[Violation] = []
    for name, arr in state.fields().items():
        flat = arr.reshape(-1, state.n_nodes)
        for comp in flat:
            for node in np.flatnonzero(~np.isfinite(comp)):
                out.append(Violation(name, int(node), float(comp[node]), "finite"))
    for name in ("rho", "theta"):
        arr = getattr(state, name)
        for node in np.flatnonzero(~(arr > pos_floor) & np.isfinite(arr)):
            out.append(Violation(name, int(node), float(arr[node]), "positivity"))
    check_w = params is not None and not params.limit_mode
    out.extend(_endpoint_violations(state, bdry, check_w, atol))
    return out


def make_state(mesh: Mesh, data: InitialData, bdry: BoundaryData) -> State:
    """Build the initial state, enforcing positivity and wall compatibility."""
    n = mesh.n_nodes
    try:
        state = State(t=data.t0, rho=data.rho0, u=data.u0, w=data.w0, b=data.b0,
                      theta=data.theta0)
    except ValidationError as exc:
        raise ValidationError(f"initial data not on mesh with {n} nodes: {exc}") from None
    if state.n_nodes != n:
        raise ValidationError(f"initial data has {state.n_nodes} nodes, mesh has {n}")
    bad = validate_state(state, None, None)
    last = n - 1
    for node, wall in ((0, bdry.w_minus(data.t0)), (last, bdry.w_plus(data.t0))):
        for comp in range(2):
            if abs(state.w[comp, node] - wall[comp]) > 1e-12:
                bad.append(Violation("w", node, float(state.w[comp, node]), "compatibility"))
    if bad:
        raise ValidationError("; ".join(str(v) for v in bad))
    return state
