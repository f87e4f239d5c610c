"""Manufactured-solution order-of-accuracy checks.

Each case fixes closed-form trigonometric fields that satisfy the wall
conditions, computes the residual of the governing equations by hand-coded
derivatives, and feeds it to the solver as a source. Fields outside the
case's ``evolved`` set are overwritten with their exact values each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from .constitutive import ConductivityLaw
from .core import BoundaryData, InitialData, Mesh, PhysParams
from .solver import SolverControls, solve

PI = math.pi


@dataclass(frozen=True)
class Mode:
    """``amp * X(k*pi*x) * exp(-decay*t) * (1 + osc*sin(t))`` with X = sin or cos."""

    amp: float
    k: int = 1
    kind: str = "sin"
    decay: float = 0.0
    osc: float = 0.0

    def eval(self, x, t):
        kx = self.k * PI
        s, c = np.sin(kx * x), np.cos(kx * x)
        if self.kind == "sin":
            X, Xx, Xxx = s, kx * c, -kx * kx * s
        else:
            X, Xx, Xxx = c, -kx * s, -kx * kx * c
        e = math.exp(-self.decay * t)
        T = e * (1.0 + self.osc * math.sin(t))
        Tt = e * (-self.decay * (1.0 + self.osc * math.sin(t)) + self.osc * math.cos(t))
        a = self.amp
        return a * X * T, a * X * Tt, a * Xx * T, a * Xxx * T


@dataclass(frozen=True)
class TrigField:
    const: float = 0.0
    modes: tuple = ()

    def eval(self, x, t):
        """Return ``(f, f_t, f_x, f_xx)`` at nodes ``x`` and time ``t``."""
        x = np.asarray(x, dtype=float)
        f = np.full_like(x, self.const)
        ft = np.zeros_like(x)
        fx = np.zeros_like(x)
        fxx = np.zeros_like(x)
        for m in self.modes:
            a, b, c, d = m.eval(x, t)
            f += a
            ft += b
            fx += c
            fxx += d
        return f, ft, fx, fxx


def _vec(f1, f2, x, t):
    return tuple(np.stack(p) for p in zip(f1.eval(x, t), f2.eval(x, t)))


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    rho: TrigField
    u: TrigField
    w1: TrigField
    w2: TrigField
    b1: TrigField
    b2: TrigField
    theta: TrigField
    params: PhysParams
    evolved: frozenset
    t_end: float = 0.1
    dt_factor: float = 1.0
    min_order: float = 0.0

    def exact(self, name, x, t):
        if name == "w":
            return _vec(self.w1, self.w2, x, t)
        if name == "b":
            return _vec(self.b1, self.b2, x, t)
        return getattr(self, name).eval(x, t)

    def boundary(self) -> BoundaryData:
        """Wall data of ``w`` as a sinusoid in time (w modes must not decay)."""
        cm, cp, am, ap = [], [], [], []
        for f in (self.w1, self.w2):
            if any(m.decay != 0.0 for m in f.modes):
                raise ValueError("w modes must have decay 0 to be representable on the walls")
            osc = {m.osc for m in f.modes if m.osc != 0.0}
            if len(osc) > 1:
                raise ValueError("w modes must share one oscillation amplitude")
            o = osc.pop() if osc else 0.0
            v0 = f.const + sum(m.amp * (1.0 if m.kind == "cos" else 0.0) for m in f.modes)
            v1 = f.const + sum(m.amp * (math.cos(m.k * PI) if m.kind == "cos" else 0.0)
                               for m in f.modes)
            cm.append(v0)
            cp.append(v1)
            am.append((v0 - f.const) * o)
            ap.append((v1 - f.const) * o)
        return BoundaryData("sinusoid", c_minus=tuple(cm), c_plus=tuple(cp),
                            a_minus=tuple(am), a_plus=tuple(ap), omega=1.0, phase=0.0)

    def initial(self, mesh: Mesh) -> InitialData:
        x = mesh.x
        bd = self.boundary()
        w = self.exact("w", x, 0.0)[0]
        w[:, 0] = bd.w_minus(0.0)
        w[:, -1] = bd.w_plus(0.0)
        b = self.exact("b", x, 0.0)[0]
        b[:, [0, -1]] = 0.0
        u = self.exact("u", x, 0.0)[0]
        u[[0, -1]] = 0.0
        return InitialData(rho0=self.exact("rho", x, 0.0)[0], u0=u, w0=w, b0=b,
                           theta0=self.exact("theta", x, 0.0)[0])

    def residual(self, name, x, t):
        """Source that makes the exact fields solve the chosen field equation."""
        p = self.params
        rho, rho_t, rho_x, _ = self.exact("rho", x, t)
        u, u_t, u_x, u_xx = self.exact("u", x, t)
        w, w_t, w_x, w_xx = self.exact("w", x, t)
        b, b_t, b_x, b_xx = self.exact("b", x, t)
        th, th_t, th_x, th_xx = self.exact("theta", x, t)
        if name == "rho":
            return rho_t + rho_x * u + rho * u_x
        if name == "u":
            ptot_x = p.gamma * (rho_x * th + rho * th_x) + np.sum(b * b_x, axis=0)
            return u_t + u * u_x + ptot_x / rho - p.lam * u_xx / rho
        if name == "w":
            return w_t + u * w_x - b_x / rho - p.mu * w_xx / rho
        if name == "b":
            return b_t + u_x * b + u * b_x - w_x - p.nu * b_xx
        if name == "theta":
            law = ConductivityLaw.from_params(p)
            cond = law.dtheta(rho, th) * th_x**2 + law(rho, th) * th_xx
            heat = p.lam * u_x**2 + p.mu * np.sum(w_x**2, axis=0) + p.nu * np.sum(b_x**2, axis=0)
            return th_t + u * th_x + p.gamma * th * u_x - cond / rho - heat / rho
        raise KeyError(name)

    # solver forcing hook
    def source(self, name, x, t):
        return self.residual(name, x, t) if name in self.evolved else None

    def prescribed(self, name, x, t):
        return None if name in self.evolved else self.exact(name, x, t)[0]


_P = PhysParams(lam=0.5, mu=0.05, nu=0.2, gamma=1.0, kappa1=0.5, q=2.0)
_ALL = frozenset({"rho", "u", "w", "b", "theta"})

_RHO = TrigField(1.0, (Mode(0.2, 2, "cos", osc=0.5), Mode(0.1, 1, "sin", decay=1.0)))
_U = TrigField(0.0, (Mode(0.3, 1, "sin", decay=0.5), Mode(0.1, 2, "sin", osc=0.5)))
_W1 = TrigField(0.0, (Mode(1.0, 1, "cos", osc=0.3), Mode(0.3, 2, "sin", osc=0.3)))
_W2 = TrigField(0.2, (Mode(0.5, 2, "sin", osc=0.3),))
_B1 = TrigField(0.0, (Mode(0.4, 1, "sin", decay=0.5),))
_B2 = TrigField(0.0, (Mode(0.3, 2, "sin", osc=0.5),))
_TH = TrigField(1.0, (Mode(0.3, 1, "cos", decay=1.0), Mode(0.1, 3, "cos", osc=0.5)))
_ZERO = TrigField(0.0)


def _case(name, evolved, min_order, **fields):
    kw = dict(rho=_RHO, u=_U, w1=_W1, w2=_W2, b1=_B1, b2=_B2, theta=_TH)
    kw.update(fields)
    return ManufacturedCase(name=name, params=_P, evolved=frozenset(evolved),
                            min_order=min_order, **kw)


CASES = {
    "exact": ManufacturedCase("exact", TrigField(1.0), _ZERO, TrigField(0.5), TrigField(-0.5),
                              _ZERO, _ZERO, TrigField(2.0), _P, _ALL),
    "continuity": _case("continuity", {"rho"}, 0.9),
    "momentum": _case("momentum", {"u"}, 1.9),
    "transverse": _case("transverse", {"w"}, 0.9),
    "magnetic": _case("magnetic", {"b"}, 1.9, u=_ZERO),
    "temperature": _case("temperature", {"theta"}, 1.9, u=_ZERO, w1=_ZERO, w2=_ZERO,
                         b1=_ZERO, b2=_ZERO, rho=TrigField(1.0, (Mode(0.2, 2, "cos"),))),
    "coupled": _case("coupled", _ALL, 0.9),
}


@dataclass
class MMSReport:
    case: str
    resolutions: list
    errors: dict = field(default_factory=dict)
    pair_orders: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)
    status: str = "ok"
    min_order: float = 0.0

    @property
    def order(self) -> float:
        return min(self.orders.values()) if self.orders else math.nan

    @property
    def passed(self) -> bool:
        if self.status == "exact":
            return True
        return self.status == "ok" and self.order >= self.min_order

    def lines(self) -> list[str]:
        out = [f"case={self.case}", f"status={self.status}",
               "resolutions=" + ",".join(str(n) for n in self.resolutions)]
        for k, errs in self.errors.items():
            out.append(f"error_{k}=" + ",".join(f"{e:.17g}" for e in errs))
            if k in self.orders:
                out.append(f"order_{k}={self.orders[k]:.17g}")
        out.append(f"order={self.order:.17g}")
        out.append(f"pass={'true' if self.passed else 'false'}")
        return out


def fitted_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)


def run_case(case: ManufacturedCase, n_cells: int):
    """Solve one resolution; return the per-field L2 errors at ``t_end``."""
    mesh = Mesh(n_cells)
    dt = case.dt_factor * mesh.h**2
    controls = SolverControls(cfl=1.0, t_end=case.t_end, dt_max=dt, snapshot_every=case.t_end)
    rec = solve(case.initial(mesh), case.params, case.boundary(), None, controls, mesh,
                forcing=case)
    final = rec.final
    return {k: dg.l2_norm(getattr(final, k) - case.exact(k, mesh.x, final.t)[0], mesh)
            for k in sorted(case.evolved)}


def mms_verify(case, resolutions, *, jobs: int = 1) -> MMSReport:
    if isinstance(case, str):
        if case not in CASES:
            raise KeyError(f"unknown MMS case {case!r}; choose from {sorted(CASES)}")
        case = CASES[case]
    res = [int(n) for n in resolutions]
    if len(res) < 3 or any(b <= a for a, b in zip(res, res[1:])):
        raise ValueError("resolutions must be strictly increasing with at least 3 entries")
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_n = list(pool.map(run_case, [case] * len(res), res))
    else:
        per_n = [run_case(case, n) for n in res]
    report = MMSReport(case=case.name, resolutions=res, min_order=case.min_order)
    hs = np.array([1.0 / n for n in res])
    for k in sorted(case.evolved):
        report.errors[k] = [e[k] for e in per_n]
    if all(max(e) < 1e-12 for e in report.errors.values()):
        report.status = "exact"
        return report
    for k, errs in report.errors.items():
        e = np.array(errs)
        report.pair_orders[k] = list(np.log(e[:-1] / e[1:]) / np.log(hs[:-1] / hs[1:]))
        report.orders[k] = fitted_order(hs, e)
        if np.any(np.diff(e) >= 0):
            report.status = "non-monotone"
    return report
