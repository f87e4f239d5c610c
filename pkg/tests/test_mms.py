import numpy as np
import pytest

from planar_mhd.constitutive import ConductivityLaw
from planar_mhd.core import Mesh, validate_state, make_state
from planar_mhd.mms import CASES, Mode, TrigField, fitted_order, mms_verify

X = np.linspace(0.05, 0.95, 13)
EPS = 1e-5


@pytest.mark.parametrize("mode", [Mode(0.7, 1, "sin", decay=0.3, osc=0.4),
                                  Mode(-1.2, 3, "cos", decay=1.0),
                                  Mode(0.5, 2, "sin", osc=0.9)])
def test_mode_derivatives_match_finite_differences(mode):
    t = 0.37
    f, ft, fx, fxx = mode.eval(X, t)
    fd_t = (mode.eval(X, t + EPS)[0] - mode.eval(X, t - EPS)[0]) / (2 * EPS)
    fd_x = (mode.eval(X + EPS, t)[0] - mode.eval(X - EPS, t)[0]) / (2 * EPS)
    fd_xx = (mode.eval(X + 1e-4, t)[0] - 2 * f + mode.eval(X - 1e-4, t)[0]) / 1e-8
    np.testing.assert_allclose(ft, fd_t, atol=1e-8)
    np.testing.assert_allclose(fx, fd_x, atol=1e-8)
    np.testing.assert_allclose(fxx, fd_xx, atol=1e-5)


def _fd_residual(case, name, x, t):
    """PDE residual evaluated with nested central differences of the exact fields only."""
    p = case.params
    law = ConductivityLaw.from_params(p)

    def f(k, xx=x, tt=t):
        return case.exact(k, xx, tt)[0]

    def dx(k, xx=x):
        return (f(k, xx + EPS) - f(k, xx - EPS)) / (2 * EPS)

    def dt(k):
        return (f(k, x, t + EPS) - f(k, x, t - EPS)) / (2 * EPS)

    def dxx(k):
        hh = 1e-4
        return (f(k, x + hh) - 2 * f(k) + f(k, x - hh)) / hh**2

    rho, u, w, b, th = (f(k) for k in ("rho", "u", "w", "b", "theta"))
    if name == "rho":
        return dt("rho") + (f("rho", x + EPS) * f("u", x + EPS)
                            - f("rho", x - EPS) * f("u", x - EPS)) / (2 * EPS)
    if name == "u":
        def ptot(xx):
            return p.gamma * f("rho", xx) * f("theta", xx) + 0.5 * np.sum(f("b", xx) ** 2, axis=0)
        return dt("u") + u * dx("u") + (ptot(x + EPS) - ptot(x - EPS)) / (2 * EPS) / rho \
            - p.lam * dxx("u") / rho
    if name == "w":
        return dt("w") + u * dx("w") - dx("b") / rho - p.mu * dxx("w") / rho
    if name == "b":
        ub = (f("u", x + EPS) * f("b", x + EPS) - f("u", x - EPS) * f("b", x - EPS)) / (2 * EPS)
        return dt("b") + ub - dx("w") - p.nu * dxx("b")

    def flux(xx):
        return law(f("rho", xx), f("theta", xx)) * dx("theta", xx)
    cond = (flux(x + 1e-4) - flux(x - 1e-4)) / 2e-4
    heat = p.lam * dx("u") ** 2 + p.mu * np.sum(dx("w") ** 2, axis=0) + p.nu * np.sum(dx("b") ** 2, axis=0)
    return dt("theta") + u * dx("theta") + p.gamma * th * dx("u") - cond / rho - heat / rho


@pytest.mark.parametrize("name", ["rho", "u", "w", "b", "theta"])
def test_residual_matches_finite_difference_pde(name):
    case = CASES["coupled"]
    np.testing.assert_allclose(case.residual(name, X, 0.21), _fd_residual(case, name, X, 0.21),
                               atol=1e-5)


@pytest.mark.parametrize("name", list(CASES))
def test_initial_data_is_admissible(name):
    case = CASES[name]
    m = Mesh(16)
    s = make_state(m, case.initial(m), case.boundary())
    assert validate_state(s, case.params, case.boundary()) == []


def test_exact_case_flagged():
    rep = mms_verify("exact", (10, 20, 40))
    assert rep.status == "exact" and rep.passed
    assert all(max(e) < 1e-12 for e in rep.errors.values())


def test_fitted_order():
    hs = np.array([0.1, 0.05, 0.025])
    assert fitted_order(hs, 3 * hs**2) == pytest.approx(2.0)


def test_continuity_small_grids():
    rep = mms_verify("continuity", (20, 40, 80))
    assert rep.status == "ok"
    assert rep.order > 0.8
    assert any(ln.startswith("order_rho=") for ln in rep.lines())


def test_mms_bad_input():
    with pytest.raises(KeyError):
        mms_verify("nope", (10, 20, 40))
    with pytest.raises(ValueError):
        mms_verify("exact", (10, 20))
    with pytest.raises(ValueError):
        mms_verify("exact", (20, 10, 40))
