import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_mhd import diagnostics as dg
from planar_mhd.constitutive import ConductivityLaw
from planar_mhd.core import Mesh, PhysParams

from conftest import rest_state


def _sine_state(n):
    m = Mesh(n)
    u = np.sin(np.pi * m.x)
    u[[0, -1]] = 0.0
    return m, rest_state(n).replace(u=u)


@pytest.mark.parametrize("n", [200, 400])
def test_entropy_production_sine(n):
    m, s = _sine_state(n)
    p = PhysParams(lam=1.0, mu=0.0, nu=1.0)
    val = dg.entropy_production(s, m, p, ConductivityLaw.from_params(p))
    assert val == pytest.approx(math.pi**2 / 2, rel=5e-4)


def test_entropy_production_second_order():
    p = PhysParams(lam=1.0, mu=0.0)
    law = ConductivityLaw.from_params(p)
    errs = []
    for n in (50, 100, 200):
        m, s = _sine_state(n)
        errs.append(abs(dg.entropy_production(s, m, p, law) - math.pi**2 / 2))
    assert math.log2(errs[0] / errs[1]) > 1.8
    assert math.log2(errs[1] / errs[2]) > 1.8


def test_entropy_production_rest_is_zero():
    p = PhysParams()
    assert dg.entropy_production(rest_state(), Mesh(20), p, ConductivityLaw.from_params(p)) == 0.0


def test_weighted_grad_norm_linear():
    m = Mesh(200)
    assert dg.weighted_grad_norm(m.x, m, 0.5) == pytest.approx(0.5, rel=1e-10)
    assert dg.weighted_grad_norm(m.x, m, 1) == pytest.approx(math.sqrt(1 / 12), rel=1e-4)
    with pytest.raises(ValueError):
        dg.weighted_grad_norm(m.x, m, 2)


def test_trapz_and_mass():
    m = Mesh(100)
    assert dg.trapz(m.x**2, m) == pytest.approx(1 / 3, abs=2e-5)
    assert dg.total_mass(rest_state(100), m) == pytest.approx(1.0, abs=1e-15)
    assert dg.trapz(np.ones((2, 101)), m) == pytest.approx(2.0)


def test_total_energy_rest():
    assert dg.total_energy(rest_state(10), Mesh(10)) == pytest.approx(1.0)


def test_boundary_flux_linear_profile():
    m = Mesh(10)
    w = np.vstack([1 - 2 * m.x, np.zeros(11)])
    s = rest_state(10).replace(w=w)
    # w_x = -2; (w.w_x)(1) - (w.w_x)(0) = (-1)(-2) - (1)(-2) = 4
    assert dg.boundary_flux(s, m, 0.1) == pytest.approx(0.4, rel=1e-12)
    assert dg.boundary_flux(s, m, 0.0) == 0.0


def test_diff_norms_single_snapshot():
    m = Mesh(400)
    s0 = rest_state(400)
    d = np.sin(np.pi * m.x)
    s = s0.replace(rho=s0.rho + d)
    acc = dg.diff_norms_update(dg.DiffNorms(), s, s0, m, 0.0)
    assert acc.composite == pytest.approx(math.sqrt(0.5), rel=1e-6)
    assert acc.per_field()["rho"] == pytest.approx(math.sqrt(0.5), rel=1e-6)
    assert acc.per_field()["u"] == 0.0


def test_diff_norms_accumulates_gradient():
    m = Mesh(400)
    s0 = rest_state(400)
    u = np.sin(np.pi * m.x)
    s = s0.replace(u=u)
    acc = dg.DiffNorms()
    for k in range(3):
        acc = dg.diff_norms_update(acc, s.replace(t=0.1 * k), s0.replace(t=0.1 * k), m, 0.1 if k else 0.0)
    # two intervals of 0.1 with ||u_x||^2 = pi^2/2
    assert acc.l2qt_grads == pytest.approx(0.2 * math.pi**2 / 2, rel=1e-4)
    assert acc.linf_l2 == pytest.approx(math.sqrt(0.5), rel=1e-6)


def test_diff_norms_time_mismatch():
    s0 = rest_state(10)
    with pytest.raises(dg.AlignmentError):
        dg.diff_norms_update(dg.DiffNorms(), s0.replace(t=0.1), s0, Mesh(10), 0.1)
    with pytest.raises(dg.AlignmentError):
        dg.diff_norms_update(dg.DiffNorms(), s0, s0, Mesh(12), 0.1)


def test_interior_sup_examples():
    m = Mesh(10)
    d = np.zeros((2, 11))
    d[0, 0] = 5.0
    d[:, 5] = (3.0, 4.0)
    assert dg.interior_sup(d, m, 0.0) == 5.0
    assert dg.interior_sup(d, m, 0.2) == 5.0
    d[:, 5] = 0.0
    assert dg.interior_sup(d, m, 0.1) == 0.0
    for bad in (-0.1, 0.5, 0.7):
        with pytest.raises(ValueError):
            dg.interior_sup(d, m, bad)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 0.49), st.floats(0, 0.49), st.integers(0, 2**31))
def test_interior_sup_monotone_in_delta(d1, d2, seed):
    m = Mesh(37)
    diff = np.random.default_rng(seed).normal(size=(2, 38))
    lo, hi = sorted((d1, d2))
    assert dg.interior_sup(diff, m, hi) <= dg.interior_sup(diff, m, lo)


def test_total_mass_examples():
    m = Mesh(10)
    assert dg.total_mass(rest_state(10).replace(rho=1 + m.x), m) == pytest.approx(1.5, abs=1e-15)
    for n in (10, 20):
        assert dg.total_mass(rest_state(n).replace(rho=np.full(n + 1, 2.0)), Mesh(n)) == pytest.approx(2.0)


def test_interior_sup_weight_profile():
    m = Mesh(20)
    assert dg.interior_sup(dg.weight_omega(m.x), m, 0.25) == 0.5
    d = np.zeros(21)
    d[0] = 1.0
    assert dg.interior_sup(d, m, 0.1) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_weighted_norm_ordering(seed):
    m = Mesh(40)
    f = np.random.default_rng(seed).normal(size=(2, 41))
    assert dg.weighted_grad_norm(f, m, 0.5) >= dg.weighted_grad_norm(f, m, 1)


def test_identical_states_leave_accumulator_unchanged():
    m = Mesh(20)
    s = rest_state(20).replace(u=np.sin(np.pi * m.x))
    acc = dg.DiffNorms(linf_l2=0.3, l2qt_grads=0.1)
    out = dg.diff_norms_update(acc, s, s, m, 0.5)
    assert out.linf_l2 == 0.3 and out.l2qt_grads == 0.1
