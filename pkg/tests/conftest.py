import numpy as np
import pytest

from planar_mhd.core import BoundaryData, Mesh, PhysParams, State
from planar_mhd.presets import default_boundary, smooth_shear


def rest_state(n_cells=20, t=0.0, w=(0.0, 0.0)):
    n = n_cells + 1
    return State(t=t, rho=np.ones(n), u=np.zeros(n), w=np.tile(np.array(w, float)[:, None], n),
                 b=np.zeros((2, n)), theta=np.ones(n))


@pytest.fixture
def mesh():
    return Mesh(50)


@pytest.fixture
def params():
    return PhysParams(lam=1.0, mu=1e-3, nu=0.5, gamma=1.0, kappa1=1.0, q=2.0)


@pytest.fixture
def shear_setup():
    m = Mesh(100)
    bdry = default_boundary("smooth-shear")
    return m, bdry, smooth_shear(m, bdry)


@pytest.fixture
def zero_bdry():
    return BoundaryData()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
