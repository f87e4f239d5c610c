"""Named initial-data presets.

Each preset is compatible with the wall data it is built for: ``u`` and ``b``
vanish at the walls and ``w`` matches ``bdry`` at the initial time.
"""

from __future__ import annotations

import numpy as np

from .core import BoundaryData, InitialData, Mesh

PRESETS = ("rest", "smooth-shear", "thermal-bump", "snapshot")

DEFAULT_WALLS = {
    "rest": ((0.0, 0.0), (0.0, 0.0)),
    "smooth-shear": ((1.0, 0.0), (-1.0, 0.0)),
    "thermal-bump": ((0.0, 0.0), (0.0, 0.0)),
}


def default_boundary(preset: str) -> BoundaryData:
    wm, wp = DEFAULT_WALLS[preset]
    return BoundaryData.constant(wm, wp)


def _wall_interp(mesh: Mesh, bdry: BoundaryData, t0: float = 0.0) -> np.ndarray:
    x = mesh.x
    wm, wp = bdry.w_minus(t0), bdry.w_plus(t0)
    return wm[:, None] * (1.0 - x) + wp[:, None] * x


def rest(mesh: Mesh, bdry: BoundaryData) -> InitialData:
    n = mesh.n_nodes
    return InitialData(rho0=np.ones(n), u0=np.zeros(n), w0=_wall_interp(mesh, bdry),
                       b0=np.zeros((2, n)), theta0=np.ones(n))


def smooth_shear(mesh: Mesh, bdry: BoundaryData) -> InitialData:
    x = mesh.x
    s1, s2 = np.sin(np.pi * x), np.sin(2 * np.pi * x)
    s1[[0, -1]] = s2[[0, -1]] = 0.0
    return InitialData(
        rho0=1.0 + 0.1 * np.cos(2 * np.pi * x),
        u0=0.1 * s2,
        w0=_wall_interp(mesh, bdry) + np.array([0.5 * s1, 0.5 * s2]),
        b0=np.array([0.3 * s1, 0.2 * s2]),
        theta0=1.0 + 0.1 * np.cos(np.pi * x),
    )


def thermal_bump(mesh: Mesh, bdry: BoundaryData) -> InitialData:
    x = mesh.x
    n = mesh.n_nodes
    return InitialData(rho0=np.ones(n), u0=np.zeros(n), w0=_wall_interp(mesh, bdry),
                       b0=np.zeros((2, n)),
                       theta0=1.0 + 0.5 * np.exp(-((x - 0.5) / 0.1) ** 2))


BUILDERS = {"rest": rest, "smooth-shear": smooth_shear, "thermal-bump": thermal_bump}


def build(preset: str, mesh: Mesh, bdry: BoundaryData) -> InitialData:
    try:
        return BUILDERS[preset](mesh, bdry)
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}") from None
