"""Equation of state, heat conductivity and pointwise energy/entropy densities.

Internal energy is ``e = theta`` (``c_v = 1``) and pressure ``p = gamma*rho*theta``.
All functions accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class ConstitutiveViolation(ValueError):
    """A custom conductivity evaluated below the floor ``kappa1 * theta**q``."""


def _require_positive(name, value):
    v = np.asarray(value, dtype=float)
    if not np.all(v > 0):
        raise ValueError(f"{name} must be strictly positive")
    return v


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def pressure(rho, theta, gamma):
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    return _out(gamma * rho * theta)


def internal_energy(theta):
    return _out(_require_positive("theta", theta) * 1.0)


@dataclass(frozen=True)
class ConductivityLaw:
    """Heat conductivity ``kappa(rho, theta)``.

    ``kind="power_law"`` gives exactly ``kappa1 * theta**q``. ``kind="custom"``
    calls ``custom_eval`` and checks the result against that floor on every
    evaluation; twice-differentiability of a custom law is the caller's
    responsibility.
    """

    kind: str = "power_law"
    kappa1: float = 1.0
    q: float = 2.0
    custom_eval: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("power_law", "custom"):
            raise ValueError(f"unknown conductivity kind {self.kind!r}")
        if self.kind == "custom" and self.custom_eval is None:
            raise ValueError("custom conductivity needs custom_eval")
        if not (self.kappa1 > 0 and self.q > 0):
            raise ValueError("kappa1 and q must be positive")

    @classmethod
    def from_params(cls, params) -> "ConductivityLaw":
        if params.conductivity_law is None:
            return cls("power_law", params.kappa1, params.q)
        return cls("custom", params.kappa1, params.q, params.conductivity_law)

    def floor(self, theta):
        return self.kappa1 * np.asarray(theta, dtype=float) ** self.q

    def __call__(self, rho, theta):
        return conductivity(self, rho, theta)

    def dtheta(self, rho, theta):
        """d(kappa)/d(theta); closed form for the power law, central difference otherwise."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "power_law":
            return self.q * self.kappa1 * theta ** (self.q - 1.0)
        eps = 1e-6 * np.maximum(theta, 1.0)
        return (self(rho, theta + eps) - self(rho, theta - eps)) / (2 * eps)


def conductivity(law: ConductivityLaw, rho, theta):
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    floor = law.floor(theta)
    if law.kind == "power_law":
        return _out(floor)
    kappa = np.asarray(law.custom_eval(rho, theta), dtype=float)
    below = ~(kappa >= floor * (1.0 - 1e-14))
    if np.any(below):
        i = int(np.flatnonzero(np.atleast_1d(below))[0])
        k = np.atleast_1d(np.broadcast_to(kappa, np.shape(below)))[i]
        f = np.atleast_1d(np.broadcast_to(floor, np.shape(below)))[i]
        raise ConstitutiveViolation(
            f"custom conductivity {k!r} below floor kappa1*theta^q = {f!r} (index {i})")
    return _out(kappa)


def total_energy_density(rho, u, w, b, theta):
    """``rho*(theta + (u^2 + |w|^2)/2) + |b|^2/2``; ``w`` and ``b`` have the 2-vector on axis 0."""
    rho = np.asarray(rho, dtype=float)
    w = np.asarray(w, dtype=float)
    b = np.asarray(b, dtype=float)
    kin = np.asarray(u, dtype=float) ** 2 + np.sum(w * w, axis=0)
    return _out(rho * (np.asarray(theta, dtype=float) + 0.5 * kin) + 0.5 * np.sum(b * b, axis=0))


def entropy_density(rho, theta, gamma):
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    return _out(np.log(theta) - gamma * np.log(rho))
