"""Physical parameters and the rescaling to the solver's working variables."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..paraproduct import PressureK, ViscousL


@dataclass(frozen=True)
class PhysicsParams:
    """Rescaled coefficients of the (a, v) system with pressure law P = rho^gamma."""

    mu_bar: float
    lambda_bar: float
    gamma: float = 1.4
    rho_bar: float = 1.0

    def __post_init__(self):
        if not self.mu_bar > 0:
            raise ValueError(f"ellipticity violated: need mu > 0, got {self.mu_bar}")
        if not self.lambda_bar + 2 * self.mu_bar > 0:
            raise ValueError("ellipticity violated: need lambda + 2 mu > 0")
        if not self.rho_bar > 0:
            raise ValueError(f"reference density must be positive, got {self.rho_bar}")
        if not self.gamma * self.rho_bar ** (self.gamma - 1) > 0:
            raise ValueError("pressure law needs P'(rho_bar) > 0")

    @property
    def nu_bar(self) -> float:
        return self.lambda_bar + 2 * self.mu_bar

    @property
    def varpi(self) -> float:
        """sqrt(P'(rho_bar)) for P = rho^gamma."""
        return math.sqrt(self.gamma * self.rho_bar ** (self.gamma - 1))

    @property
    def K(self) -> PressureK:
        return PressureK(self.gamma)

    @property
    def L(self) -> ViscousL:
        return ViscousL()


@dataclass(frozen=True)
class Rescaling:
    """Maps (rho, u)(t, x) to a = rho(t/w^2, x/w)/rho_bar - 1, v = u(t/w^2, x/w)/w."""

    rho_bar: float
    varpi: float

    def time_to_solver(self, t_phys: float) -> float:
        return self.varpi**2 * t_phys

    def time_to_physical(self, t: float) -> float:
        return t / self.varpi**2

    def length_to_solver(self, x_phys: float) -> float:
        return self.varpi * x_phys

    def density_to_a(self, rho):
        return np.asarray(rho) / self.rho_bar - 1.0

    def a_to_density(self, a):
        return self.rho_bar * (1.0 + np.asarray(a))

    def velocity_to_v(self, u):
        return np.asarray(u) / self.varpi

    def v_to_velocity(self, v):
        return self.varpi * np.asarray(v)


def nondimensionalize(rho_bar: float, mu: float, lam: float, gamma: float = 1.4):
    """Return (PhysicsParams, Rescaling) for raw (rho_bar, mu, lambda, gamma).

    Viscosities are divided by rho_bar; the rescaling by varpi leaves them
    unchanged and turns the pressure term into (1 + K(a)) grad a.
    """
    if not rho_bar > 0:
        raise ValueError(f"reference density must be positive, got {rho_bar}")
    params = PhysicsParams(mu / rho_bar, lam / rho_bar, gamma, rho_bar)
    return params, Rescaling(rho_bar, params.varpi)
