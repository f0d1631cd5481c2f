"""Perfect-gas thermodynamics in (rho, S) variables.

All quantities derive from the closed-form pressure law

    p(rho, S) = rho**gamma * exp(S / (c_v * rho)),      c_v = 1/(gamma - 1),

with S the total entropy density (rho times specific entropy).  The total
internal energy density is rho*e = c_v * rho**gamma * exp(S/(c_v*rho)), so
p = (gamma - 1) * rho*e holds identically.

Every function is stateless and accepts scalars or numpy arrays; callers are
responsible for keeping densities positive (no clamping happens here).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "GasParams",
    "PointState",
    "pressure",
    "entropy_from_primitive",
    "total_energy",
    "internal_energy_density",
    "internal_energy_partials",
    "sound_speed",
    "relative_energy",
    "pressure_from_conservative",
    "entropy_from_conservative",
]


@dataclass(frozen=True)
class GasParams:
    """Adiabatic coefficient and the derived specific heat c_v = 1/(gamma-1).

    gamma must exceed 1; the physically reasonable range for gases is
    1 < gamma <= 5/3 (not enforced, larger values are useful in tests).
    """

    gamma: float = 1.4
    c_v: float = field(init=False)

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise DomainError(f"gamma must be > 1, got {self.gamma}")
        object.__setattr__(self, "c_v", 1.0 / (self.gamma - 1.0))


@dataclass(frozen=True)
class PointState:
    """Conservative-entropy state (rho, m, S); scalar or array valued.

    m has shape (..., 2).  Velocity and specific entropy are derived
    accessors; pressure and energies need GasParams and live as module
    functions.
    """

    rho: np.ndarray | float
    m: np.ndarray
    S: np.ndarray | float

    @property
    def u(self):
        rho = np.asarray(self.rho)
        return np.asarray(self.m) / rho[..., None]

    @property
    def s(self):
        """Specific entropy S/rho."""
        return np.asarray(self.S) / np.asarray(self.rho)


def _require_positive(name, value):
    arr = np.asarray(value)
    if not np.all(arr > 0.0):
        raise DomainError(f"{name} must be positive everywhere")


def pressure(state: PointState, gas: GasParams):
    """p = rho**gamma * exp(S/(c_v*rho)); requires rho > 0."""
    _require_positive("rho", state.rho)
    rho = np.asarray(state.rho, dtype=float)
    S = np.asarray(state.S, dtype=float)
    return rho**gas.gamma * np.exp(S / (gas.c_v * rho))


def entropy_from_primitive(rho, p, gas: GasParams):
    """Invert the pressure law: S = c_v * rho * log(p * rho**-gamma)."""
    _require_positive("rho", rho)
    _require_positive("p", p)
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    return gas.c_v * rho * np.log(p * rho**-gas.gamma)


def total_energy(rho, m, p, gas: GasParams):
    """E = |m|^2/(2 rho) + p/(gamma - 1)."""
    _require_positive("rho", rho)
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    kinetic = 0.5 * np.sum(m * m, axis=-1) / rho
    return kinetic + np.asarray(p, dtype=float) / (gas.gamma - 1.0)


def internal_energy_density(rho, S, gas: GasParams):
    """rho*e = c_v * rho**gamma * exp(S/(c_v*rho))."""
    _require_positive("rho", rho)
    rho = np.asarray(rho, dtype=float)
    S = np.asarray(S, dtype=float)
    return gas.c_v * rho**gas.gamma * np.exp(S / (gas.c_v * rho))


def internal_energy_partials(rho, S, gas: GasParams):
    """Analytic partials of H(rho,S) = rho*e with respect to rho and S.

    dH/drho = exp(S/(c_v rho)) * (c_v*gamma*rho**(gamma-1) - S*rho**(gamma-2))
    dH/dS   = rho**(gamma-1) * exp(S/(c_v rho))
    """
    _require_positive("rho", rho)
    rho = np.asarray(rho, dtype=float)
    S = np.asarray(S, dtype=float)
    expfac = np.exp(S / (gas.c_v * rho))
    d_rho = expfac * (gas.c_v * gas.gamma * rho ** (gas.gamma - 1.0)
                      - S * rho ** (gas.gamma - 2.0))
    d_S = rho ** (gas.gamma - 1.0) * expfac
    return d_rho, d_S


def sound_speed(rho, p, gas: GasParams):
    """c = sqrt(gamma * p / rho)."""
    _require_positive("rho", rho)
    _require_positive("p", p)
    return np.sqrt(gas.gamma * np.asarray(p, dtype=float) / np.asarray(rho, dtype=float))


def relative_energy(state: PointState, ref: PointState, gas: GasParams):
    """Bregman-type distance built from the convex total energy.

    E(state | ref) = 1/2 rho |m/rho - u_ref|^2
                     + H(rho, S) - dH/drho(ref) (rho - rho_ref)
                     - dH/dS(ref) (S - S_ref) - H(ref)

    with H = internal_energy_density.  Nonnegative, zero iff state == ref.
    """
    _require_positive("state.rho", state.rho)
    _require_positive("ref.rho", ref.rho)
    rho = np.asarray(state.rho, dtype=float)
    S = np.asarray(state.S, dtype=float)
    rho_r = np.asarray(ref.rho, dtype=float)
    S_r = np.asarray(ref.S, dtype=float)

    du = state.u - ref.u
    kinetic = 0.5 * rho * np.sum(du * du, axis=-1)
    H = internal_energy_density(rho, S, gas)
    H_r = internal_energy_density(rho_r, S_r, gas)
    dH_rho, dH_S = internal_energy_partials(rho_r, S_r, gas)
    return kinetic + H - dH_rho * (rho - rho_r) - dH_S * (S - S_r) - H_r


def pressure_from_conservative(rho, m, E, gas: GasParams):
    """p = (gamma - 1)(E - |m|^2/(2 rho)); no positivity check on the result."""
    _require_positive("rho", rho)
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    return (gas.gamma - 1.0) * (np.asarray(E, dtype=float)
                                - 0.5 * np.sum(m * m, axis=-1) / rho)


def entropy_from_conservative(rho, m, E, gas: GasParams):
    """Total entropy S of a conservative state (requires positive pressure)."""
    p = pressure_from_conservative(rho, m, E, gas)
    return entropy_from_primitive(rho, p, gas)
