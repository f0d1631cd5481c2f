"""Initial-data generators: seeded Kelvin-Helmholtz data, constant states,
and a smooth isentropic vortex used as an exact reference for convergence
studies.

All generators are pure functions of their configuration; the random
interface coefficients come from the counter-based generator below so any
implementation of the same recipe reproduces them bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import GasParams, entropy_from_primitive, total_energy
from .errors import DomainError, UsageError
from .grid import Field, Grid

__all__ = [
    "KHConfig",
    "VortexConfig",
    "uniform_draws",
    "sample_interface_coeffs",
    "interface_profiles",
    "kelvin_helmholtz",
    "constant_state",
    "isentropic_vortex",
    "vortex_reference",
]

# 64-bit counter-based generator: draw i is obtained by feeding
# x = (seed + (i+1) * K0) mod 2^64 through an xorshift-multiply finalizer.
# Uniform doubles take the top 53 bits.  Fixed here so that every
# implementation of this recipe reproduces identical coefficient tables.
_K0 = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def _mix(x: int) -> int:
    x ^= x >> 30
    x = (x * _M1) & _MASK
    x ^= x >> 27
    x = (x * _M2) & _MASK
    x ^= x >> 31
    return x


def uniform_draws(seed: int, count: int, start: int = 0) -> np.ndarray:
    """Deterministic uniforms in [0,1): draw i = mix(seed + (i+1)*K0) >> 11."""
    out = np.empty(count)
    seed = int(seed) & _MASK
    for i in range(count):
        z = _mix((seed + ((start + i + 1) * _K0)) & _MASK)
        out[i] = (z >> 11) * 2.0**-53
    return out


@dataclass(frozen=True)
class KHConfig:
    """Kelvin-Helmholtz setup: two perturbed interfaces on the unit torus.

    The inner band I1(x1) < x2 < I2(x1) carries inner_state, the rest
    outer_state; states are primitive tuples (rho, u1, u2, p).
    """

    j1: float = 0.25
    j2: float = 0.75
    eps: float = 0.01
    modes: int = 10
    seed: int = 42
    inner_state: tuple = (2.0, -0.5, 0.0, 2.5)
    outer_state: tuple = (1.0, 0.5, 0.0, 2.5)


def sample_interface_coeffs(seed: int, modes: int):
    """Amplitude/phase tables (a, b), each of shape (2, modes).

    Draw order is interface-major: a_1, b_1, a_2, b_2 with `modes` draws
    each.  Amplitudes are normalized to sum to 1 per interface; phases lie
    in [-pi, pi].
    """
    if modes < 1:
        raise UsageError(f"modes must be >= 1, got {modes}")
    u = uniform_draws(seed, 4 * modes)
    a = np.empty((2, modes))
    b = np.empty((2, modes))
    for j in range(2):
        a_raw = u[2 * j * modes:(2 * j + 1) * modes]
        a[j] = a_raw / a_raw.sum()
        b[j] = -np.pi + 2.0 * np.pi * u[(2 * j + 1) * modes:(2 * j + 2) * modes]
    return a, b


def interface_profiles(cfg: KHConfig, x1: np.ndarray):
    """Perturbed interface heights (I1, I2) evaluated at the given x1."""
    a, b = sample_interface_coeffs(cfg.seed, cfg.modes)
    x1 = np.asarray(x1, dtype=float)
    m = np.arange(1, cfg.modes + 1)
    phase = b[:, None, :] + 2.0 * np.pi * m * x1[None, :, None]  # (2, nx, M)
    y = np.sum(a[:, None, :] * np.cos(phase), axis=2)
    heights = np.array([cfg.j1, cfg.j2])
    i1, i2 = heights[:, None] + cfg.eps * y
    return i1, i2


def _primitive_to_conservative(prim, gas: GasParams):
    rho, u1, u2, p = prim
    m = np.array([rho * u1, rho * u2])
    E = float(total_energy(rho, m, p, gas))
    return np.array([rho, m[0], m[1], E])


def constant_state(grid: Grid, prim, gas: GasParams) -> Field:
    """Uniform conservative field from a primitive tuple (rho, u1, u2, p)."""
    return Field.full(grid, _primitive_to_conservative(prim, gas))


def kelvin_helmholtz(cfg: KHConfig, grid: Grid, gas: GasParams) -> Field:
    """Piecewise-constant KH data; membership tested at cell centers."""
    inner = _primitive_to_conservative(cfg.inner_state, gas)
    outer = _primitive_to_conservative(cfg.outer_state, gas)
    x = grid.centers()
    i1, i2 = interface_profiles(cfg, x)
    in_band = (i1[None, :] < x[:, None]) & (x[:, None] < i2[None, :])  # (j, i)
    data = np.where(in_band[:, :, None], inner, outer)
    return Field(grid, data, check=False)


@dataclass(frozen=True)
class VortexConfig:
    """Isentropic Gaussian vortex riding on a uniform background flow.

    With r the distance from the (periodically wrapped) center,

        u   = u_bg + strength * exp((sigma^2 - r^2)/(2 sigma^2) - 1/2)
                      * (-(x2-c2), (x1-c1))          [tangential speed A*r*g]
        rho = rho_bg * (1 - chi * exp(-r^2/sigma^2))**(1/(gamma-1))
        p   = p_bg * (rho/rho_bg)**gamma             [isentropic]

    where g = exp(-r^2/(2 sigma^2)) and
    chi = (gamma-1) strength^2 sigma^2 rho_bg / (2 gamma p_bg).  This solves
    the steady radial momentum balance exactly, so the exact evolution is
    rigid translation by the background velocity.  sigma is small enough
    that wrap-around tails stay below 1e-12.
    """

    strength: float = 8.0
    sigma: float = 0.06
    center: tuple = (0.5, 0.5)
    rho_bg: float = 1.0
    u_bg: tuple = (1.0, 0.5)
    p_bg: float = 1.0


def _vortex_primitives(cfg: VortexConfig, gas: GasParams, x1, x2, t=0.0):
    cx = cfg.center[0] + cfg.u_bg[0] * t
    cy = cfg.center[1] + cfg.u_bg[1] * t
    # minimal-image displacement on the torus
    dx = (x1 - cx + 0.5) % 1.0 - 0.5
    dy = (x2 - cy + 0.5) % 1.0 - 0.5
    r2 = dx * dx + dy * dy
    sig2 = cfg.sigma * cfg.sigma
    g = np.exp(-0.5 * r2 / sig2)
    u1 = cfg.u_bg[0] - cfg.strength * g * dy
    u2 = cfg.u_bg[1] + cfg.strength * g * dx
    chi = ((gas.gamma - 1.0) * cfg.strength**2 * sig2 * cfg.rho_bg
           / (2.0 * gas.gamma * cfg.p_bg))
    if chi >= 1.0:
        raise DomainError(f"vortex too strong: density factor chi={chi} >= 1")
    rho = cfg.rho_bg * (1.0 - chi * g * g) ** (1.0 / (gas.gamma - 1.0))
    p = cfg.p_bg * (rho / cfg.rho_bg) ** gas.gamma
    return rho, u1, u2, p


def _vortex_field(cfg: VortexConfig, grid: Grid, gas: GasParams, t: float) -> Field:
    x1, x2 = grid.center_mesh()
    rho, u1, u2, p = _vortex_primitives(cfg, gas, x1, x2, t)
    m = np.stack([rho * u1, rho * u2], axis=-1)
    E = total_energy(rho, m, p, gas)
    return Field(grid, np.stack([rho, m[..., 0], m[..., 1], E], axis=-1), check=False)


def isentropic_vortex(grid: Grid, gas: GasParams, strength: float = 8.0,
                      cfg: VortexConfig | None = None) -> Field:
    """Initial conservative data for the vortex (cell-center sampling)."""
    if cfg is None:
        cfg = VortexConfig(strength=strength)
    return _vortex_field(cfg, grid, gas, 0.0)


def vortex_reference(cfg: VortexConfig, grid: Grid, gas: GasParams, t: float) -> Field:
    """Exact solution at time t: the initial vortex translated by u_bg * t."""
    return _vortex_field(cfg, grid, gas, t)


def vortex_entropy(cfg: VortexConfig, gas: GasParams) -> float:
    """The constant specific entropy of the vortex state."""
    return float(entropy_from_primitive(cfg.rho_bg, cfg.p_bg, gas)) / cfg.rho_bg
