"""Explicit finite-volume time integration of the 2D Euler system.

Two schemes: the local Lax-Friedrichs (Rusanov) scheme and a viscosity
finite-volume (VFV) scheme with h-scaled artificial viscosity (see
_kernels.numpy_backend for the face fluxes).  Steps are forward Euler under
a CFL restriction; a step is accepted only if density and internal energy
stay positive and the entropy monitors do not regress.  Rejected steps are
retried with a halved dt a bounded number of times -- this is the
step-size-relaxation mechanism that keeps the discrete entropy inequality
of the explicit schemes intact.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .eos import GasParams
from .errors import InvalidStateError, SolverFailure, StepRejected, UsageError
from .grid import Field, Grid, integrate

__all__ = [
    "SchemeConfig",
    "StepReport",
    "StepEvent",
    "RunRecord",
    "max_wave_speed",
    "step_lax_friedrichs",
    "step_vfv",
    "stable_dt",
    "run",
]

POSITIVITY_FLOOR = 1e-12       # rho and rho*e below this reject the step
ENTROPY_MIN_SLACK = 5e-11      # allowed dip of min specific entropy vs its running max
ENTROPY_TOTAL_SLACK = 1e-12    # relative slack for total-entropy decrease
ENERGY_TOTAL_SLACK = 1e-11     # absolute slack for VFV total-energy increase


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selection and stability parameters.

    vfv_alpha_velocity / vfv_alpha_density are the exponents of the h-scaled
    viscosities (velocity and density term respectively); which exponent
    belongs to which term is configurable because the split is a modelling
    choice, defaults are (1.8, 0.8).
    """

    scheme: str = "lf"  # "lf" | "vfv"
    cfl: float = 0.3
    vfv_alpha_velocity: float = 1.8
    vfv_alpha_density: float = 0.8
    t_end: float = 2.0
    lf_global_lambda: bool = False
    max_retries: int = 10

    def __post_init__(self):
        if self.scheme not in ("lf", "vfv"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.cfl < 1.0:
            raise UsageError(f"cfl must lie in (0,1), got {self.cfl}")
        for name in ("vfv_alpha_velocity", "vfv_alpha_density"):
            a = getattr(self, name)
            if not 0.0 < a < 2.0:
                raise UsageError(f"{name} must lie in (0,2), got {a}")
        if self.t_end < 0.0:
            raise UsageError(f"t_end must be >= 0, got {self.t_end}")


@dataclass(frozen=True)
class StepReport:
    """Per-step diagnostics; positivity holds on every accepted step."""

    index: int
    t: float
    dt: float
    max_speed: float
    min_rho: float
    min_internal_energy: float
    min_specific_entropy: float
    mass: float
    momentum1: float
    momentum2: float
    energy: float
    total_entropy: float
    max_rho: float
    max_cell_energy: float
    rho_norm_gamma: float
    entropy_norm_gamma: float
    momentum_norm: float
    retries: int = 0

    CSV_FIELDS = ("index", "t", "dt", "max_speed", "min_rho",
                  "min_internal_energy", "min_specific_entropy", "mass",
                  "momentum1", "momentum2", "energy", "total_entropy",
                  "max_rho", "max_cell_energy", "rho_norm_gamma",
                  "entropy_norm_gamma", "momentum_norm", "retries")


@dataclass(frozen=True)
class StepEvent:
    """Passed to observers after each accepted step."""

    index: int
    t_prev: float
    t_new: float
    dt: float
    prev: Field
    new: Field
    report: StepReport


@dataclass
class RunRecord:
    """Everything a run produced: config, step reports, final state."""

    gas: GasParams
    config: SchemeConfig
    grid: Grid
    reports: list[StepReport] = dc_field(default_factory=list)
    initial: Field | None = None
    final: Field | None = None
    wall_seconds: float = 0.0

    @property
    def steps(self) -> int:
        return len(self.reports) - 1

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])


def _split(U):
    return U[:, :, 0], U[:, :, 1], U[:, :, 2], U[:, :, 3]


def _require_conservative(state: Field):
    if state.components != 4:
        raise UsageError("expected a 4-component conservative state field")


def max_wave_speed(state: Field, gas: GasParams) -> float:
    """max over cells and axes of |u_axis| + c, c = sqrt(gamma p / rho)."""
    _require_conservative(state)
    rho, m1, m2, E = _split(state.data)
    if not np.all(rho > 0.0):
        raise InvalidStateError("non-positive density")
    p = (gas.gamma - 1.0) * (E - 0.5 * (m1 * m1 + m2 * m2) / rho)
    if not np.all(p > 0.0):
        raise InvalidStateError("non-positive pressure")
    return float(_kernels.max_wave_speed(state.data, gas.gamma))


def _check_step_output(U):
    if not np.all(np.isfinite(U)):
        raise StepRejected("non-finite values after step")
    rho, m1, m2, E = _split(U)
    if rho.min() <= POSITIVITY_FLOOR:
        raise StepRejected("density fell below the positivity floor")
    eint = E - 0.5 * (m1 * m1 + m2 * m2) / rho
    if eint.min() <= POSITIVITY_FLOOR:
        raise StepRejected("internal energy fell below the positivity floor")


def step_lax_friedrichs(state: Field, dt: float, gas: GasParams,
                        global_lambda: float = 0.0) -> Field:
    """One conservative local-Lax-Friedrichs step; rejects positivity loss."""
    _require_conservative(state)
    U = _kernels.lf_step(state.data, dt, state.grid.h, gas.gamma, global_lambda)
    _check_step_output(U)
    return Field(state.grid, U, check=False)


def vfv_coefficients(grid: Grid, cfg: SchemeConfig):
    """Face viscosity coefficients mu = h**(alpha - 1)."""
    h = grid.h
    return h ** (cfg.vfv_alpha_density - 1.0), h ** (cfg.vfv_alpha_velocity - 1.0)


def step_vfv(state: Field, dt: float, gas: GasParams, cfg: SchemeConfig) -> Field:
    """One conservative VFV step; rejects positivity loss."""
    _require_conservative(state)
    mu_rho, mu_u = vfv_coefficients(state.grid, cfg)
    U = _kernels.vfv_step(state.data, dt, state.grid.h, gas.gamma, mu_rho, mu_u)
    _check_step_output(U)
    return Field(state.grid, U, check=False)


def stable_dt(state: Field, gas: GasParams, cfg: SchemeConfig,
              speed: float | None = None) -> float:
    """Largest dt the run loop will attempt for this state.

    LF: the CFL bound cfl*h/max_wave_speed.  VFV additionally respects the
    explicit-diffusion bound h^2/(4 eps) and the forward-Euler bound for
    underdamped oscillatory modes, (eps_rho + eps_u)/speed^2.
    """
    h = state.grid.h
    if speed is None:
        speed = max_wave_speed(state, gas)
    dt = cfg.cfl * h / speed
    if cfg.scheme == "vfv":
        mu_rho, mu_u = vfv_coefficients(state.grid, cfg)
        eps_rho, eps_u = mu_rho * h, mu_u * h
        rho = state.data[:, :, 0]
        ratio = float(rho.max() / rho.min())
        dt = min(dt, 0.9 * h * h / (4.0 * max(eps_rho, eps_u * ratio)))
        dt = min(dt, 0.9 * (eps_rho + eps_u) / (speed * speed))
    return dt


def make_report(state: Field, gas: GasParams, index: int, t: float, dt: float,
                speed: float, retries: int = 0) -> StepReport:
    rho, m1, m2, E = _split(state.data)
    h = state.grid.h
    cell = h * h
    eint = E - 0.5 * (m1 * m1 + m2 * m2) / rho
    # specific entropy s = c_v log(p rho^-gamma); S = rho s
    rho_pow = rho ** gas.gamma
    z = (gas.gamma - 1.0) * eint / rho_pow  # = p / rho^gamma
    s = gas.c_v * np.log(z)
    S = rho * s
    mnorm = np.sqrt(m1 * m1 + m2 * m2)
    q = 2.0 * gas.gamma / (gas.gamma + 1.0)
    return StepReport(
        index=index, t=t, dt=dt, max_speed=speed,
        min_rho=float(rho.min()),
        min_internal_energy=float(eint.min()),
        min_specific_entropy=float(s.min()),
        mass=float(cell * rho.sum()),
        momentum1=float(cell * m1.sum()),
        momentum2=float(cell * m2.sum()),
        energy=float(cell * E.sum()),
        total_entropy=float(cell * S.sum()),
        max_rho=float(rho.max()),
        max_cell_energy=float(E.max()),
        rho_norm_gamma=float((cell * rho_pow.sum()) ** (1.0 / gas.gamma)),
        entropy_norm_gamma=float((cell * (np.abs(S) ** gas.gamma).sum()) ** (1.0 / gas.gamma)),
        momentum_norm=float((cell * (mnorm ** q).sum()) ** (1.0 / q)),
        retries=retries,
    )


def run(initial: Field, cfg: SchemeConfig, gas: GasParams,
        observers=()) -> RunRecord:
    """Advance the initial data to cfg.t_end.

    dt is recomputed from the current state each step (last step clipped to
    land exactly on t_end).  Observers are invoked once per accepted step
    with a StepEvent.  Raises SolverFailure (carrying the last good state)
    if a step stays rejected after cfg.max_retries halvings.
    """
    _require_conservative(initial)
    wall0 = _time.perf_counter()
    record = RunRecord(gas=gas, config=cfg, grid=initial.grid, initial=initial)

    state = initial
    t = 0.0
    speed = max_wave_speed(state, gas)
    report = make_report(state, gas, 0, 0.0, 0.0, speed)
    record.reports.append(report)

    s_min_high = report.min_specific_entropy
    total_S_prev = report.total_entropy
    total_E_prev = report.energy

    stepper = step_lax_friedrichs if cfg.scheme == "lf" else step_vfv
    index = 0
    while t < cfg.t_end and not np.isclose(t, cfg.t_end, rtol=0.0, atol=1e-14):
        dt = stable_dt(state, gas, cfg, speed)
        clipped = False
        if dt >= cfg.t_end - t:
            dt = cfg.t_end - t
            clipped = True

        accepted = None
        retries = 0
        for attempt in range(cfg.max_retries + 1):
            try:
                if cfg.scheme == "lf":
                    lam = speed if cfg.lf_global_lambda else 0.0
                    candidate = stepper(state, dt, gas, lam)
                else:
                    candidate = stepper(state, dt, gas, cfg)
            except StepRejected:
                dt *= 0.5
                clipped = False
                retries += 1
                continue
            cand_speed = _kernels.max_wave_speed(candidate.data, gas.gamma)
            cand_report = make_report(candidate, gas, index + 1,
                                      cfg.t_end if clipped else t + dt,
                                      dt, cand_speed, retries)
            if cand_report.min_specific_entropy < s_min_high - ENTROPY_MIN_SLACK:
                ok = False
            elif cand_report.total_entropy < total_S_prev \
                    - ENTROPY_TOTAL_SLACK * max(1.0, abs(total_S_prev)):
                ok = False
            elif cfg.scheme == "vfv" and cand_report.energy > total_E_prev \
                    + ENERGY_TOTAL_SLACK:
                ok = False
            else:
                ok = True
            if ok:
                accepted = (candidate, cand_report, cand_speed)
                break
            dt *= 0.5
            clipped = False
            retries += 1
        if accepted is None:
            record.final = state
            record.wall_seconds = _time.perf_counter() - wall0
            raise SolverFailure(
                f"step {index + 1} rejected after {cfg.max_retries} dt halvings "
                f"(t={t:.6g}, dt={dt:.3e})", state=state, t=t)

        prev = state
        state, report, speed = accepted
        t_prev = t
        t = cfg.t_end if clipped else t + dt
        index += 1
        record.reports.append(report)
        s_min_high = max(s_min_high, report.min_specific_entropy)
        total_S_prev = report.total_entropy
        total_E_prev = report.energy
        event = StepEvent(index=index, t_prev=t_prev, t_new=t, dt=dt,
                          prev=prev, new=state, report=report)
        for obs in observers:
            obs(event)

    record.final = state
    record.wall_seconds = _time.perf_counter() - wall0
    return record


def conserved_totals(state: Field) -> np.ndarray:
    """(mass, momentum1, momentum2, energy) integrals over the torus."""
    return integrate(state)
