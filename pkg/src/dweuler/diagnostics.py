"""Verification of the consistent-approximation conditions.

Weak-form residuals test the numerical solution against a fixed basis of
separable space-time test functions

    phi(t, x) = psi(t) * g1(x1) * g2(x2),   psi(t) = (1 - t/T)^2,

with g a tensor trigonometric factor (constant, cos(2 pi k xi) or
sin(2 pi k xi), wave vectors |k| <= 3).  psi vanishes at T, so phi is an
admissible compactly-supported-in-time test function; spatial derivatives
are evaluated analytically.  Space is integrated with the cell-average
midpoint rule, time with the midpoint rule per accepted step using the
averaged state (second order in dt).

The entropy form requires nonnegative test functions; each trigonometric
mode is therefore paired with its nonnegative companion 1 + g (and the
constant mode used as is); for those the finalized residual is a signed
entropy-production functional that must be >= -(quadrature tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eos import GasParams, entropy_from_conservative
from .errors import UsageError
from .grid import Field, Grid, l1_distance
from .solver import RunRecord, StepEvent

__all__ = [
    "TestFunction",
    "ConsistencyAccumulator",
    "ConsistencyResult",
    "energy_residual",
    "stability_report",
    "StabilityReport",
    "refinement_errors",
]

_FLAVORS = ("const", "cos", "sin")


@dataclass(frozen=True)
class TestFunction:
    """One separable basis mode; evaluation helpers for tests and docs."""

    k: tuple
    flavor: tuple
    T: float

    def _axis(self, x, axis):
        k, fl = self.k[axis], self.flavor[axis]
        if fl == "const":
            return np.ones_like(x)
        w = 2.0 * np.pi * k
        return np.cos(w * x) if fl == "cos" else np.sin(w * x)

    def _axis_deriv(self, x, axis):
        k, fl = self.k[axis], self.flavor[axis]
        if fl == "const":
            return np.zeros_like(x)
        w = 2.0 * np.pi * k
        return -w * np.sin(w * x) if fl == "cos" else w * np.cos(w * x)

    def psi(self, t):
        return (1.0 - t / self.T) ** 2

    def dpsi(self, t):
        return -2.0 * (1.0 - t / self.T) / self.T

    def value(self, t, x1, x2):
        return self.psi(t) * self._axis(x1, 0) * self._axis(x2, 1)

    def grad(self, t, x1, x2):
        g1 = self._axis(x1, 0) * self._axis_deriv(x2, 1)
        d1 = self._axis_deriv(x1, 0) * self._axis(x2, 1)
        return self.psi(t) * d1, self.psi(t) * g1

    def dt(self, t, x1, x2):
        return self.dpsi(t) * self._axis(x1, 0) * self._axis(x2, 1)


def _axis_factors(k_max):
    """Axis factor table: index 0 is the constant, then cos/sin per k."""
    factors = [(0, "const")]
    for k in range(1, k_max + 1):
        factors.append((k, "cos"))
        factors.append((k, "sin"))
    return factors


class ConsistencyAccumulator:
    """Online accumulation of the continuity/momentum/entropy weak forms.

    Feed the initial state via start(), then every accepted StepEvent in
    time order; finalize() returns the per-mode residuals.  Spatial
    integrals against all basis factors are obtained for each needed field
    F with two small matrix products A (F A^T), A holding the axis factor
    values at cell centers.
    """

    def __init__(self, grid: Grid, gas: GasParams, t_final: float, k_max: int = 3):
        if t_final <= 0.0:
            raise UsageError("t_final must be positive")
        self.grid = grid
        self.gas = gas
        self.T = t_final
        self.k_max = k_max
        self.factors = _axis_factors(k_max)
        x = grid.centers()
        rows = []
        for k, fl in self.factors:
            if fl == "const":
                rows.append(np.ones_like(x))
            elif fl == "cos":
                rows.append(np.cos(2.0 * np.pi * k * x))
            else:
                rows.append(np.sin(2.0 * np.pi * k * x))
        self._A = np.array(rows)  # (n_factors, n_x)
        # derivative of factor r is coeff[r] times factor partner[r]
        nf = len(self.factors)
        self._dpartner = np.zeros(nf, dtype=int)
        self._dcoeff = np.zeros(nf)
        for r, (k, fl) in enumerate(self.factors):
            if fl == "cos":
                self._dpartner[r] = r + 1
                self._dcoeff[r] = -2.0 * np.pi * k
            elif fl == "sin":
                self._dpartner[r] = r - 1
                self._dcoeff[r] = 2.0 * np.pi * k
        # modes: (i1, i2) factor-index pairs with |k|_2 <= k_max
        self.modes = [
            (i1, i2)
            for i1, (k1, _) in enumerate(self.factors)
            for i2, (k2, _) in enumerate(self.factors)
            if k1 * k1 + k2 * k2 <= k_max * k_max
        ]
        nm = len(self.modes)
        self._cont = np.zeros(nm)
        self._mom = np.zeros((2, nm))
        self._ent = np.zeros(nm)
        self._init_cont = None
        self._init_mom = None
        self._init_ent = None
        self._last_index = 0
        self._s0_l1 = None

    def mode_functions(self):
        """TestFunction metadata for each mode, in mode order."""
        out = []
        for i1, i2 in self.modes:
            k1, f1 = self.factors[i1]
            k2, f2 = self.factors[i2]
            out.append(TestFunction((k1, k2), (f1, f2), self.T))
        return out

    def spatial_integrals(self, field2d: np.ndarray) -> np.ndarray:
        """G[i2, i1] = integral of field * factor_i1(x1) * factor_i2(x2)."""
        h = self.grid.h
        return (h * h) * (self._A @ field2d.T @ self._A.T).T

    def _combo_integrals(self, U):
        rho = U[:, :, 0]
        m1 = U[:, :, 1]
        m2 = U[:, :, 2]
        E = U[:, :, 3]
        S = entropy_from_conservative(rho, U[:, :, 1:3], E, self.gas)
        p = (self.gas.gamma - 1.0) * (E - 0.5 * (m1 * m1 + m2 * m2) / rho)
        fields = {
            "rho": rho, "m1": m1, "m2": m2, "S": S, "p": p,
            "T11": m1 * m1 / rho, "T12": m1 * m2 / rho, "T22": m2 * m2 / rho,
            "q1": S * m1 / rho, "q2": S * m2 / rho,
        }
        return {name: self.spatial_integrals(arr) for name, arr in fields.items()}

    def start(self, initial: Field):
        """Record the initial-data boundary terms (psi(0) = 1)."""
        if self._init_cont is not None:
            raise UsageError("accumulator already started")
        G = self._combo_integrals(initial.data)
        nm = len(self.modes)
        self._init_cont = np.zeros(nm)
        self._init_mom = np.zeros((2, nm))
        self._init_ent = np.zeros(nm)
        for a, (i1, i2) in enumerate(self.modes):
            self._init_cont[a] = G["rho"][i2, i1]
            self._init_mom[0, a] = G["m1"][i2, i1]
            self._init_mom[1, a] = G["m2"][i2, i1]
            self._init_ent[a] = G["S"][i2, i1]
        self._s0_l1 = float(np.abs(integrate_like(initial, self.gas)))

    def on_step(self, event: StepEvent):
        """Midpoint-in-time contribution of one accepted step."""
        if self._init_cont is None:
            raise UsageError("call start(initial) before accumulating steps")
        if event.index != self._last_index + 1:
            raise UsageError(
                f"steps must arrive in order: got {event.index}, "
                f"expected {self._last_index + 1}")
        self._last_index = event.index
        U = 0.5 * (event.prev.data + event.new.data)
        t_mid = event.t_prev + 0.5 * event.dt
        psi = (1.0 - t_mid / self.T) ** 2
        dpsi = -2.0 * (1.0 - t_mid / self.T) / self.T
        G = self._combo_integrals(U)
        dt = event.dt
        dp = self._dpartner
        dc = self._dcoeff
        for a, (i1, i2) in enumerate(self.modes):
            c1, j1 = dc[i1], dp[i1]
            c2, j2 = dc[i2], dp[i2]
            grad1 = c1 * G["m1"][i2, j1] + c2 * G["m2"][j2, i1]
            self._cont[a] += dt * (dpsi * G["rho"][i2, i1] + psi * grad1)
            mom1 = c1 * G["T11"][i2, j1] + c2 * G["T12"][j2, i1] + c1 * G["p"][i2, j1]
            mom2 = c1 * G["T12"][i2, j1] + c2 * G["T22"][j2, i1] + c2 * G["p"][j2, i1]
            self._mom[0, a] += dt * (dpsi * G["m1"][i2, i1] + psi * mom1)
            self._mom[1, a] += dt * (dpsi * G["m2"][i2, i1] + psi * mom2)
            ent = c1 * G["q1"][i2, j1] + c2 * G["q2"][j2, i1]
            self._ent[a] += dt * (dpsi * G["S"][i2, i1] + psi * ent)

    def __call__(self, event: StepEvent):
        self.on_step(event)

    def finalize(self) -> "ConsistencyResult":
        if self._init_cont is None:
            raise UsageError("nothing accumulated")
        cont = self._cont + self._init_cont
        mom = self._mom + self._init_mom
        ent_raw = self._ent + self._init_ent
        # nonnegative companions 1 + g (constant mode used as is)
        k0 = self.modes.index((0, 0))
        entropy = np.empty_like(ent_raw)
        for a in range(len(self.modes)):
            if a == k0:
                entropy[a] = -ent_raw[k0]
            else:
                entropy[a] = -(ent_raw[k0] + ent_raw[a])
        return ConsistencyResult(
            modes=self.mode_functions(),
            continuity=cont,
            momentum=mom,
            entropy=entropy,
            entropy_tolerance=1e-6 * (self._s0_l1 if self._s0_l1 else 1.0),
        )


def integrate_like(field: Field, gas: GasParams) -> float:
    """L1 norm of the entropy of a conservative field (tolerance scale)."""
    U = field.data
    S = entropy_from_conservative(U[:, :, 0], U[:, :, 1:3], U[:, :, 3], gas)
    h = field.grid.h
    return float((h * h) * np.abs(S).sum())


@dataclass
class ConsistencyResult:
    """Finalized residuals, one entry per basis mode.

    continuity/momentum residuals are signed but meaningful in magnitude;
    the entropy entries are production functionals against nonnegative
    test functions and should be >= -entropy_tolerance.
    """

    modes: list
    continuity: np.ndarray
    momentum: np.ndarray
    entropy: np.ndarray
    entropy_tolerance: float

    def rows(self):
        """Long-form (form, k1, k2, flavor1, flavor2, residual) rows."""
        out = []
        for a, tf in enumerate(self.modes):
            meta = (tf.k[0], tf.k[1], tf.flavor[0], tf.flavor[1])
            out.append(("continuity", *meta, self.continuity[a]))
            out.append(("momentum1", *meta, self.momentum[0, a]))
            out.append(("momentum2", *meta, self.momentum[1, a]))
            out.append(("entropy", *meta, self.entropy[a]))
        return out

    def by_wave_vector(self):
        """Per-mode residual magnitudes keyed by wave vector.

        The cos/sin factor combinations of one wave vector are phases of
        the same spatial mode, so the mode residual is their l2 magnitude;
        individual phases can sit at sign crossings of the functional and
        carry no decay information on their own.  Returns
        {k: {"continuity": m, "momentum1": m, "momentum2": m, "entropy": m}}.
        """
        out = {}
        for a, tf in enumerate(self.modes):
            slot = out.setdefault(tf.k, {"continuity": 0.0, "momentum1": 0.0,
                                         "momentum2": 0.0, "entropy": 0.0})
            slot["continuity"] += float(self.continuity[a]) ** 2
            slot["momentum1"] += float(self.momentum[0, a]) ** 2
            slot["momentum2"] += float(self.momentum[1, a]) ** 2
            slot["entropy"] += float(self.entropy[a]) ** 2
        for slot in out.values():
            for key in slot:
                slot[key] = slot[key] ** 0.5
        return out


def energy_residual(record: RunRecord) -> float:
    """Positive part of the worst total-energy excess over the run."""
    energy = record.series("energy")
    return float(max(0.0, (energy - energy[0]).max()))


@dataclass(frozen=True)
class StabilityReport:
    """Sup-in-time norms and bound monitors of a finished run."""

    sup_rho_norm_gamma: float
    sup_entropy_norm_gamma: float
    sup_momentum_norm: float
    min_specific_entropy: float
    min_rho: float
    max_cell_energy: float
    s_lower: float
    entropy_bound_ok: bool


def stability_report(record: RunRecord, s_lower: float | None = None) -> StabilityReport:
    """Summarize the uniform bounds; flags S >= rho * s_lower violations.

    s_lower defaults to the minimum specific entropy of the initial data.
    """
    if not record.reports:
        raise UsageError("record holds no reports")
    if s_lower is None:
        s_lower = record.reports[0].min_specific_entropy
    min_s = float(record.series("min_specific_entropy").min())
    return StabilityReport(
        sup_rho_norm_gamma=float(record.series("rho_norm_gamma").max()),
        sup_entropy_norm_gamma=float(record.series("entropy_norm_gamma").max()),
        sup_momentum_norm=float(record.series("momentum_norm").max()),
        min_specific_entropy=min_s,
        min_rho=float(record.series("min_rho").min()),
        max_cell_energy=float(record.series("max_cell_energy").max()),
        s_lower=s_lower,
        entropy_bound_ok=bool(min_s >= s_lower - 1e-10),
    )


def refinement_errors(snapshots, gas: GasParams):
    """L1 distances between solutions at consecutive resolutions.

    snapshots: list of (label, conservative Field) ordered coarse to fine.
    Returns one row per consecutive pair with distances for rho, m
    (both components), S (computed on each snapshot's own grid) and E.
    """
    if len(snapshots) < 2:
        raise UsageError("need at least two snapshots")
    rows = []
    for (la, fa), (lb, fb) in zip(snapshots[:-1], snapshots[1:]):
        Ua, Ub = fa.data, fb.data
        Sa = entropy_from_conservative(Ua[:, :, 0], Ua[:, :, 1:3], Ua[:, :, 3], gas)
        Sb = entropy_from_conservative(Ub[:, :, 0], Ub[:, :, 1:3], Ub[:, :, 3], gas)
        rows.append({
            "pair": (la, lb),
            "rho": l1_distance(fa.component(0), fb.component(0)),
            "m": l1_distance(fa.component([1, 2]), fb.component([1, 2])),
            "S": l1_distance(Field(fa.grid, Sa, check=False),
                             Field(fb.grid, Sb, check=False)),
            "E": l1_distance(fa.component(3), fb.component(3)),
        })
    return rows
