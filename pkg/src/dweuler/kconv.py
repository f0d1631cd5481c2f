"""Averaged-refinement post-processing.

Given final-time solutions on a ladder of nested meshes, this module forms
the Cesaro averages over the first N members, the per-cell Reynolds-stress
and energy defect fields

    R_N = (1/N) sum_n [ m_n (x) m_n / rho_n + p(rho_n, S_n) I ]
          - [ m~ (x) m~ / rho~ + p(rho~, S~) I ]
    E_N = (1/N) sum_n [ |m_n|^2/(2 rho_n) + rho_n e(rho_n, S_n) ]
          - [ |m~|^2/(2 rho~) + rho~ e(rho~, S~) ]

(~ marking Cesaro averages), their eigenvalue fields, the kinetic/internal
split behind the trace-compatibility inequality, and exact small-scale
Wasserstein distances between per-cell empirical measures.

All members are restricted to the coarsest participating grid first; the
per-member entropy is computed from the restricted conservative state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .eos import GasParams, entropy_from_conservative, internal_energy_density, pressure, PointState
from .errors import DomainError, UsageError
from .grid import Field, Grid, integrate, l1_distance, restrict

__all__ = [
    "EnsembleSnapshot",
    "DefectField",
    "cesaro",
    "reynolds_defect",
    "energy_defect",
    "defect_field",
    "trace_compatibility",
    "TraceReport",
    "wasserstein",
    "empirical_atoms",
    "cesaro_cauchy_table",
]

WASSERSTEIN_MAX_ATOMS = 8


@dataclass
class EnsembleSnapshot:
    """Stacked ensemble members on the common coarsest grid.

    Arrays are member-major: rho (N, n, n), m (N, n, n, 2), S (N, n, n),
    E (N, n, n).  E is the restricted total energy; S is the entropy of the
    restricted conservative state, so E = |m|^2/(2 rho) + rho e(rho, S)
    holds exactly per member.
    """

    grid: Grid
    rho: np.ndarray
    m: np.ndarray
    S: np.ndarray
    E: np.ndarray
    labels: tuple

    @property
    def size(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def from_states(cls, states, gas: GasParams, labels=None) -> "EnsembleSnapshot":
        """Build from conservative Fields on nested grids (any order)."""
        if not states:
            raise UsageError("empty ensemble")
        common = Grid(min(f.grid.n_x for f in states))
        rho, m, S, E = [], [], [], []
        for f in states:
            r = restrict(f, common)
            U = r.data
            if not np.all(U[:, :, 0] > 0.0):
                raise DomainError("ensemble member has non-positive density")
            rho.append(U[:, :, 0])
            m.append(U[:, :, 1:3])
            E.append(U[:, :, 3])
            S.append(entropy_from_conservative(U[:, :, 0], U[:, :, 1:3],
                                               U[:, :, 3], gas))
        return cls(grid=common, rho=np.array(rho), m=np.array(m),
                   S=np.array(S), E=np.array(E),
                   labels=tuple(labels) if labels is not None
                   else tuple(range(1, len(states) + 1)))


def _check_N(ensemble: EnsembleSnapshot, N: int):
    if not 1 <= N <= ensemble.size:
        raise UsageError(f"N={N} outside 1..{ensemble.size}")


def cesaro(ensemble: EnsembleSnapshot, N: int):
    """Cesaro averages over the first N members: (rho~, m~, S~) Fields."""
    _check_N(ensemble, N)
    g = ensemble.grid
    rho = ensemble.rho[:N].mean(axis=0)
    m = ensemble.m[:N].mean(axis=0)
    S = ensemble.S[:N].mean(axis=0)
    return (Field(g, rho, check=False), Field(g, m, check=False),
            Field(g, S, check=False))


def _flux_terms(rho, m, S, gas):
    """Per-cell momentum-flux matrix entries and total energy."""
    p = pressure(PointState(rho, m, S), gas)
    t11 = m[..., 0] * m[..., 0] / rho + p
    t12 = m[..., 0] * m[..., 1] / rho
    t22 = m[..., 1] * m[..., 1] / rho + p
    kin = 0.5 * (m[..., 0] ** 2 + m[..., 1] ** 2) / rho
    eint = internal_energy_density(rho, S, gas)
    return t11, t12, t22, kin, eint


def reynolds_defect(ensemble: EnsembleSnapshot, N: int, gas: GasParams) -> Field:
    """Symmetric defect matrix field, components (R11, R12, R22)."""
    _check_N(ensemble, N)
    t11, t12, t22, _, _ = _flux_terms(ensemble.rho[:N], ensemble.m[:N],
                                      ensemble.S[:N], gas)
    rho_c, m_c, S_c = (f.data for f in cesaro(ensemble, N))
    c11, c12, c22, _, _ = _flux_terms(rho_c[:, :, 0], m_c, S_c[:, :, 0], gas)
    data = np.stack([t11.mean(axis=0) - c11,
                     t12.mean(axis=0) - c12,
                     t22.mean(axis=0) - c22], axis=-1)
    return Field(ensemble.grid, data, check=False)


def energy_defect(ensemble: EnsembleSnapshot, N: int, gas: GasParams) -> Field:
    """Scalar energy-defect field (nonnegative up to rounding by Jensen)."""
    _check_N(ensemble, N)
    _, _, _, kin, eint = _flux_terms(ensemble.rho[:N], ensemble.m[:N],
                                     ensemble.S[:N], gas)
    rho_c, m_c, S_c = (f.data for f in cesaro(ensemble, N))
    _, _, _, kin_c, eint_c = _flux_terms(rho_c[:, :, 0], m_c, S_c[:, :, 0], gas)
    data = (kin + eint).mean(axis=0) - (kin_c + eint_c)
    return Field(ensemble.grid, data, check=False)


@dataclass
class DefectField:
    """Defect fields at one Cesaro level N.

    R holds (R11, R12, R22); lambda1 >= lambda2 are the eigenvalue fields.
    kinetic and internal are the independently computed defect parts with
    trace R = 2 K + d (gamma - 1) I and Edef = K + I (d = 2).
    """

    N: int
    R: Field
    Edef: Field
    lambda1: Field
    lambda2: Field
    kinetic: Field
    internal: Field

    def as_field(self) -> Field:
        """Six-component field (R11, R12, R22, Edef, lambda1, lambda2)."""
        data = np.concatenate([self.R.data, self.Edef.data,
                               self.lambda1.data, self.lambda2.data], axis=-1)
        return Field(self.R.grid, data, check=False)


def defect_field(ensemble: EnsembleSnapshot, N: int, gas: GasParams) -> DefectField:
    """Assemble all defect quantities for the first N members."""
    _check_N(ensemble, N)
    R = reynolds_defect(ensemble, N, gas)
    Edef = energy_defect(ensemble, N, gas)
    r11, r12, r22 = R.data[:, :, 0], R.data[:, :, 1], R.data[:, :, 2]
    # closed-form symmetric 2x2 eigenvalues
    tr = r11 + r22
    disc = np.sqrt((r11 - r22) ** 2 + 4.0 * r12 * r12)
    lam1 = 0.5 * (tr + disc)
    lam2 = 0.5 * (tr - disc)
    # independent kinetic/internal split
    _, _, _, kin, eint = _flux_terms(ensemble.rho[:N], ensemble.m[:N],
                                     ensemble.S[:N], gas)
    rho_c, m_c, S_c = (f.data for f in cesaro(ensemble, N))
    _, _, _, kin_c, eint_c = _flux_terms(rho_c[:, :, 0], m_c, S_c[:, :, 0], gas)
    g = ensemble.grid
    return DefectField(
        N=N, R=R, Edef=Edef,
        lambda1=Field(g, lam1, check=False),
        lambda2=Field(g, lam2, check=False),
        kinetic=Field(g, kin.mean(axis=0) - kin_c, check=False),
        internal=Field(g, eint.mean(axis=0) - eint_c, check=False),
    )


@dataclass(frozen=True)
class TraceReport:
    """Per-level compatibility check between trace R and the energy defect."""

    N: int
    identity_max_abs: float      # max |trace R - 2K - d(gamma-1) I|
    bracket_ok: bool             # min{2,d(g-1)} E <= trace R <= max{...} E
    bracket_max_violation: float
    kinetic_min: float
    internal_min: float
    edef_min: float
    min_eigenvalue: float


def trace_compatibility(defects: DefectField, gas: GasParams, d: int = 2) -> TraceReport:
    """Verify the defect-compatibility inequalities and the exact split."""
    tr = defects.R.data[:, :, 0] + defects.R.data[:, :, 2]
    K = defects.kinetic.data[:, :, 0]
    I = defects.internal.data[:, :, 0]
    E = defects.Edef.data[:, :, 0]
    dg = d * (gas.gamma - 1.0)
    identity = tr - (2.0 * K + dg * I)
    lo, hi = min(2.0, dg), max(2.0, dg)
    tol = 1e-10 * (1.0 + np.abs(tr))
    lower_viol = np.maximum(lo * E - tr, 0.0)
    upper_viol = np.maximum(tr - hi * E, 0.0)
    worst = float(np.maximum(lower_viol, upper_viol).max())
    ok = bool(np.all(lower_viol <= tol) and np.all(upper_viol <= tol))
    return TraceReport(
        N=defects.N,
        identity_max_abs=float(np.abs(identity).max()),
        bracket_ok=ok,
        bracket_max_violation=worst,
        kinetic_min=float(K.min()),
        internal_min=float(I.min()),
        edef_min=float(E.min()),
        min_eigenvalue=float(defects.lambda2.data.min()),
    )


def empirical_atoms(ensemble: EnsembleSnapshot, N: int) -> np.ndarray:
    """Per-cell equal-weight atoms (rho, m1, m2, S); shape (n, n, N, 4)."""
    _check_N(ensemble, N)
    atoms = np.stack([ensemble.rho[:N], ensemble.m[:N, :, :, 0],
                      ensemble.m[:N, :, :, 1], ensemble.S[:N]], axis=-1)
    return np.moveaxis(atoms, 0, 2)


def wasserstein(atoms_a: np.ndarray, atoms_b: np.ndarray, r: float = 1.0) -> float:
    """Exact order-r Wasserstein distance between uniform atom lists.

    Atoms live in R^4 = (rho, m1, m2, S) with Euclidean ground distance.
    Each list is replicated to lcm(N_A, N_B) equal-weight copies and the
    resulting assignment problem is solved exactly; lists are capped at
    WASSERSTEIN_MAX_ATOMS atoms (desk scale by design).
    """
    a = np.atleast_2d(np.asarray(atoms_a, dtype=float))
    b = np.atleast_2d(np.asarray(atoms_b, dtype=float))
    na, nb = a.shape[0], b.shape[0]
    if na > WASSERSTEIN_MAX_ATOMS or nb > WASSERSTEIN_MAX_ATOMS:
        raise UsageError(
            f"atom lists capped at {WASSERSTEIN_MAX_ATOMS} (got {na}, {nb})")
    if a.shape[1] != b.shape[1]:
        raise UsageError("atom dimensions differ")
    if r < 1.0:
        raise UsageError("order r must be >= 1")
    L = math.lcm(na, nb)
    ar = np.repeat(a, L // na, axis=0)
    br = np.repeat(b, L // nb, axis=0)
    diff = ar[:, None, :] - br[None, :, :]
    cost = np.sqrt(np.sum(diff * diff, axis=-1)) ** r
    rows, cols = linear_sum_assignment(cost)
    return float((cost[rows, cols].sum() / L) ** (1.0 / r))


def _mean_w1_consecutive(ensemble: EnsembleSnapshot, N: int) -> float:
    """Cell-averaged W1 between the N-atom and (N+1)-atom measures."""
    atoms = empirical_atoms(ensemble, N + 1)
    n = ensemble.grid.n_x
    total = 0.0
    for jj in range(n):
        for ii in range(n):
            total += wasserstein(atoms[jj, ii, :N], atoms[jj, ii, :N + 1], 1.0)
    return total / (n * n)


def cesaro_cauchy_table(ensemble: EnsembleSnapshot, gas: GasParams):
    """Distances between consecutive Cesaro levels N and N+1.

    One row per N = 1..size-1 with L1 distances for rho~, m~, S~, E~
    (E~ the Cesaro average of member energies), the defect fields R and
    Edef (R summing its three stored components), and the cell-averaged
    W1 distance between the consecutive empirical measures.
    """
    if ensemble.size < 3:
        raise UsageError("need at least 3 ensemble members")
    g = ensemble.grid
    rows = []
    prev = None
    for N in range(1, ensemble.size + 1):
        rho, m, S = cesaro(ensemble, N)
        E = Field(g, ensemble.E[:N].mean(axis=0), check=False)
        d = defect_field(ensemble, N, gas)
        cur = (rho, m, S, E, d)
        if prev is not None:
            rows.append({
                "N": N - 1,
                "rho": l1_distance(prev[0], rho),
                "m": l1_distance(prev[1], m),
                "S": l1_distance(prev[2], S),
                "E": l1_distance(prev[3], E),
                "R": l1_distance(prev[4].R, d.R),
                "Edef": l1_distance(prev[4].Edef, d.Edef),
                "W1": _mean_w1_consecutive(ensemble, N - 1),
            })
        prev = cur
    return rows
