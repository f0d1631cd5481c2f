import itertools
import math

import numpy as np
import pytest

from dweuler.eos import GasParams, PointState, internal_energy_density, pressure
from dweuler.errors import UsageError
from dweuler.grid import Field, Grid, l1_distance
from dweuler.kconv import (EnsembleSnapshot, cesaro, cesaro_cauchy_table,
                           defect_field, empirical_atoms, energy_defect,
                           reynolds_defect, trace_compatibility, wasserstein)
from conftest import random_state


def random_ensemble(gas, n=16, members=3, seed=0):
    states = [random_state(Grid(n), seed=seed + k) for k in range(members)]
    return EnsembleSnapshot.from_states(states, gas)


def two_atom_cell_ensemble(gas):
    """Single-cell-style ensemble from the two-atom worked example:
    (rho, m, S) = (1, (1,0), 0) and (1, (-1,0), 0)."""
    g = Grid(2)  # smallest legal grid; all cells identical
    fields = []
    for m1 in (1.0, -1.0):
        rho = np.ones((2, 2))
        m = np.zeros((2, 2, 2))
        m[:, :, 0] = m1
        # E chosen so that S = 0: p = rho^gamma = 1, E = kin + p/(g-1)
        E = 0.5 + 1.0 / (gas.gamma - 1.0) * np.ones((2, 2))
        fields.append(Field(g, np.stack([rho, m[:, :, 0], m[:, :, 1], E], axis=-1)))
    return EnsembleSnapshot.from_states(fields, gas)


class TestCesaro:
    def test_first_member_unchanged(self, gas):
        ens = random_ensemble(gas)
        rho, m, S = cesaro(ens, 1)
        assert np.array_equal(rho.data[:, :, 0], ens.rho[0])
        assert np.array_equal(m.data, ens.m[0])

    def test_identical_members_fixed_point(self, gas):
        f = random_state(Grid(16), seed=5)
        ens = EnsembleSnapshot.from_states([f, f.copy(), f.copy()], gas)
        for N in (1, 2, 3):
            rho, m, S = cesaro(ens, N)
            # mean of identical values is exact up to one rounding of /3
            assert np.allclose(rho.data[:, :, 0], ens.rho[0], rtol=1e-15, atol=0)

    def test_matches_direct_mean_oracle(self, gas):
        ens = random_ensemble(gas, members=3, seed=11)
        rho, m, S = cesaro(ens, 3)
        expected = (ens.rho[0] + ens.rho[1] + ens.rho[2]) / 3.0
        assert np.abs(rho.data[:, :, 0] - expected).max() <= 1e-15

    def test_out_of_range_N(self, gas):
        ens = random_ensemble(gas)
        with pytest.raises(UsageError):
            cesaro(ens, 0)
        with pytest.raises(UsageError):
            cesaro(ens, 4)

    def test_restricts_to_coarsest(self, gas):
        states = [random_state(Grid(n), seed=n) for n in (16, 32, 64)]
        ens = EnsembleSnapshot.from_states(states, gas)
        assert ens.grid.n_x == 16


class TestDefects:
    def test_identical_members_zero_defects(self, gas):
        f = random_state(Grid(16), seed=6)
        ens = EnsembleSnapshot.from_states([f, f.copy(), f.copy()], gas)
        R = reynolds_defect(ens, 3, gas)
        E = energy_defect(ens, 3, gas)
        assert np.abs(R.data).max() <= 1e-14
        assert np.abs(E.data).max() <= 1e-13

    def test_two_atom_worked_example(self, gas):
        """Hand-rolled oracle for the symmetric two-member cell."""
        ens = two_atom_cell_ensemble(gas)
        R = reynolds_defect(ens, 2, gas).data[0, 0]
        E = energy_defect(ens, 2, gas).data[0, 0, 0]
        # oracle: members share rho=1, S=0 -> p=1, rho*e = c_v
        # avg flux = [[m^2/rho + p, 0], [0, p]] = [[2, 0], [0, 1]]
        # cesaro state: rho=1, m=0, S=0 -> flux [[1, 0], [0, 1]]
        assert R[0] == pytest.approx(1.0, abs=1e-14)   # R11
        assert R[1] == pytest.approx(0.0, abs=1e-14)   # R12
        assert R[2] == pytest.approx(0.0, abs=1e-14)   # R22
        # energies: avg(0.5 + c_v) - (0 + c_v) = 0.5
        assert E == pytest.approx(0.5, abs=1e-14)
        assert E > 0

    def test_jensen_nonnegativity_random(self, gas):
        for seed in (0, 1, 2):
            ens = random_ensemble(gas, members=4, seed=10 * seed)
            for N in (2, 3, 4):
                d = defect_field(ens, N, gas)
                assert d.Edef.data.min() >= -1e-12
                assert d.lambda2.data.min() >= -1e-10

    def test_eigenvalue_identities(self, gas):
        ens = random_ensemble(gas, members=3, seed=21)
        d = defect_field(ens, 3, gas)
        r11 = d.R.data[:, :, 0]
        r12 = d.R.data[:, :, 1]
        r22 = d.R.data[:, :, 2]
        lam1 = d.lambda1.data[:, :, 0]
        lam2 = d.lambda2.data[:, :, 0]
        assert np.abs((lam1 + lam2) - (r11 + r22)).max() <= 1e-12
        det = r11 * r22 - r12 * r12
        assert np.abs(lam1 * lam2 - det).max() <= 1e-12
        assert np.all(lam1 >= lam2)

    def test_defect_as_field_layout(self, gas):
        ens = random_ensemble(gas, members=3, seed=31)
        d = defect_field(ens, 2, gas)
        packed = d.as_field()
        assert packed.components == 6
        assert np.array_equal(packed.data[:, :, 0], d.R.data[:, :, 0])
        assert np.array_equal(packed.data[:, :, 3], d.Edef.data[:, :, 0])
        assert np.array_equal(packed.data[:, :, 5], d.lambda2.data[:, :, 0])


class TestTraceCompatibility:
    def test_zero_defects_pass(self, gas):
        f = random_state(Grid(16), seed=7)
        ens = EnsembleSnapshot.from_states([f, f.copy()], gas)
        rep = trace_compatibility(defect_field(ens, 2, gas), gas)
        assert rep.bracket_ok
        assert rep.identity_max_abs <= 1e-12

    def test_exact_identity_random(self, gas):
        for seed in (1, 5, 9):
            ens = random_ensemble(gas, members=3, seed=seed)
            rep = trace_compatibility(defect_field(ens, 3, gas), gas)
            assert rep.identity_max_abs <= 1e-12
            assert rep.bracket_ok
            assert rep.kinetic_min >= -1e-12
            assert rep.internal_min >= -1e-12

    def test_gamma_two_collapses_bracket(self):
        gas = GasParams(2.0)
        ens = random_ensemble(gas, members=3, seed=13)
        d = defect_field(ens, 3, gas)
        tr = d.R.data[:, :, 0] + d.R.data[:, :, 2]
        assert np.abs(tr - 2.0 * d.Edef.data[:, :, 0]).max() <= 1e-12

    def test_worked_example_bracket_boundary(self, gas):
        # two-atom example: I = 0, K = 0.5 -> trace R = 2 Edef exactly
        ens = two_atom_cell_ensemble(gas)
        d = defect_field(ens, 2, gas)
        rep = trace_compatibility(d, gas)
        assert rep.bracket_ok
        tr = d.R.data[0, 0, 0] + d.R.data[0, 0, 2]
        assert tr == pytest.approx(2.0 * d.Edef.data[0, 0, 0], abs=1e-14)


class TestWasserstein:
    def test_identical_lists_zero(self):
        atoms = np.array([[1.0, 0.2, -0.1, 0.5], [2.0, 0.0, 0.0, 1.0]])
        assert wasserstein(atoms, atoms, 1.0) == 0.0

    def test_single_atoms_euclidean(self):
        a = np.array([[1.0, 0.0, 0.0, 0.0]])
        b = np.array([[2.0, 1.0, 0.0, 0.0]])
        for r in (1.0, 2.0, 3.0):
            assert wasserstein(a, b, r) == pytest.approx(math.sqrt(2.0), rel=1e-13)

    def test_matches_permutation_bruteforce(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            a = rng.standard_normal((3, 4))
            b = rng.standard_normal((3, 4))
            got = wasserstein(a, b, 1.0)
            dist = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
            best = min(
                sum(dist[i, p[i]] for i in range(3)) / 3.0
                for p in itertools.permutations(range(3)))
            assert got == pytest.approx(best, abs=1e-12)

    def test_uneven_atom_counts(self):
        # 1 atom vs 2 atoms: W1 = mean distance to the single atom
        a = np.zeros((1, 4))
        b = np.array([[1.0, 0, 0, 0], [-1.0, 0, 0, 0]])
        assert wasserstein(a, b, 1.0) == pytest.approx(1.0, rel=1e-13)

    def test_metric_axioms(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            na, nb, nc = rng.integers(1, 5, 3)
            a = rng.standard_normal((na, 4))
            b = rng.standard_normal((nb, 4))
            c = rng.standard_normal((nc, 4))
            dab = wasserstein(a, b, 1.0)
            dba = wasserstein(b, a, 1.0)
            assert dab == pytest.approx(dba, abs=1e-12)
            assert wasserstein(a, a, 1.0) <= 1e-12
            dac = wasserstein(a, c, 1.0)
            dbc = wasserstein(b, c, 1.0)
            assert dac <= dab + dbc + 1e-12

    def test_atom_cap(self):
        big = np.zeros((9, 4))
        with pytest.raises(UsageError):
            wasserstein(big, big, 1.0)


class TestEmpiricalMeasure:
    def test_first_moments_match_cesaro_exactly(self, gas):
        ens = random_ensemble(gas, members=3, seed=17)
        atoms = empirical_atoms(ens, 3)
        rho_c, m_c, S_c = cesaro(ens, 3)
        assert np.array_equal(atoms[:, :, :, 0].mean(axis=2), rho_c.data[:, :, 0])
        assert np.array_equal(atoms[:, :, :, 1].mean(axis=2), m_c.data[:, :, 0])
        assert np.array_equal(atoms[:, :, :, 3].mean(axis=2), S_c.data[:, :, 0])


class TestCauchyTable:
    def test_identical_members_all_zero(self, gas):
        f = random_state(Grid(8), seed=23)
        ens = EnsembleSnapshot.from_states([f, f.copy(), f.copy()], gas)
        rows = cesaro_cauchy_table(ens, gas)
        for row in rows:
            for key in ("rho", "m", "S", "E", "R", "Edef", "W1"):
                assert row[key] <= 1e-13, (key, row)

    def test_matches_pairwise_recompute(self, gas):
        ens = random_ensemble(gas, n=8, members=3, seed=29)
        rows = cesaro_cauchy_table(ens, gas)
        # independent recompute of the rho column
        for row in rows:
            N = row["N"]
            a = ens.rho[:N].mean(axis=0)
            b = ens.rho[:N + 1].mean(axis=0)
            expected = np.abs(a - b).sum() / ens.grid.n_x ** 2
            assert row["rho"] == pytest.approx(expected, rel=1e-12, abs=1e-15)

    def test_needs_three_members(self, gas):
        f = random_state(Grid(8), seed=31)
        ens = EnsembleSnapshot.from_states([f, f.copy()], gas)
        with pytest.raises(UsageError):
            cesaro_cauchy_table(ens, gas)
