import numpy as np
import pytest

from dweuler.eos import entropy_from_conservative
from dweuler.grid import Grid, integrate
from dweuler.ic import (KHConfig, VortexConfig, interface_profiles,
                        isentropic_vortex, kelvin_helmholtz,
                        sample_interface_coeffs, uniform_draws,
                        vortex_reference)


class TestCoefficients:
    def test_amplitudes_normalized(self):
        for seed in (0, 1, 42, 2**63):
            a, b = sample_interface_coeffs(seed, 10)
            assert abs(a[0].sum() - 1.0) <= 1e-15
            assert abs(a[1].sum() - 1.0) <= 1e-15
            assert np.all((a >= 0.0) & (a <= 1.0))

    def test_phases_in_range(self):
        for seed in (3, 99):
            _, b = sample_interface_coeffs(seed, 10)
            assert np.all((b >= -np.pi) & (b <= np.pi))

    def test_deterministic_per_seed(self):
        a1, b1 = sample_interface_coeffs(42, 10)
        a2, b2 = sample_interface_coeffs(42, 10)
        assert np.array_equal(a1, a2) and np.array_equal(b1, b2)
        a3, b3 = sample_interface_coeffs(43, 10)
        assert not np.array_equal(a1, a3)

    def test_uniform_draws_in_unit_interval(self):
        u = uniform_draws(123, 1000)
        assert np.all((u >= 0.0) & (u < 1.0))
        # counter-based: shifting the start reproduces the overlap
        tail = uniform_draws(123, 10, start=5)
        assert np.array_equal(tail, u[5:15])


class TestInterfaces:
    def test_amplitude_bound_dense(self):
        cfg = KHConfig()
        x = np.linspace(0.0, 1.0, 4096, endpoint=False)
        i1, i2 = interface_profiles(cfg, x)
        assert np.abs(i1 - cfg.j1).max() <= cfg.eps * (1 + 1e-12)
        assert np.abs(i2 - cfg.j2).max() <= cfg.eps * (1 + 1e-12)


class TestKelvinHelmholtz:
    def test_flat_band_fraction(self, gas):
        cfg = KHConfig(eps=0.0)
        f = kelvin_helmholtz(cfg, Grid(64), gas)
        inner = np.isclose(f.data[:, :, 0], 2.0)
        assert inner.mean() == 0.5
        assert integrate(f)[0] == pytest.approx(1.5, abs=1e-14)

    def test_default_mass_band(self, gas):
        # inner band area is 0.5 +- (eps wiggle + one-cell rounding)
        f = kelvin_helmholtz(KHConfig(), Grid(64), gas)
        mass = integrate(f)[0]
        assert 1.5 - 2 * 0.01 <= mass <= 1.5 + 2 * 0.01

    def test_two_distinct_states(self, gas):
        f = kelvin_helmholtz(KHConfig(), Grid(128), gas)
        unique = np.unique(f.data.reshape(-1, 4), axis=0)
        assert unique.shape[0] == 2

    def test_bitwise_deterministic(self, gas):
        a = kelvin_helmholtz(KHConfig(seed=7), Grid(64), gas)
        b = kelvin_helmholtz(KHConfig(seed=7), Grid(64), gas)
        assert np.array_equal(a.data, b.data)

    def test_seed_changes_field(self, gas):
        a = kelvin_helmholtz(KHConfig(seed=7, eps=0.03), Grid(128), gas)
        b = kelvin_helmholtz(KHConfig(seed=8, eps=0.03), Grid(128), gas)
        assert not np.array_equal(a.data, b.data)


class TestVortex:
    def test_zero_strength_is_uniform(self, gas):
        f = isentropic_vortex(Grid(64), gas, strength=0.0)
        assert np.all(f.data == f.data[0, 0])

    def test_positive_density_pressure(self, gas):
        cfg = VortexConfig()
        f = isentropic_vortex(Grid(64), gas, cfg=cfg)
        rho = f.data[:, :, 0]
        chi = (gas.gamma - 1) * cfg.strength**2 * cfg.sigma**2 * cfg.rho_bg \
            / (2 * gas.gamma * cfg.p_bg)
        rho_min_exact = cfg.rho_bg * (1 - chi) ** (1 / (gas.gamma - 1))
        assert rho.min() >= rho_min_exact - 1e-12
        assert rho.min() > 0

    def test_isentropic(self, gas):
        f = isentropic_vortex(Grid(64), gas)
        U = f.data
        S = entropy_from_conservative(U[:, :, 0], U[:, :, 1:3], U[:, :, 3], gas)
        s = S / U[:, :, 0]
        assert np.ptp(s) <= 1e-12

    def test_boundary_deviation_negligible(self, gas):
        cfg = VortexConfig()
        f = isentropic_vortex(Grid(64), gas, cfg=cfg)
        # the row of cells nearest x2 = 0 is half a period from the center
        edge = f.data[0, :, :]
        bg = np.array([cfg.rho_bg, cfg.rho_bg * cfg.u_bg[0],
                       cfg.rho_bg * cfg.u_bg[1], 0.0])
        bg[3] = cfg.p_bg / (gas.gamma - 1) + 0.5 * (bg[1]**2 + bg[2]**2) / bg[0]
        assert np.abs(edge - bg).max() < 1e-12

    def test_reference_is_translation(self, gas):
        cfg = VortexConfig(u_bg=(1.0, 0.5))
        g = Grid(64)
        t = 0.3
        ref = vortex_reference(cfg, g, gas, t)
        # evaluating the t=0 profile at x - u_bg t must reproduce it
        shifted_cfg = VortexConfig(strength=cfg.strength, sigma=cfg.sigma,
                                   center=((cfg.center[0] + cfg.u_bg[0] * t),
                                           (cfg.center[1] + cfg.u_bg[1] * t)),
                                   rho_bg=cfg.rho_bg, u_bg=cfg.u_bg,
                                   p_bg=cfg.p_bg)
        direct = isentropic_vortex(g, gas, cfg=shifted_cfg)
        assert np.allclose(ref.data, direct.data, rtol=0, atol=1e-15)
