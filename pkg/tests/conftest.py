import numpy as np
import pytest

from dweuler.eos import GasParams
from dweuler.grid import Field, Grid


@pytest.fixture
def gas():
    return GasParams(1.4)


def random_state(grid: Grid, seed=0, rho_range=(0.8, 2.0), u_scale=0.4,
                 p_range=(0.8, 2.0)) -> Field:
    """Smooth-ish random positive conservative state for kernel tests."""
    rng = np.random.default_rng(seed)
    n = grid.n_x
    rho = rng.uniform(*rho_range, (n, n))
    u = u_scale * rng.standard_normal((n, n, 2))
    p = rng.uniform(*p_range, (n, n))
    m = rho[:, :, None] * u
    E = p / 0.4 + 0.5 * (m[:, :, 0] ** 2 + m[:, :, 1] ** 2) / rho
    return Field(grid, np.stack([rho, m[:, :, 0], m[:, :, 1], E], axis=-1))
