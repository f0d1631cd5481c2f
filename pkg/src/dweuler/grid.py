"""Uniform periodic Cartesian meshes on [0,1]^2 and cell-averaged fields.

Fields store cell averages in a (n_x, n_x, k) float64 array indexed
[x2_index, x1_index, component]: row-major over (x2, x1) with components
interleaved per cell.  Cell (j, i) is centered at
x1 = (i + 1/2) h, x2 = (j + 1/2) h with h = 1/n_x.

Cross-resolution comparisons restrict DOWN to the coarsest participating
grid by exact cell averaging (conservative on nested dyadic meshes).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, UsageError

__all__ = [
    "Grid",
    "Field",
    "restrict",
    "integrate",
    "l1_distance",
    "write_field",
    "read_field",
    "FIELD_MAGIC",
]

FIELD_MAGIC = b"DWFLD1"
_HEADER = struct.Struct("<6sIIdd")  # magic, n_x, components, time, gamma


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """n_x x n_x cells over the unit torus; n_x a power of two >= 2."""

    n_x: int

    def __post_init__(self):
        if self.n_x < 2 or not _is_power_of_two(self.n_x):
            raise UsageError(f"n_x must be a power of two >= 2, got {self.n_x}")

    @property
    def h(self) -> float:
        return 1.0 / self.n_x

    def centers(self) -> np.ndarray:
        """1D array of cell-center coordinates (same for both axes)."""
        return (np.arange(self.n_x) + 0.5) * self.h

    def center_mesh(self):
        """(X1, X2) arrays of shape (n_x, n_x) matching field indexing."""
        c = self.centers()
        x2, x1 = np.meshgrid(c, c, indexing="ij")
        return x1, x2


class Field:
    """Cell-averaged values on a Grid; data shape (n_x, n_x, k)."""

    __slots__ = ("grid", "data")

    def __init__(self, grid: Grid, data: np.ndarray, check: bool = True):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.shape[:2] != (grid.n_x, grid.n_x) or data.ndim != 3:
            raise UsageError(
                f"data shape {data.shape} does not match grid n_x={grid.n_x}")
        if check and not np.all(np.isfinite(data)):
            raise UsageError("field holds non-finite values")
        self.grid = grid
        self.data = np.ascontiguousarray(data)

    @property
    def components(self) -> int:
        return self.data.shape[2]

    @classmethod
    def full(cls, grid: Grid, values) -> "Field":
        values = np.atleast_1d(np.asarray(values, dtype=np.float64))
        data = np.broadcast_to(values, (grid.n_x, grid.n_x, values.size))
        return cls(grid, data.copy(), check=False)

    def component(self, idx) -> "Field":
        """A view-free field holding the selected component(s)."""
        sel = self.data[:, :, np.atleast_1d(idx)]
        return Field(self.grid, sel.copy(), check=False)

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy(), check=False)


def _halve(data: np.ndarray) -> np.ndarray:
    # Fixed association: ((a + b) + (c + d)) * 0.25.  Doubling by 2 is exact
    # in binary floating point, so repeated halving composes bit-exactly.
    a = data[0::2, 0::2]
    b = data[1::2, 0::2]
    c = data[0::2, 1::2]
    d = data[1::2, 1::2]
    return ((a + b) + (c + d)) * 0.25


def restrict(field: Field, coarse: Grid) -> Field:
    """Average a field down to a nested coarser grid (mean of children).

    Implemented as repeated factor-2 halving so that restricting through an
    intermediate grid is bitwise identical to restricting directly.
    """
    n_f, n_c = field.grid.n_x, coarse.n_x
    if n_f < n_c or n_f % n_c != 0 or not _is_power_of_two(n_f // n_c):
        raise UsageError(f"grids not nested: fine n_x={n_f}, coarse n_x={n_c}")
    data = field.data
    while data.shape[0] > n_c:
        data = _halve(data)
    return Field(coarse, data.copy() if data is field.data else data, check=False)


def integrate(field: Field) -> np.ndarray:
    """Exact midpoint quadrature of cell averages: h^2 * sum, per component."""
    h = field.grid.h
    return (h * h) * field.data.sum(axis=(0, 1))


def l1_distance(a: Field, b: Field) -> float:
    """L1(T^2) distance after restricting both fields to the coarser grid.

    Multi-component fields contribute the sum of per-component L1 norms.
    """
    if a.components != b.components:
        raise UsageError("fields have different component counts")
    n = min(a.grid.n_x, b.grid.n_x)
    common = Grid(n)
    ar = restrict(a, common) if a.grid.n_x != n else a
    br = restrict(b, common) if b.grid.n_x != n else b
    h = common.h
    return float((h * h) * np.abs(ar.data - br.data).sum())


def write_field(path, field: Field, time: float, gamma: float) -> None:
    """Dump a field in the DWFLD1 binary format (little-endian).

    Layout: magic "DWFLD1", u32 n_x, u32 components, f64 time, f64 gamma,
    then the float64 payload in (x2, x1, component) C order.
    """
    header = _HEADER.pack(FIELD_MAGIC, field.grid.n_x, field.components,
                          float(time), float(gamma))
    payload = np.ascontiguousarray(field.data, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_field(path):
    """Read a DWFLD1 file; returns (field, time, gamma)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n_x, comps, time, gamma = _HEADER.unpack_from(raw, 0)
    if magic != FIELD_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FIELD_MAGIC!r}")
    expected = _HEADER.size + 8 * n_x * n_x * comps
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload size mismatch (got {len(raw)} bytes, want {expected})")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n_x, n_x, comps)
    return Field(Grid(n_x), data.astype(np.float64), check=False), time, gamma
