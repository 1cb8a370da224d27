"""Uniform periodic grids and complex fields sampled on them.

The periodic box [-L/2, L/2) stands in for the real line; every field the
package works with decays exponentially, so wrap-around is invisible at the
default resolution (L = 80, N = 4096).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import GridMismatchError

DEFAULT_L = 80.0
DEFAULT_N = 4096


def _frozen(a, n: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128)
    if arr.shape != (n,):
        raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Grid:
    L: float = DEFAULT_L
    N: int = DEFAULT_N

    def __post_init__(self):
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L / 2 + self.h * np.arange(self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT order."""
        k = 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)
        k.flags.writeable = False
        return k


@dataclass(frozen=True, eq=False)
class GridField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.N, "values"))

    @classmethod
    def zeros(cls, grid: Grid) -> "GridField":
        return cls(grid, np.zeros(grid.N, dtype=complex))

    @classmethod
    def from_function(cls, grid: Grid, f) -> "GridField":
        return cls(grid, f(grid.x))

    def __add__(self, other: "GridField") -> "GridField":
        _check_same(self.grid, other.grid)
        return GridField(self.grid, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        _check_same(self.grid, other.grid)
        return GridField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "GridField":
        return GridField(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "GridField":
        return GridField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    """Two-component complex function of x (a Lax eigenvector or Jost column)."""

    grid: Grid
    comp1: np.ndarray
    comp2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "comp1", _frozen(self.comp1, self.grid.N, "comp1"))
        object.__setattr__(self, "comp2", _frozen(self.comp2, self.grid.N, "comp2"))

    def __add__(self, other: "VectorField") -> "VectorField":
        _check_same(self.grid, other.grid)
        return VectorField(self.grid, self.comp1 + other.comp1, self.comp2 + other.comp2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        _check_same(self.grid, other.grid)
        return VectorField(self.grid, self.comp1 - other.comp1, self.comp2 - other.comp2)

    def __mul__(self, c) -> "VectorField":
        return VectorField(self.grid, c * self.comp1, c * self.comp2)

    __rmul__ = __mul__

    def stacked(self) -> np.ndarray:
        return np.stack([self.comp1, self.comp2])


@dataclass(frozen=True, eq=False)
class MatrixField:
    """2x2 complex function of x, stored entrywise."""

    grid: Grid
    m11: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    m22: np.ndarray

    def __post_init__(self):
        for name in ("m11", "m12", "m21", "m22"):
            object.__setattr__(self, name, _frozen(getattr(self, name), self.grid.N, name))

    @classmethod
    def identity(cls, grid: Grid) -> "MatrixField":
        one, zero = np.ones(grid.N), np.zeros(grid.N)
        return cls(grid, one, zero, zero, one)

    def column(self, j: int) -> VectorField:
        if j == 1:
            return VectorField(self.grid, self.m11, self.m21)
        if j == 2:
            return VectorField(self.grid, self.m12, self.m22)
        raise ValueError("column index must be 1 or 2")

    def det(self) -> np.ndarray:
        return self.m11 * self.m22 - self.m12 * self.m21

    def as_array(self) -> np.ndarray:
        """Shape (2, 2, N) view of the entries."""
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])


def _check_same(g1: Grid, g2: Grid) -> None:
    if g1 != g2:
        raise GridMismatchError(f"grid mismatch: {g1} vs {g2}")


def l2_norm(f: GridField) -> float:
    return float(np.sqrt(f.grid.h * np.sum(np.abs(f.values) ** 2)))


def inner(f: GridField, g: GridField) -> complex:
    """Rectangle-rule approximation of the integral of f times conj(g)."""
    _check_same(f.grid, g.grid)
    return complex(f.grid.h * np.vdot(g.values, f.values))


def vector_inner(u: VectorField, v: VectorField) -> complex:
    _check_same(u.grid, v.grid)
    return complex(u.grid.h * (np.vdot(v.comp1, u.comp1) + np.vdot(v.comp2, u.comp2)))


def vector_norm(u: VectorField) -> float:
    return float(np.sqrt(vector_inner(u, u).real))


def ddx(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Fourier derivative of a raw sample array."""
    if order == 0:
        return np.asarray(values, dtype=complex)
    return np.fft.ifft((1j * grid.k) ** order * np.fft.fft(values))


def spectral_derivative(f: GridField, order: int = 1) -> GridField:
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    return GridField(f.grid, ddx(f.values, f.grid, order))


def shift_values(values: np.ndarray, grid: Grid, a: float) -> np.ndarray:
    """Samples of f(x + a) for periodic band-limited f."""
    if a == 0:
        return np.array(values, dtype=complex)
    return np.fft.ifft(np.exp(1j * grid.k * a) * np.fft.fft(values))


def translate_phase(f: GridField, a: float, b: float) -> GridField:
    """The gauge action f -> exp(ib) f(. + a), with an exact Fourier shift."""
    return GridField(f.grid, np.exp(1j * b) * shift_values(f.values, f.grid, a))


def _format_header(grid: Grid, t: float, extra: dict | None) -> str:
    head = f"L={grid.L!r} N={grid.N} t={t!r}"
    for key, val in (extra or {}).items():
        head += f" {key}={val}"
    return head


def parse_header(line: str) -> dict:
    line = line.lstrip("#").strip()
    out = {}
    for token in line.split():
        key, _, val = token.partition("=")
        out[key] = val
    return out


def _write_columns(path, grid: Grid, arrays, t: float, extra: dict | None) -> None:
    cols = [grid.x]
    for a in arrays:
        cols.extend([a.real, a.imag])
    np.savetxt(path, np.column_stack(cols), header=_format_header(grid, t, extra),
               fmt="%.17g", comments="# ")


def _read_columns(path, ncomplex: int):
    path = Path(path)
    with path.open() as fh:
        header = parse_header(fh.readline())
    grid = Grid(float(header["L"]), int(header["N"]))
    data = np.loadtxt(path, ndmin=2)
    if data.shape != (grid.N, 1 + 2 * ncomplex):
        raise ValueError(f"{path}: expected {grid.N} rows of {1 + 2 * ncomplex} columns, "
                         f"got {data.shape}")
    arrays = [data[:, 1 + 2 * j] + 1j * data[:, 2 + 2 * j] for j in range(ncomplex)]
    return grid, float(header.get("t", 0.0)), arrays, header


def write_field(path, f: GridField, t: float = 0.0, extra: dict | None = None) -> None:
    """Columnar text: header `# L=.. N=.. t=..` then `x re im` per grid point."""
    _write_columns(path, f.grid, [f.values], t, extra)


def read_field(path) -> tuple[GridField, float]:
    grid, t, (values,), _ = _read_columns(path, 1)
    return GridField(grid, values), t


def read_field_header(path) -> dict:
    with Path(path).open() as fh:
        return parse_header(fh.readline())


def write_vector(path, v: VectorField, t: float = 0.0, extra: dict | None = None) -> None:
    _write_columns(path, v.grid, [v.comp1, v.comp2], t, extra)


def read_vector(path) -> tuple[VectorField, float]:
    grid, t, (c1, c2), _ = _read_columns(path, 2)
    return VectorField(grid, c1, c2), t


def write_matrix(path, m: MatrixField, t: float = 0.0, extra: dict | None = None) -> None:
    _write_columns(path, m.grid, [m.m11, m.m12, m.m21, m.m22], t, extra)


def read_matrix(path) -> tuple[MatrixField, float]:
    grid, t, arrays, _ = _read_columns(path, 4)
    return MatrixField(grid, *arrays), t
