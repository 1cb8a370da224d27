"""Closed-form one-soliton and the fundamental matrix of the x-problem at it.

All exponentials are evaluated after factoring out the dominant growth
e^{2 eta |x|}, so the decaying quantities never pass through inf/inf.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OverflowGuardError
from .field import Grid, GridField, MatrixField, VectorField

# e^{3*eta*|x|} overflows near 709; refuse beyond this exponent for the growing column
OVERFLOW_EXPONENT = 700.0


@dataclass(frozen=True)
class SpectralParam:
    """Spectral parameter z, always stored with Im z^2 > 0.

    Inputs with Im z^2 < 0 are replaced by their complex conjugate.
    """

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not np.isfinite(z.real) or not np.isfinite(z.imag):
            raise ValueError(f"spectral parameter must be finite, got {z}")
        eta = (z * z).imag
        if eta == 0:
            raise ValueError(f"Im z^2 must be nonzero, got z = {z}")
        if eta < 0:
            z = z.conjugate()
        object.__setattr__(self, "z", z)

    @property
    def xi(self) -> float:
        return (self.z * self.z).real

    @property
    def eta(self) -> float:
        return (self.z * self.z).imag

    @property
    def z2(self) -> complex:
        return self.z * self.z

    @property
    def z4(self) -> complex:
        return self.z2 * self.z2

    def __neg__(self) -> "SpectralParam":
        return SpectralParam(-self.z)


@dataclass(frozen=True)
class SolitonParams:
    z: SpectralParam
    a: float = 0.0
    b: float = 0.0


def _as_param(z) -> SpectralParam:
    return z if isinstance(z, SpectralParam) else SpectralParam(z)


def soliton_values(z: complex, t: float, x) -> np.ndarray:
    """Raw closed form for any complex z with Im z^2 != 0 (no canonicalization).

    theta = eta x + 2 Im(z^4) t, A = z e^{-2 theta} + conj(z) e^{2 theta}, B = conj(A),
    psi = (A/B)^2 * 2i(z^2 - conj(z)^2) e^{-2i(xi x + 2 Re(z^4) t)} / A.
    """
    z = complex(z)
    zc = z.conjugate()
    z2 = z * z
    z4 = z2 * z2
    xi, eta = z2.real, z2.imag
    x = np.asarray(x, dtype=float)
    theta = eta * x + 2.0 * z4.imag * t
    m = 2.0 * np.abs(theta)
    A = z * np.exp(-2 * theta - m) + zc * np.exp(2 * theta - m)
    if np.any(np.abs(A) == 0):
        raise ZeroDivisionError("soliton denominator vanished")
    ratio = A / np.conj(A)
    phase = np.exp(-2j * (xi * x + 2.0 * z4.real * t))
    return ratio**2 * 2j * (z2 - zc * zc) * phase * np.exp(-m) / A


def soliton(z: SpectralParam, t: float, x):
    """Soliton psi^z(t, x); scalar in, scalar out, arrays broadcast."""
    z = _as_param(z)
    out = soliton_values(z.z, t, x)
    return complex(out) if out.ndim == 0 else out


def soliton_field(z: SpectralParam, t: float, grid: Grid) -> GridField:
    return GridField(grid, soliton_values(_as_param(z).z, t, grid.x))


def soliton_family(p: SolitonParams, t: float, grid: Grid) -> GridField:
    """e^{ib} psi^z(t, x + a), evaluated from the closed form (no interpolation)."""
    vals = np.exp(1j * p.b) * soliton_values(p.z.z, t, grid.x + p.a)
    return GridField(grid, vals)


def _exp_terms(x: np.ndarray, eta: float, ks=(-3, -2, -1, 1, 2, 3)):
    """e^{k eta x - 2 eta |x|} for the exponents k used below."""
    m = 2 * eta * np.abs(x)
    return {k: np.exp(k * eta * x - m) for k in ks}


def fundamental_columns(z: SpectralParam, x, *, growing: bool = True) -> np.ndarray:
    """Fundamental matrix at the soliton psi^z(0, .), shape (2, 2) + x.shape.

    Column 1 is the decaying eigenvector, column 2 grows like e^{eta|x|}
    and carries a term linear in x. The determinant is identically 1.
    """
    z = _as_param(z)
    zz, zc = z.z, z.z.conjugate()
    xi, eta, z2 = z.xi, z.eta, z.z2
    x = np.asarray(x, dtype=float)
    if growing and np.any(eta * np.abs(x) > OVERFLOW_EXPONENT):
        raise OverflowGuardError(
            f"growing column requested at eta*|x| = {eta * np.max(np.abs(x)):.1f} > "
            f"{OVERFLOW_EXPONENT}")
    e = _exp_terms(x, eta, (-3, -2, -1, 1, 2, 3) if growing else (-2, -1, 1, 2))
    B = zz * e[2] + zc * e[-2]       # scaled by e^{-2 eta |x|}
    Bc = np.conj(B)
    osc = np.exp(-1j * xi * x)
    out = np.zeros((2, 2) + x.shape, dtype=complex)
    out[0, 0] = osc * e[-1] / B
    out[1, 0] = np.conj(osc) * e[1] / Bc
    if growing:
        absz2 = abs(zz) ** 2
        out[0, 1] = -osc * ((4 * z2 * eta * x + xi) * e[-1] + absz2 * e[3]) / B
        out[1, 1] = np.conj(osc) * ((-4 * z2 * eta * x + xi) * e[1] + absz2 * e[-3]) / Bc
    return out


def fundamental_matrix(z: SpectralParam, x: float) -> np.ndarray:
    """The 2x2 fundamental matrix at a single point."""
    return fundamental_columns(z, float(x))


def fundamental_matrix_field(z: SpectralParam, grid: Grid) -> MatrixField:
    m = fundamental_columns(z, grid.x)
    return MatrixField(grid, m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def eigenvector_field(z: SpectralParam, grid: Grid) -> VectorField:
    """Decaying column of the fundamental matrix, sampled on the grid."""
    m = fundamental_columns(z, grid.x, growing=False)
    return VectorField(grid, m[0, 0], m[1, 0])
