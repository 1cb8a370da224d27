"""Kaup-Newell Lax matrices and compatibility diagnostics."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .field import GridField, MatrixField, ddx, _check_same
from .soliton import SpectralParam


def build_x(q: GridField, z: SpectralParam) -> MatrixField:
    """X = -i z^2 sigma3 + z [[0, q], [-conj q, 0]]."""
    zz, z2 = z.z, z.z2
    d = np.full(q.grid.N, -1j * z2)
    return MatrixField(q.grid, d, zz * q.values, -zz * np.conj(q.values), -d)


def build_t_terms(q: GridField, z: SpectralParam, qx: np.ndarray | None = None) -> dict:
    """The four pieces of V plus the constant part, each as a (2, 2, N) array.

    Keys: 'const' = -2i z^4 sigma3, 'cubic' = 2 z^3 offdiag(q, -conj q),
    'diag' = i z^2 |q|^2 sigma3, 'deriv' = i z offdiag(q_x, conj q_x),
    'quad' = -z |q|^2 offdiag(q, -conj q).
    """
    v = q.values
    if qx is None:
        qx = ddx(v, q.grid)
    zz, z2, z4 = z.z, z.z2, z.z4
    n = q.grid.N
    a2 = np.abs(v) ** 2
    zero = np.zeros(n, dtype=complex)

    def mat(m11, m12, m21, m22):
        return np.array([[m11, m12], [m21, m22]])

    return {
        "const": mat(np.full(n, -2j * z4), zero, zero, np.full(n, 2j * z4)),
        "cubic": mat(zero, 2 * zz**3 * v, -2 * zz**3 * np.conj(v), zero),
        "diag": mat(1j * z2 * a2, zero, zero, -1j * z2 * a2),
        "deriv": mat(zero, 1j * zz * qx, 1j * zz * np.conj(qx), zero),
        "quad": mat(zero, -zz * a2 * v, zz * a2 * np.conj(v), zero),
    }


def t_array(q: np.ndarray, qx: np.ndarray, z: SpectralParam) -> np.ndarray:
    """T = -2i z^4 sigma3 + V on raw samples, shape (2, 2, N)."""
    zz, z2, z4 = z.z, z.z2, z.z4
    a2 = (q * np.conj(q)).real
    off = (2 * zz**3 - zz * a2)
    t11 = -2j * z4 + 1j * z2 * a2
    return np.array([[t11, off * q + 1j * zz * qx],
                     [-off * np.conj(q) + 1j * zz * np.conj(qx), -t11]])


def build_t(q: GridField, z: SpectralParam) -> MatrixField:
    t = t_array(q.values, ddx(q.values, q.grid), z)
    return MatrixField(q.grid, t[0, 0], t[0, 1], t[1, 0], t[1, 1])


def _x_array(q: np.ndarray, z: SpectralParam) -> np.ndarray:
    d = np.full(q.shape, -1j * z.z2)
    return np.array([[d, z.z * q], [-z.z * np.conj(q), -d]])


def zero_curvature_residual(q_series: Sequence[GridField], z: SpectralParam,
                            dt: float) -> float:
    """max_x |d_x T - d_t X + [T, X]|_F at the middle of three equally spaced slices.

    Longer series use their three central slices.
    """
    if len(q_series) < 3:
        raise ValueError(f"need at least 3 time slices, got {len(q_series)}")
    if not dt > 0:
        raise ValueError("slice spacing must be positive")
    mid = len(q_series) // 2
    before, now, after = q_series[mid - 1], q_series[mid], q_series[mid + 1]
    _check_same(before.grid, now.grid)
    _check_same(after.grid, now.grid)
    grid = now.grid
    qx = ddx(now.values, grid)
    T = t_array(now.values, qx, z)
    Tx = ddx(T, grid)
    Xt = (_x_array(after.values, z) - _x_array(before.values, z)) / (2 * dt)
    X = _x_array(now.values, z)
    comm = np.einsum("ijn,jkn->ikn", T, X) - np.einsum("ijn,jkn->ikn", X, T)
    R = Tx - Xt + comm
    return float(np.sqrt(np.sum(np.abs(R) ** 2, axis=(0, 1))).max())
