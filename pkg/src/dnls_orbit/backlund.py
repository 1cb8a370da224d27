"""Backlund transformation for the derivative NLS and its uses.

For a potential q with a solution Phi of the x-problem at z,
    D = z |Phi1|^2 + conj(z) |Phi2|^2,
    q' = (conj(D)/D)^2 * (-q + 2i (z^2 - conj(z)^2) Phi1 conj(Phi2) / conj(D)),
    Phi' = (conj(Phi2)/D, conj(Phi1)/conj(D)),
and applying the map to (q', Phi') returns q. The new potential is unchanged
if Phi is rescaled pointwise, which is used to keep every quotient in range.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, ResidualError
from .field import GridField, MatrixField, VectorField, l2_norm, _check_same
from .soliton import SpectralParam, soliton_field
from .spectral import EigenResult

UNDERFLOW = 1e-300


@dataclass(frozen=True)
class ModulationPrediction:
    shift: float
    phase: float


@dataclass(frozen=True)
class DownResult:
    q1: GridField
    phi1: VectorField
    smallness_ratio: float | None  # ||q1|| / ||q0 - psi^{z1}||, None if q0 is the soliton


def wrap_phase(b: float) -> float:
    """Reduce to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - b, 2 * np.pi))


def _transform(q: np.ndarray, p1: np.ndarray, p2: np.ndarray, z: complex):
    s = np.sqrt(np.abs(p1) ** 2 + np.abs(p2) ** 2)
    if np.any(~(s > UNDERFLOW)) or not np.all(np.isfinite(s)):
        raise DegenerateError("eigenvector vanishes or overflows at a grid point")
    u1, u2 = p1 / s, p2 / s
    zc = z.conjugate()
    D = z * np.abs(u1) ** 2 + zc * np.abs(u2) ** 2
    if np.any(np.abs(D) < UNDERFLOW):
        raise DegenerateError("Backlund denominator below underflow threshold")
    Dc = np.conj(D)
    qn = (Dc / D) ** 2 * (-q + 2j * (z * z - zc * zc) * u1 * np.conj(u2) / Dc)
    n1 = np.conj(u2) / (D * s)
    n2 = np.conj(u1) / (Dc * s)
    return qn, n1, n2


def bt_forward(q: GridField, phi: VectorField, z: SpectralParam) -> tuple[GridField, VectorField]:
    """New potential and the pushed-forward solution at the same z."""
    _check_same(q.grid, phi.grid)
    qn, n1, n2 = _transform(q.values, phi.comp1, phi.comp2, z.z)
    return GridField(q.grid, qn), VectorField(q.grid, n1, n2)


def bt_down(q0: GridField, eig: EigenResult) -> DownResult:
    """Remove the soliton from q0 using its eigenvector; the remainder is small."""
    q1, phi1 = bt_forward(q0, eig.eigenvector, eig.z1)
    dist = l2_norm(q0 - soliton_field(eig.z1, 0.0, q0.grid))
    ratio = l2_norm(q1) / dist if dist > 0 else None
    return DownResult(q1, phi1, ratio)


def superpose(mu: MatrixField, coeffs, z1: SpectralParam) -> VectorField:
    """nu = e^{a1+ib1} e^{-i z1^2 x} mu_1 + e^{a2+ib2} e^{i z1^2 x} mu_2."""
    a1, b1, a2, b2 = coeffs
    if not all(np.isfinite([a1, b1, a2, b2])):
        raise ValueError("coefficients must be finite")
    x = mu.grid.x
    e1 = np.exp(a1 + 1j * b1 - 1j * z1.z2 * x)
    e2 = np.exp(a2 + 1j * b2 + 1j * z1.z2 * x)
    return VectorField(mu.grid, e1 * mu.m11 + e2 * mu.m12, e1 * mu.m21 + e2 * mu.m22)


def bt_up(q1_t: GridField, mu: MatrixField, coeffs, z1: SpectralParam,
          return_vector: bool = False):
    """Reinsert the soliton: transform (q1_t, nu) with nu built from the Jost matrix.

    With return_vector the pushed-forward solution is returned alongside.
    """
    _check_same(q1_t.grid, mu.grid)
    nu = superpose(mu, coeffs, z1)
    Q, psi = bt_forward(q1_t, nu, z1)
    return (Q, psi) if return_vector else Q


def predict_modulation(coeffs, z1: SpectralParam) -> ModulationPrediction:
    """Soliton shift and phase selected by the superposition weights.

    shift = (a1 - a2) / (2 eta), phase = b1 - b2 + xi (a1 - a2) / eta.
    """
    a1, b1, a2, b2 = coeffs
    shift = (a1 - a2) / (2 * z1.eta)
    phase = b1 - b2 + 2 * z1.xi * shift
    return ModulationPrediction(float(shift), wrap_phase(phase))


@dataclass(frozen=True)
class CoefficientFit:
    a1: float
    b1: float
    a2: float
    b2: float
    residual: float

    @property
    def coeffs(self) -> tuple[float, float, float, float]:
        return (self.a1, self.b1, self.a2, self.b2)

    def __iter__(self):
        return iter(self.coeffs)


def match_coefficients(phi1: VectorField, mu0: MatrixField, z1: SpectralParam,
                       residual_tol: float = 1e-6, cond_max: float = 1e10) -> CoefficientFit:
    """Weighted least squares for phi1 = c1 e^{-i z1^2 x} mu_1 + c2 e^{i z1^2 x} mu_2.

    Rows are weighted by 1/cosh(eta x) so both growing directions count equally.
    """
    _check_same(phi1.grid, mu0.grid)
    x = mu0.grid.x
    w = 1.0 / np.cosh(z1.eta * x)
    e1 = w * np.exp(-1j * z1.z2 * x)
    e2 = w * np.exp(1j * z1.z2 * x)
    A = np.column_stack([np.concatenate([e1 * mu0.m11, e1 * mu0.m21]),
                         np.concatenate([e2 * mu0.m12, e2 * mu0.m22])])
    rhs = np.concatenate([w * phi1.comp1, w * phi1.comp2])
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > cond_max:
        raise DegenerateError("Jost columns are numerically dependent")
    c, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    residual = float(np.linalg.norm(A @ c - rhs) / np.linalg.norm(rhs))
    cmax = np.max(np.abs(c))
    for j, cj in enumerate(c, start=1):
        if abs(cj) <= 1e-10 * cmax:
            raise DegenerateError(f"superposition weight c{j} vanishes")
    if residual > residual_tol:
        raise ResidualError(f"superposition fit residual {residual:.3g} > {residual_tol:g}")
    return CoefficientFit(float(np.log(abs(c[0]))), float(np.angle(c[0])),
                          float(np.log(abs(c[1]))), float(np.angle(c[1])), residual)
