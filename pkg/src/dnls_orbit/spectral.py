"""Discrete eigenvalue of the x-problem near a soliton, and the linearized solver.

The eigenvalue is located by shooting: decaying solutions are integrated in
from both ends (with the plane-wave factor removed so each sweep runs in its
stable direction) and matched at x = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import resample

from .errors import (DegenerateError, EigenvalueOutOfRegionError, NoEigenvalueError,
                     SolvabilityError)
from .field import Grid, GridField, VectorField, ddx, vector_inner, _check_same
from .quadrature import cumulative
from .soliton import SpectralParam, eigenvector_field, fundamental_columns, soliton_values

MAX_SECANT_ITERATIONS = 50


@dataclass(frozen=True)
class EigenResult:
    z1: SpectralParam
    eigenvector: VectorField
    evans_residual: float
    iterations: int


def _fine_potential(q: GridField, refine: int) -> np.ndarray:
    if refine < 2 or refine % 2:
        raise ValueError(f"refine must be an even integer >= 2, got {refine}")
    return resample(q.values, refine * q.grid.N)


class _Shooter:
    """Evans function of one potential; caches the refined samples."""

    def __init__(self, q0: GridField, refine: int = 4):
        self.grid = q0.grid
        self.refine = refine
        self.qf = _fine_potential(q0, refine).tolist()
        self.qfc = [c.conjugate() for c in self.qf]

    def _sweep(self, z: complex, forward: bool, keep: bool):
        """RK4 for m (forward from -L/2) or p (backward from +L/2) up to x = 0."""
        N, r = self.grid.N, self.refine
        H = 2 * self.grid.h / r
        z2 = z * z
        q, qc = self.qf, self.qfc
        nf = N * r
        half = nf // 2
        stored = []
        if forward:
            a, b = 1 + 0j, 0j
            c22 = 2j * z2
            idx = range(0, half, 2)
            for i in idx:
                if keep and i % r == 0:
                    stored.append((a, b))
                q0, q1, q2 = q[i], q[i + 1], q[i + 2]
                c0, c1, c2 = qc[i], qc[i + 1], qc[i + 2]
                k1a = z * q0 * b
                k1b = -z * c0 * a + c22 * b
                a2, b2 = a + 0.5 * H * k1a, b + 0.5 * H * k1b
                k2a = z * q1 * b2
                k2b = -z * c1 * a2 + c22 * b2
                a3, b3 = a + 0.5 * H * k2a, b + 0.5 * H * k2b
                k3a = z * q1 * b3
                k3b = -z * c1 * a3 + c22 * b3
                a4, b4 = a + H * k3a, b + H * k3b
                k4a = z * q2 * b4
                k4b = -z * c2 * a4 + c22 * b4
                a += H / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
                b += H / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            stored.append((a, b))
        else:
            a, b = 0j, 1 + 0j
            c11 = -2j * z2
            # step from fine index i to i-2, with i = nf wrapping to 0
            for i in range(nf, half, -2):
                if keep and i % r == 0:
                    stored.append((a, b))
                q0, q1, q2 = q[i % nf], q[i - 1], q[i - 2]
                c0, c1, c2 = qc[i % nf], qc[i - 1], qc[i - 2]
                k1a = c11 * a + z * q0 * b
                k1b = -z * c0 * a
                a2, b2 = a - 0.5 * H * k1a, b - 0.5 * H * k1b
                k2a = c11 * a2 + z * q1 * b2
                k2b = -z * c1 * a2
                a3, b3 = a - 0.5 * H * k2a, b - 0.5 * H * k2b
                k3a = c11 * a3 + z * q1 * b3
                k3b = -z * c1 * a3
                a4, b4 = a - H * k3a, b - H * k3b
                k4a = c11 * a4 + z * q2 * b4
                k4b = -z * c2 * a4
                a -= H / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
                b -= H / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
            stored.append((a, b))
        return (a, b), stored

    def evans(self, z: complex) -> complex:
        (m1, m2), _ = self._sweep(z, True, False)
        (p1, p2), _ = self._sweep(z, False, False)
        return m1 * p2 - m2 * p1

    def eigenvector(self, z: complex) -> VectorField:
        (m1, m2), ms = self._sweep(z, True, True)
        (p1, p2), ps = self._sweep(z, False, True)
        N = self.grid.N
        x = self.grid.x
        pn = abs(p1) ** 2 + abs(p2) ** 2
        beta = (m1 * p1.conjugate() + m2 * p2.conjugate()) / pn
        # ms covers grid indices 0..N/2 ; ps covers N, N-1, ..., N/2 (index N is the wrap)
        m = np.array(ms)
        p = np.array(ps[::-1])  # indices N/2 .. N
        c1 = np.empty(N, dtype=complex)
        c2 = np.empty(N, dtype=complex)
        lo = slice(0, N // 2 + 1)
        ph = np.exp(-1j * z * z * x[lo])
        c1[lo], c2[lo] = ph * m[:, 0], ph * m[:, 1]
        hi = slice(N // 2 + 1, N)
        ph = np.exp(1j * z * z * x[hi])
        c1[hi], c2[hi] = beta * ph * p[1:-1, 0], beta * ph * p[1:-1, 1]
        return VectorField(self.grid, c1, c2)


def evans_function(q0: GridField, z, refine: int = 4) -> complex:
    """Wronskian at x = 0 of the solutions decaying at -inf and +inf.

    Equals 1 identically for the zero potential; even in z.
    """
    zz = z.z if isinstance(z, SpectralParam) else complex(z)
    return _Shooter(q0, refine).evans(zz)


def find_eigenvalue(q0: GridField, z_guess: SpectralParam, tol: float = 1e-12,
                    refine: int = 4, max_iter: int = MAX_SECANT_ITERATIONS) -> EigenResult:
    """Complex secant iteration on the Evans function starting at z_guess.

    Since E(z) = E(-z), the root is returned with the sign for which the
    soliton psi^{z1} (rather than -psi^{z1}) approximates q0.
    """
    if tol < 1e-12:
        raise ValueError("tol must be >= 1e-12")
    shooter = _Shooter(q0, refine)
    za = z_guess.z
    zb = za + 1e-3 * abs(za) * (1 + 1j) / np.sqrt(2)
    fa, fb = shooter.evans(za), shooter.evans(zb)
    for it in range(1, max_iter + 1):
        if abs(fb) < tol:
            break
        denom = fb - fa
        if denom == 0 or not np.isfinite(denom):
            raise NoEigenvalueError(
                f"Evans function flat near z = {zb:.6g} (|E| = {abs(fb):.3g}); "
                f"no discrete eigenvalue found")
        zc = zb - fb * (zb - za) / denom
        if not np.isfinite(zc):
            raise NoEigenvalueError("secant step produced a non-finite iterate")
        za, fa = zb, fb
        zb, fb = zc, shooter.evans(zc)
        if abs(zb - za) < 1e-15 * max(1.0, abs(zb)) and abs(fb) >= tol:
            # stagnated at roundoff: accept if the residual is at its noise floor
            if abs(fb) < 1e3 * tol:
                break
            raise NoEigenvalueError(f"secant stagnated with |E| = {abs(fb):.3g}")
    else:
        raise NoEigenvalueError(
            f"no convergence within {max_iter} secant iterations (|E| = {abs(fb):.3g})")
    # E is even in z and psi^{-z} = -psi^{z}: keep the root whose soliton is near q0
    psi = soliton_values(zb, 0.0, q0.grid.x)
    if np.linalg.norm(q0.values + psi) < np.linalg.norm(q0.values - psi):
        zb = -zb
    if (zb * zb).imag <= 0:
        raise EigenvalueOutOfRegionError(f"root z1 = {zb} has Im z1^2 <= 0")
    z1 = SpectralParam(zb)
    if z1.z != zb:
        raise EigenvalueOutOfRegionError(f"root z1 = {zb} is not canonical")
    phi = normalize_eigenvector(shooter.eigenvector(zb), z1)
    return EigenResult(z1, phi, float(abs(fb)), it)


def normalize_eigenvector(phi: VectorField, z1: SpectralParam) -> VectorField:
    """Scale phi so that <phi - Phi1, Phi1> = 0, Phi1 the closed-form decaying column."""
    ref = eigenvector_field(z1, phi.grid)
    proj = vector_inner(phi, ref)
    rr = vector_inner(ref, ref)
    scale = np.sqrt(vector_inner(phi, phi).real * rr.real)
    if abs(proj) <= 1e-12 * scale:
        raise DegenerateError("eigenvector is orthogonal to the reference column")
    return (rr / proj) * phi


def apply_operator(w: VectorField, z: SpectralParam, potential: GridField) -> VectorField:
    """L(z) w = sigma3 w_x + i z^2 w - z [[0, psi], [conj psi, 0]] w."""
    _check_same(w.grid, potential.grid)
    g, zz, z2, v = w.grid, z.z, z.z2, potential.values
    r1 = ddx(w.comp1, g) + 1j * z2 * w.comp1 - zz * v * w.comp2
    r2 = -ddx(w.comp2, g) + 1j * z2 * w.comp2 - zz * np.conj(v) * w.comp1
    return VectorField(g, r1, r2)


def solve_inhomogeneous(h: VectorField, z1: SpectralParam,
                        solvability_tol: float = 1e-8, refine: int = 4) -> VectorField:
    """Unique w with L(z1) w = h at the soliton psi^{z1}(0, .) and <w, Phi1> = 0.

    Variation of parameters with the closed-form fundamental matrix. The
    coefficient of the growing column is integrated from whichever end is
    nearer, which is the same function once h satisfies the solvability
    condition <h, sigma1 conj(Phi1)> = 0.

    The quadratures run on a band-limited interpolation of h with `refine`
    points per grid cell.
    """
    g = h.grid
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    hn = np.sqrt(g.h * np.sum(np.abs(h.comp1) ** 2 + np.abs(h.comp2) ** 2))
    if hn == 0:
        return VectorField(g, np.zeros(g.N), np.zeros(g.N))
    fine = Grid(g.L, g.N * refine)
    if refine > 1:
        h1, h2 = resample(h.comp1, fine.N), resample(h.comp2, fine.N)
    else:
        h1, h2 = h.comp1, h.comp2
    F = fundamental_columns(z1, fine.x)  # raises OverflowGuardError if needed
    f11, f12, f21, f22 = F[0, 0], F[0, 1], F[1, 0], F[1, 1]
    coker = f21 * h1 + f11 * h2
    obstruction = fine.h * np.sum(coker)
    cn = np.sqrt(fine.h * np.sum(np.abs(f11) ** 2 + np.abs(f21) ** 2))
    if abs(obstruction) > solvability_tol * hn * cn:
        raise SolvabilityError(
            f"h has component {abs(obstruction) / (hn * cn):.3g} along the cokernel")
    # coefficient of the decaying column: each term integrated from the end where
    # its growing factor is small
    u = -cumulative(f22 * h1, fine.h, from_right=True) + cumulative(f12 * h2, fine.h)
    left = -cumulative(coker, fine.h)
    right = cumulative(coker, fine.h, from_right=True)
    v = np.where(fine.x < 0, left, right)
    w1 = f11 * u + f12 * v
    w2 = f21 * u + f22 * v
    r = refine
    ref = VectorField(g, f11[::r], f21[::r])
    wp = VectorField(g, w1[::r], w2[::r])
    c = -vector_inner(wp, ref) / vector_inner(ref, ref)
    return wp + c * ref
