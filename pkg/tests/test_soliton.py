import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnls_orbit.errors import OverflowGuardError
from dnls_orbit.field import Grid, ddx, l2_norm, translate_phase
from dnls_orbit.lax import build_x
from dnls_orbit.soliton import (SolitonParams, SpectralParam, eigenvector_field,
                                fundamental_columns, fundamental_matrix, soliton,
                                soliton_family, soliton_field, soliton_values)


def mp_soliton(z, t, x, dps=50):
    """Closed form written out again in arbitrary precision."""
    with mp.workdps(dps):
        z = mp.mpc(z.real, z.imag)
        zc = mp.conj(z)
        z2, z4 = z**2, z**4
        th = mp.im(z2) * x + 2 * mp.im(z4) * t
        A = z * mp.exp(-2 * th) + zc * mp.exp(2 * th)
        return ((A / mp.conj(A)) ** 2 * 2j * (z2 - zc**2)
                * mp.exp(-2j * (mp.re(z2) * x + 2 * mp.re(z4) * t)) / A)


def test_spectral_param_canonicalization():
    p = SpectralParam(1 - 0.5j)
    assert p.z == 1 + 0.5j and p.eta > 0
    assert p.xi == pytest.approx(0.75) and p.eta == pytest.approx(1.0)
    assert p.z4 == pytest.approx(-0.4375 + 1.5j)
    with pytest.raises(ValueError):
        SpectralParam(2.0)
    with pytest.raises(ValueError):
        SpectralParam(1j)


def test_peak_value(z0):
    oracle = complex(mp_soliton(z0.z, 0, 0))
    assert abs(oracle - (-2.0)) < 1e-40
    assert abs(soliton(z0, 0.0, 0.0) - oracle) < 1e-14


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-15, 15), t=st.floats(-2, 2),
       re=st.floats(0.3, 2.0), im=st.floats(0.1, 1.5))
def test_closed_form_matches_bignum(x, t, re, im):
    z = complex(re, im)
    if z.real * z.imag * 2 < 0.05:
        return
    want = complex(mp_soliton(z, t, x))
    got = complex(soliton_values(z, t, x))
    assert abs(got - want) <= 1e-11 * max(1.0, abs(want))


def test_decay(z0):
    assert abs(soliton(z0, 0.0, 40.0)) < 1e-14
    assert abs(soliton(z0, 0.0, -40.0)) < 1e-14


def test_mass_is_time_independent(z0, grid):
    assert abs(l2_norm(soliton_field(z0, 0.0, grid)) - l2_norm(soliton_field(z0, 1.0, grid))) < 1e-10


def test_conjugate_parameter_negates():
    x = np.linspace(-10, 10, 201)
    for z in (1 + 0.5j, 0.8 + 0.3j, -1.2 + 0.4j):
        for t in (0.0, 0.7):
            a = soliton_values(z, t, x)
            b = soliton_values(z.conjugate(), t, x)
            assert np.abs(a + b).max() < 1e-12


@pytest.mark.parametrize("z", [1 + 0.5j, 0.7 + 0.2j, 1.1 + 0.9j])
def test_exact_solution_of_dnls(z, grid):
    p = SpectralParam(z)
    dt = 1e-4
    q = soliton_field(p, 0.3, grid).values
    qt = (soliton_field(p, 0.3 + dt, grid).values - soliton_field(p, 0.3 - dt, grid).values) / (2 * dt)
    r = 1j * qt + ddx(q, grid, 2) + 1j * ddx(np.abs(q) ** 2 * q, grid)
    assert np.sqrt(grid.h * np.sum(np.abs(r) ** 2)) < 1e-5


def test_family_trivial_cases(z0, grid):
    base = soliton_field(z0, 0.4, grid).values
    same = soliton_family(SolitonParams(z0, 0.0, 0.0), 0.4, grid).values
    neg = soliton_family(SolitonParams(z0, 0.0, np.pi), 0.4, grid).values
    assert np.array_equal(same, base)
    assert np.abs(neg + base).max() < 1e-15


def test_family_equals_translate_phase(z0, grid):
    p = SolitonParams(z0, -1.7, 2.2)
    direct = soliton_family(p, 0.2, grid)
    moved = translate_phase(soliton_field(z0, 0.2, grid), p.a, p.b)
    assert np.abs(direct.values - moved.values).max() < 1e-10


def test_family_matches_weighted_transform_of_zero(z0):
    """Family element vs the transform of q = 0 with weighted plane waves.

    With nu = (c1 e^{-i z^2 x - 2i z^4 t}, c2 e^{i z^2 x + 2i z^4 t}) the new
    potential is 2i(z^2 - zbar^2) nu1 conj(nu2) conj(D) / D^2,
    D = z|nu1|^2 + zbar|nu2|^2, evaluated here in bignum arithmetic.
    """
    z = z0.z
    a, b, t = 0.9, -2.4, 0.35
    a1, a2 = 0.3 + 2 * z0.eta * a, 0.3
    b1, b2 = 0.1 + b - 2 * z0.xi * a, 0.1
    grid = Grid(40.0, 256)
    got = soliton_family(SolitonParams(z0, a, b), t, grid).values
    with mp.workdps(40):
        zm = mp.mpc(z.real, z.imag)
        zc = mp.conj(zm)
        err = 0
        for xv, g in zip(grid.x[::8], got[::8]):
            xv = mp.mpf(xv)
            n1 = mp.exp(a1 + 1j * b1) * mp.exp(-1j * zm**2 * xv - 2j * zm**4 * t)
            n2 = mp.exp(a2 + 1j * b2) * mp.exp(1j * zm**2 * xv + 2j * zm**4 * t)
            D = zm * abs(n1) ** 2 + zc * abs(n2) ** 2
            want = 2j * (zm**2 - zc**2) * n1 * mp.conj(n2) * mp.conj(D) / D**2
            err = max(err, abs(complex(want) - g))
    assert err < 1e-10


def test_fundamental_column_one_decays(z0):
    for x in (-20.0, 20.0):
        F = fundamental_matrix(z0, x)
        assert abs(F[0, 0]) < 1e-8 and abs(F[1, 0]) < 1e-8


def test_fundamental_columns_solve_x_problem(z0):
    x = np.linspace(-8, 8, 161)
    s = 1e-3
    F = {k: fundamental_columns(z0, x + k * s) for k in (-2, -1, 1, 2)}
    dF = (F[-2] - 8 * F[-1] + 8 * F[1] - F[2]) / (12 * s)
    F0 = fundamental_columns(z0, x)
    q = soliton_values(z0.z, 0.0, x)
    z, z2 = z0.z, z0.z2
    X = np.array([[np.full_like(q, -1j * z2), z * q], [-z * np.conj(q), np.full_like(q, 1j * z2)]])
    res = dF - np.einsum("ijn,jkn->ikn", X, F0)
    scale = 1 + np.abs(F0).max(axis=(0, 1))
    assert (np.abs(res[:, 0]).max(axis=0) / scale).max() < 1e-8
    assert (np.abs(res[:, 1]).max(axis=0) / scale).max() < 1e-8


def test_fundamental_matches_lax_module(z0):
    g = Grid(30.0, 512)
    X = build_x(soliton_field(z0, 0.0, g), z0).as_array()
    q = soliton_values(z0.z, 0.0, g.x)
    assert np.allclose(X[0, 1], z0.z * q) and np.allclose(X[1, 1], 1j * z0.z2)


def test_fundamental_determinant_constant(z0):
    x = np.linspace(-10, 10, 401)
    F = fundamental_columns(z0, x)
    det = F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0]
    assert np.abs(det - det[0]).max() / abs(det[0]) < 1e-8
    assert abs(det[0] - 1) < 1e-12


def test_eigenvector_field_is_first_column(z0, grid):
    v = eigenvector_field(z0, grid)
    F = fundamental_columns(z0, grid.x, growing=False)
    assert np.array_equal(v.comp1, F[0, 0]) and np.array_equal(v.comp2, F[1, 0])
    F_full = fundamental_columns(z0, grid.x)
    assert np.abs(F_full[:, 0] - F[:, 0]).max() < 1e-15


def test_overflow_guard(z0):
    with pytest.raises(OverflowGuardError):
        fundamental_columns(z0, np.array([0.0, 800.0]))
    col = fundamental_columns(z0, np.array([800.0]), growing=False)
    assert np.all(np.isfinite(col))
