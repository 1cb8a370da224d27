import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnls_orbit.errors import DegenerateError, NoEigenvalueError, SolvabilityError
from dnls_orbit.field import (Grid, GridField, VectorField, l2_norm, vector_inner,
                              vector_norm)
from dnls_orbit.soliton import SpectralParam, eigenvector_field, soliton_field
from dnls_orbit.spectral import (apply_operator, evans_function, find_eigenvalue,
                                 normalize_eigenvector, solve_inhomogeneous)

from conftest import perturbed

EPSILONS = (1e-3, 5e-4, 2.5e-4)


@pytest.fixture(scope="module")
def perturbed_eigs(grid, z0):
    return {eps: find_eigenvalue(perturbed(grid, eps), z0) for eps in EPSILONS}


def assert_halving(values):
    for big, small in zip(values, values[1:]):
        assert 0.5 * 0.75 <= small / big <= 0.5 * 1.25


def test_identity_case(z0, grid):
    res = find_eigenvalue(soliton_field(z0, 0.0, grid), SpectralParam(1.01 + 0.49j))
    assert abs(res.z1.z - z0.z) < 1e-8
    assert res.evans_residual < 1e-12 and res.iterations <= 50


def test_eigenvalue_shift_is_linear_in_epsilon(perturbed_eigs, z0):
    shifts = [abs(perturbed_eigs[e].z1.z - z0.z) for e in EPSILONS]
    assert all(s > 0 for s in shifts)
    assert_halving(shifts)


def test_zero_potential_has_no_eigenvalue(z0, small_grid):
    assert evans_function(GridField.zeros(small_grid), z0) == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(NoEigenvalueError):
        find_eigenvalue(GridField.zeros(small_grid), z0)


def test_iteration_cap(z0, grid):
    with pytest.raises(NoEigenvalueError):
        find_eigenvalue(perturbed(grid, 1e-3), SpectralParam(1.1 + 0.4j), max_iter=1)


def test_tolerance_floor(z0, small_grid):
    with pytest.raises(ValueError):
        find_eigenvalue(soliton_field(z0, 0.0, small_grid), z0, tol=1e-14)


def test_evans_function_is_even(z0, grid):
    q = perturbed(grid, 1e-3)
    for z in (1.05 + 0.45j, 0.9 + 0.6j):
        assert abs(evans_function(q, z) - evans_function(q, -z)) < 1e-12


def test_root_from_negated_guess(perturbed_eigs, z0, grid):
    q = perturbed(grid, 1e-3)
    z1 = perturbed_eigs[1e-3].z1
    neg = find_eigenvalue(q, -z0)
    assert abs(neg.z1.z - z1.z) < 1e-9
    # -z1 is a root too, and it is the eigenvalue of the negated data
    assert abs(evans_function(q, -z1)) < 1e-11
    flipped = find_eigenvalue(q * -1.0, -z0)
    assert abs(flipped.z1.z + z1.z) < 1e-9


def test_eigenvector_normalization_and_decay(perturbed_eigs, grid):
    res = perturbed_eigs[1e-3]
    phi, ref = res.eigenvector, eigenvector_field(res.z1, grid)
    assert abs(vector_inner(phi - ref, ref)) < 1e-10
    amp = np.hypot(np.abs(phi.comp1), np.abs(phi.comp2))
    far = np.abs(grid.x) >= grid.L / 4
    assert amp[far].max() < 1e-6 * amp.max()


def test_eigenvector_deviation_is_linear_in_epsilon(perturbed_eigs, grid):
    devs = [vector_norm(perturbed_eigs[e].eigenvector - eigenvector_field(perturbed_eigs[e].z1, grid))
            for e in EPSILONS]
    assert_halving(devs)


def test_eigenvector_solves_x_problem(perturbed_eigs, grid):
    from dnls_orbit.lax import build_x
    from dnls_orbit.field import ddx
    res = perturbed_eigs[1e-3]
    phi = res.eigenvector
    X = build_x(perturbed(grid, 1e-3), res.z1)
    r1 = ddx(phi.comp1, grid) - (X.m11 * phi.comp1 + X.m12 * phi.comp2)
    r2 = ddx(phi.comp2, grid) - (X.m21 * phi.comp1 + X.m22 * phi.comp2)
    assert np.sqrt(grid.h * np.sum(np.abs(r1) ** 2 + np.abs(r2) ** 2)) < 1e-6


def test_normalize_trivial(z0, grid):
    ref = eigenvector_field(z0, grid)
    same = normalize_eigenvector(ref, z0)
    assert vector_norm(same - ref) < 1e-12
    back = normalize_eigenvector(ref * 2.7j, z0)
    assert vector_norm(back - ref) < 1e-12


def test_normalize_rejects_orthogonal_input(z0, grid):
    ref = eigenvector_field(z0, grid)
    other = VectorField(grid, -np.conj(ref.comp2), np.conj(ref.comp1))
    other = other - (vector_inner(other, ref) / vector_inner(ref, ref)) * ref
    with pytest.raises(DegenerateError):
        normalize_eigenvector(other, z0)


# -- inhomogeneous problem ---------------------------------------------------

def bump_vector(grid, seed, z):
    """Smooth, effectively compactly supported, orthogonal to the kernel column."""
    rng = np.random.default_rng(seed)
    x = grid.x
    env = np.exp(-(x / 2.5) ** 4)
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    w = VectorField(grid, (c[0] + c[1] * x) * env, (c[2] + c[3] * np.sin(x)) * env)
    ref = eigenvector_field(z, grid)
    return w - (vector_inner(w, ref) / vector_inner(ref, ref)) * ref


def test_inhomogeneous_zero(z0, grid):
    w = solve_inhomogeneous(VectorField(grid, np.zeros(grid.N), np.zeros(grid.N)), z0)
    assert not np.any(w.comp1) and not np.any(w.comp2)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_manufactured_solution(z0, grid, seed):
    psi = soliton_field(z0, 0.0, grid)
    w_star = bump_vector(grid, seed, z0)
    h = apply_operator(w_star, z0, psi)
    w = solve_inhomogeneous(h, z0)
    assert vector_norm(w - w_star) < 1e-6
    assert vector_norm(apply_operator(w, z0, psi) - h) < 1e-6
    assert abs(vector_inner(w, eigenvector_field(z0, grid))) < 1e-8


def test_cokernel_direction_is_rejected(z0, grid):
    ref = eigenvector_field(z0, grid)
    h = VectorField(grid, np.conj(ref.comp2), np.conj(ref.comp1))
    with pytest.raises(SolvabilityError):
        solve_inhomogeneous(h, z0)


@settings(max_examples=10, deadline=None)
@given(s1=st.integers(0, 1000), s2=st.integers(0, 1000),
       a=st.complex_numbers(max_magnitude=3), b=st.complex_numbers(max_magnitude=3))
def test_inhomogeneous_is_linear(s1, s2, a, b):
    grid = Grid(60.0, 2048)
    z = SpectralParam(1 + 0.5j)
    psi = soliton_field(z, 0.0, grid)
    h1 = apply_operator(bump_vector(grid, s1, z), z, psi)
    h2 = apply_operator(bump_vector(grid, s2, z), z, psi)
    lhs = solve_inhomogeneous(h1 * a + h2 * b, z)
    rhs = solve_inhomogeneous(h1, z) * a + solve_inhomogeneous(h2, z) * b
    scale = max(1.0, vector_norm(lhs))
    assert vector_norm(lhs - rhs) < 1e-8 * scale
