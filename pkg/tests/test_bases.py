"""Tests for the dense reference bases: dual pairs, Lagrange, Newton."""

import numpy as np
import pytest

from dualkern.bases import (
    dual_pair,
    evaluate_basis,
    interpolant,
    lagrange_coefficients,
    newton_basis,
)
from dualkern.errors import NotPositiveDefinite
from dualkern.kernels import KernelMatrix, KernelSpec, assemble
from dualkern.pointset import generate_uniform


SPEC = KernelSpec("matern_three_half", 1.5, 0.3)


def _system(n=60, lam=1e-6, seed=0):
    sites = generate_uniform(n, 2, seed)
    return sites, assemble(SPEC, sites, lam)


def test_dual_pair_identity_over_gammas():
    _, a = _system()
    for gamma in (-1.0, -0.5, 0.0, 0.3):
        pair = dual_pair(a, gamma)
        gram = pair.primal_coeffs.T @ a.entries @ pair.dual_coeffs
        assert np.max(np.abs(gram - np.eye(a.site_count))) <= 1e-8


def test_dual_pair_special_cases():
    _, a = _system()
    # gamma = 0: primal is the identity (kernel translates), dual = A^{-1}
    pair = dual_pair(a, 0.0)
    assert np.allclose(pair.primal_coeffs, np.eye(a.site_count))
    assert np.allclose(pair.dual_coeffs, np.linalg.inv(a.entries), atol=1e-8)
    # gamma = -1/2: self-dual
    pair = dual_pair(a, -0.5)
    assert np.allclose(pair.primal_coeffs, pair.dual_coeffs)


def test_dual_pair_rejects_indefinite():
    m = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NotPositiveDefinite):
        dual_pair(KernelMatrix(m, 0.0, 2), 0.0)


def test_lagrange_property_at_sites():
    sites, a = _system(lam=0.0)
    coeffs = lagrange_coefficients(a)
    vals = evaluate_basis(coeffs, SPEC, sites, sites.points).values
    assert np.max(np.abs(vals - np.eye(sites.n))) <= 1e-8


def test_modified_lagrange_with_regularization():
    sites, a = _system(lam=1e-3)
    coeffs = lagrange_coefficients(a)
    # coefficients solve the regularized system, not the exact one
    assert np.allclose(a.entries @ coeffs, np.eye(sites.n), atol=1e-10)


def test_newton_basis_orthonormality_and_triangularity():
    _, a = _system(lam=1e-8)
    b = newton_basis(a)
    assert np.allclose(np.tril(b, -1), 0)  # B upper triangular
    assert np.allclose(b.T @ a.entries @ b, np.eye(a.site_count), atol=1e-10)
    # A B lower triangular: the i-th function vanishes at all prior sites
    ab = a.entries @ b
    assert np.max(np.abs(np.triu(ab, 1))) <= 1e-10


def test_newton_basis_nested_zeros_at_sites():
    sites, a = _system(n=30, lam=0.0)
    b = newton_basis(a)
    vals = evaluate_basis(b, SPEC, sites, sites.points).values
    # vals[j, i] = i-th Newton function at site j; zero for j < i
    assert np.max(np.abs(np.triu(vals[:, 1:], 1))) <= 1e-8


def test_interpolant_reproduces_data():
    sites, a = _system(lam=0.0)
    rng = np.random.default_rng(12)
    f = rng.standard_normal(sites.n)
    coeffs = lagrange_coefficients(a)
    vals = interpolant(coeffs, f, SPEC, sites, sites.points)
    assert np.allclose(vals, f, atol=1e-8)


def test_interpolant_length_mismatch():
    sites, a = _system()
    with pytest.raises(ValueError):
        interpolant(lagrange_coefficients(a), np.ones(3), SPEC, sites,
                    sites.points)
