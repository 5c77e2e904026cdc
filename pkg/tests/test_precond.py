"""Tests for the symmetric footprint preconditioners."""

import numpy as np
import pytest

from dualkern import lagrange, precond
from dualkern.bases import evaluate_basis
from dualkern.errors import WrongVariant
from dualkern.kernels import KernelSpec, assemble
from dualkern.linalg import pcg
from dualkern.pointset import generate_uniform, geometry_summary

SPEC = KernelSpec("matern_half", 0.5, 0.1)


@pytest.fixture(scope="module")
def system():
    sites = generate_uniform(400, 2, 13)
    summary = geometry_summary(sites)
    a = assemble(SPEC, sites, 0.0).entries
    lam = 1e-6 * sites.n
    return sites, summary, a, lam


def _full_footprints(n):
    allidx = np.arange(n, dtype=np.intp)
    return [lagrange.Footprint(i, allidx, i, np.inf) for i in range(n)]


def test_sqrt_full_footprint_is_inverse_sqrt(system):
    sites, _, a, lam = system
    areg = a + lam * np.eye(sites.n)
    p = precond.build_sqrt_preconditioner(
        SPEC, sites, _full_footprints(sites.n), lam, dense_a=a)
    c = p.c.toarray()
    # C^T (A + lam I) C = I, so C C^T is the exact inverse
    gram = c.T @ areg @ c
    assert np.max(np.abs(gram - np.eye(sites.n))) <= 1e-10
    assert np.allclose(c, c.T, atol=1e-10)  # the matrix square root is symmetric


def test_cholesky_full_footprint_is_newton(system):
    sites, _, a, lam = system
    areg = a + lam * np.eye(sites.n)
    p = precond.build_cholesky_preconditioner(
        SPEC, sites, _full_footprints(sites.n), lam, dense_a=a)
    c = p.c.toarray()
    assert np.max(np.abs(np.tril(c, -1))) == 0.0  # exactly upper triangular
    gram = c.T @ areg @ c
    assert np.max(np.abs(gram - np.eye(sites.n))) <= 1e-8


def test_localized_cholesky_stays_upper_triangular(system):
    sites, summary, a, lam = system
    fps = lagrange.build_footprints(sites, summary, 1.0)
    p = precond.build_cholesky_preconditioner(SPEC, sites, fps, lam, dense_a=a)
    c = p.c.toarray()
    assert np.max(np.abs(np.tril(c, -1))) == 0.0


def test_column_supports_inside_footprints(system):
    sites, summary, a, lam = system
    fps = lagrange.build_footprints(sites, summary, 0.8)
    for builder in (precond.build_sqrt_preconditioner,
                    precond.build_cholesky_preconditioner):
        c = builder(SPEC, sites, fps, lam, dense_a=a).c.toarray()
        for fp in fps[:15]:
            outside = np.setdiff1d(np.arange(sites.n), fp.member_indices)
            assert np.all(c[outside, fp.center_index] == 0.0)


def test_apply_matches_materialized_product(system):
    sites, summary, a, lam = system
    fps = lagrange.build_footprints(sites, summary, 0.8)
    p = precond.build_sqrt_preconditioner(SPEC, sites, fps, lam, dense_a=a)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(sites.n)
    c = p.c.toarray()
    assert np.allclose(precond.apply_preconditioner(p, x), c @ (c.T @ x))


def test_preconditioning_cuts_pcg_iterations(system):
    sites, summary, a, lam = system
    areg = a + lam * np.eye(sites.n)
    rhs = np.ones(sites.n)
    _, plain = pcg(areg, rhs, tol=1e-9, max_iter=5000)
    fps = lagrange.build_footprints(sites, summary, 1.0)
    for builder in (precond.build_sqrt_preconditioner,
                    precond.build_cholesky_preconditioner):
        p = builder(SPEC, sites, fps, lam, dense_a=a)
        _, rep = pcg(areg, rhs,
                     lambda x: precond.apply_preconditioner(p, x),
                     tol=1e-9, max_iter=5000)
        assert rep.converged
        assert rep.iterations < plain.iterations


def test_localized_newton_basis_variant_guard(system):
    sites, summary, a, lam = system
    fps = lagrange.build_footprints(sites, summary, 0.8)
    ps = precond.build_sqrt_preconditioner(SPEC, sites, fps, lam, dense_a=a)
    with pytest.raises(WrongVariant):
        precond.localized_newton_basis(ps)
    pc = precond.build_cholesky_preconditioner(SPEC, sites, fps, lam, dense_a=a)
    b = precond.localized_newton_basis(pc)
    vals = evaluate_basis(b, SPEC, sites, sites.points[:5]).values
    assert vals.shape == (5, sites.n)
