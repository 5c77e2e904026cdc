"""Reference dual pairs for the span of kernel translates: the
gamma-parametrized pairs, the (modified) Lagrange basis, and the Newton
basis. Everything here is dense and meant for desk-scale problems; the
localized constructions use these as oracles.

A basis is represented by its coefficient matrix in the kernel-translate
basis: column i holds the coefficients of the i-th basis function, so
basis_i(x) = sum_j coeffs[j, i] * K(x, x_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite
from .kernels import KernelMatrix, KernelSpec, _pairwise
from .linalg import SparseCoefficientMatrix, cholesky, sym_eig
from .pointset import DataSiteSet

__all__ = [
    "DualPair",
    "BasisEvaluation",
    "dual_pair",
    "lagrange_coefficients",
    "evaluate_basis",
    "newton_basis",
    "interpolant",
]


@dataclass(frozen=True)
class DualPair:
    """Primal/dual coefficient matrices with primal^T A dual = I."""

    primal_coeffs: np.ndarray
    dual_coeffs: np.ndarray
    gamma: float


@dataclass(frozen=True)
class BasisEvaluation:
    """Basis functions evaluated at query points (rows = queries)."""

    values: np.ndarray


def _matrix_power_sym(a: np.ndarray, power: float, tol: float = 1e-12) -> np.ndarray:
    w, v = sym_eig(a)
    if w[-1] <= tol * max(abs(w[0]), 1.0):
        raise NotPositiveDefinite("matrix power needs a positive spectrum")
    return (v * w**power) @ v.T


def dual_pair(a: KernelMatrix, gamma: float) -> DualPair:
    """Dual pair with primal coefficients A^gamma and dual A^(-1-gamma).

    gamma = 0 gives the kernel translates paired with the Lagrange basis;
    gamma = -1/2 gives the self-dual orthonormal basis.
    """
    m = a.entries
    primal = _matrix_power_sym(m, gamma)
    dual = _matrix_power_sym(m, -1.0 - gamma)
    return DualPair(primal, dual, gamma)


def lagrange_coefficients(a: KernelMatrix) -> np.ndarray:
    """Columns of A^{-1}: coefficient vectors of all Lagrange functions.

    Passing a lambda-regularized matrix yields the modified Lagrange basis.
    """
    try:
        c, low = scipy.linalg.cho_factor(a.entries, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return scipy.linalg.cho_solve((c, low), np.eye(a.site_count))


def evaluate_basis(coeffs, spec: KernelSpec, sites: DataSiteSet,
                   queries: np.ndarray) -> BasisEvaluation:
    """Evaluate basis functions given by ``coeffs`` at the query points.

    values[q, i] = sum_j coeffs[j, i] K(x_q, x_j). ``coeffs`` may be dense
    or a SparseCoefficientMatrix.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    kq = _pairwise(spec, queries, sites.points)
    if isinstance(coeffs, SparseCoefficientMatrix):
        return BasisEvaluation(kq @ coeffs.csc)
    return BasisEvaluation(kq @ np.asarray(coeffs))


def newton_basis(a: KernelMatrix) -> np.ndarray:
    """Upper-triangular coefficients of the Newton basis.

    With A = L L^T, the coefficient matrix is B = L^{-T}; then B^T A B = I
    (orthonormal Gramian) and A B = L is lower triangular, so the i-th
    function vanishes at the sites x_1, ..., x_{i-1}.
    """
    el = cholesky(a.entries)
    return scipy.linalg.solve_triangular(el, np.eye(a.site_count),
                                         lower=True, trans="T")


def interpolant(coeffs, data_values: np.ndarray, spec: KernelSpec,
                sites: DataSiteSet, queries: np.ndarray) -> np.ndarray:
    """Quasi-interpolant sum_i f_i * basis_i evaluated at the queries."""
    data = np.asarray(data_values, dtype=np.float64)
    if data.shape[0] != sites.n:
        raise ValueError("data length must equal the number of sites")
    if isinstance(coeffs, SparseCoefficientMatrix):
        weights = coeffs.csc @ data
    else:
        weights = np.asarray(coeffs) @ data
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    kq = _pairwise(spec, queries, sites.points)
    return kq @ weights
