"""Symmetric footprint preconditioners for conjugate gradient.

Per footprint, either the inverse matrix square root or the inverse of
the transposed Cholesky factor of the restricted (regularized) kernel
matrix is applied to the local unit vector; the resulting columns form a
sparse global matrix C. The preconditioner action is z = C (C^T x) and
C C^T is never materialized.

With footprint-local indices in ascending global order, the Cholesky
variant's C is upper triangular and its columns are the coefficients of a
localized Newton basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .errors import NotPositiveDefinite, WrongVariant
from .kernels import KernelSpec, eval_kernel
from .lagrange import Footprint
from .linalg import SparseCoefficientMatrix
from .pointset import DataSiteSet

__all__ = [
    "SymmetricPreconditioner",
    "build_sqrt_preconditioner",
    "build_cholesky_preconditioner",
    "apply_preconditioner",
    "localized_newton_basis",
]


@dataclass
class SymmetricPreconditioner:
    """Sparse factor C whose application C C^T preconditions A + lam*I."""

    c: SparseCoefficientMatrix
    variant: str  # "sqrt" or "cholesky"
    kappa: float
    lam: float


def _local_matrix(spec: KernelSpec, sites: DataSiteSet, idx: np.ndarray,
                  lam: float, dense_a: np.ndarray | None) -> np.ndarray:
    if dense_a is not None:
        a_loc = dense_a[np.ix_(idx, idx)].copy()
    else:
        sub = sites.points[idx]
        a_loc = eval_kernel(spec, cdist(sub, sub))
    np.fill_diagonal(a_loc, spec.phi0() + lam)
    return a_loc


def _assemble_c(columns, n: int, variant: str, kappa: float,
                lam: float) -> SymmetricPreconditioner:
    rows, cols, vals = [], [], []
    for i, (idx, col) in enumerate(columns):
        keep = col != 0.0
        rows.append(idx[keep])
        cols.append(np.full(int(keep.sum()), i, dtype=np.intp))
        vals.append(col[keep])
    c = SparseCoefficientMatrix.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        (n, n))
    return SymmetricPreconditioner(c, variant, kappa, lam)


def build_sqrt_preconditioner(spec: KernelSpec, sites: DataSiteSet,
                              footprints: list[Footprint], lam: float,
                              kappa: float = 0.0,
                              dense_a: np.ndarray | None = None
                              ) -> SymmetricPreconditioner:
    """Columns (A|_Xi + lam*I)^{-1/2} e_m, via local eigendecompositions.

    The inverse square root is applied to e_m in the eigenbasis; the local
    matrix square root is never formed or factorized.
    """
    columns = []
    cached_idx, cached = None, None
    for fp in footprints:
        idx = fp.member_indices
        # consecutive identical footprints share one factorization
        if cached_idx is None or not np.array_equal(idx, cached_idx):
            a_loc = _local_matrix(spec, sites, idx, lam, dense_a)
            w, v = scipy.linalg.eigh(a_loc, check_finite=False,
                                     driver="evd", overwrite_a=True)
            if w[0] <= 0.0:
                raise NotPositiveDefinite(
                    f"footprint {fp.center_index} (size {idx.size}) "
                    "has a nonpositive eigenvalue")
            cached_idx, cached = idx, (w, v)
        w, v = cached
        col = v @ (v[fp.local_center_position] / np.sqrt(w))
        columns.append((idx, col))
    return _assemble_c(columns, sites.n, "sqrt", kappa, lam)


def build_cholesky_preconditioner(spec: KernelSpec, sites: DataSiteSet,
                                  footprints: list[Footprint], lam: float,
                                  kappa: float = 0.0,
                                  dense_a: np.ndarray | None = None
                                  ) -> SymmetricPreconditioner:
    """Columns L_i^{-T} e_m with L_i L_i^T = A|_Xi + lam*I.

    Requires footprint-local ordering ascending in the global index (the
    Footprint type guarantees it); only then is C upper triangular.
    """
    columns = []
    cached_idx, el = None, None
    for fp in footprints:
        idx = fp.member_indices
        # consecutive identical footprints share one factorization
        if cached_idx is None or not np.array_equal(idx, cached_idx):
            a_loc = _local_matrix(spec, sites, idx, lam, dense_a)
            try:
                el = scipy.linalg.cholesky(a_loc, lower=True,
                                           overwrite_a=True,
                                           check_finite=False)
            except scipy.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(
                    f"footprint {fp.center_index} (size {idx.size}) "
                    f"is not SPD: {exc}") from exc
            cached_idx = idx
        m = fp.local_center_position
        e = np.zeros(idx.size)
        e[m] = 1.0
        # L^T is upper triangular: the solution vanishes past slot m
        col = np.zeros(idx.size)
        col[:m + 1] = scipy.linalg.solve_triangular(
            el[:m + 1, :m + 1], e[:m + 1], lower=True, trans="T")
        columns.append((idx, col))
    return _assemble_c(columns, sites.n, "cholesky", kappa, lam)


def apply_preconditioner(p: SymmetricPreconditioner,
                         x: np.ndarray) -> np.ndarray:
    """z = C (C^T x), computed in two sparse products."""
    return p.c.csc @ (p.c.csc.T @ x)


def localized_newton_basis(p: SymmetricPreconditioner) -> SparseCoefficientMatrix:
    """Columns of the Cholesky-variant C viewed as basis coefficients.

    Evaluate through bases.evaluate_basis; in the full-footprint limit the
    basis Gramian C^T (A + lam*I) C is the identity.
    """
    if p.variant != "cholesky":
        raise WrongVariant("localized Newton basis requires the cholesky variant")
    return p.c
