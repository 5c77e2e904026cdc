"""Dense and sparse linear-algebra primitives: Cholesky, symmetric
eigendecomposition, SPD square root, (preconditioned) conjugate gradient,
power iteration for spectral norms, and a thin sparse-matrix wrapper with
MatrixMarket serialization.

Dense matrices and vectors are plain numpy arrays; the factorizations are
backed by LAPACK through numpy/scipy and wrapped to raise this package's
error types.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse

from .errors import (
    MaxIterationsExceeded,
    NotPositiveDefinite,
    SingularDiagonal,
)

__all__ = [
    "SparseCoefficientMatrix",
    "SolveReport",
    "cholesky",
    "sym_eig",
    "sqrt_spd",
    "pcg",
    "gmres_reference",
    "power_iteration_spectral_error",
    "spmv",
    "transpose_spmv",
    "sparse_triangular_solve",
]


@dataclass
class SparseCoefficientMatrix:
    """Compressed-column sparse matrix with a compression-rate accessor."""

    csc: scipy.sparse.csc_matrix

    def __post_init__(self):
        m = scipy.sparse.csc_matrix(self.csc)
        m.sum_duplicates()
        m.sort_indices()
        self.csc = m

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape) -> "SparseCoefficientMatrix":
        return cls(scipy.sparse.csc_matrix((vals, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SparseCoefficientMatrix":
        return cls(scipy.sparse.csc_matrix(dense))

    @property
    def shape(self):
        return self.csc.shape

    @property
    def nnz(self) -> int:
        return self.csc.nnz

    def compression_rate(self) -> float:
        return self.nnz / (self.shape[0] * self.shape[1])

    def toarray(self) -> np.ndarray:
        return self.csc.toarray()

    def write_matrix_market(self, path) -> None:
        scipy.io.mmwrite(str(path), self.csc, symmetry="general")

    @classmethod
    def read_matrix_market(cls, path) -> "SparseCoefficientMatrix":
        return cls(scipy.sparse.csc_matrix(scipy.io.mmread(str(path))))


@dataclass
class SolveReport:
    """Outcome of an iterative solve."""

    iterations: int
    final_relative_residual: float
    final_absolute_residual: float
    converged: bool
    wall_time: float


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^T = m; raises NotPositiveDefinite."""
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def sym_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors of symmetric m."""
    w, v = np.linalg.eigh(m)
    return w[::-1].copy(), v[:, ::-1].copy()


def sqrt_spd(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of an SPD matrix via eigendecomposition."""
    w, v = sym_eig(m)
    if w[-1] <= tol * max(w[0], 1.0):
        raise NotPositiveDefinite("matrix has a nonpositive eigenvalue")
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def _as_action(op):
    if callable(op):
        return op
    mat = op
    return lambda x: mat @ x


def pcg(apply_a, rhs: np.ndarray, apply_m=None, tol: float = 1e-9,
        max_iter: int = 10000, raise_on_fail: bool = False):
    """Preconditioned conjugate gradient for SPD operators.

    ``apply_a`` and ``apply_m`` may be matrices or callables; ``apply_m``
    is the action of an approximate inverse (identity if None).
    Convergence is declared on the relative l2 residual against the true
    operator, ||rhs - A x|| / ||rhs||.

    Returns (solution, SolveReport). By default a failure to converge is
    reported, not raised; pass ``raise_on_fail=True`` for an exception.
    """
    a = _as_action(apply_a)
    m = _as_action(apply_m) if apply_m is not None else (lambda x: x)
    t0 = time.perf_counter()
    b_norm = float(np.linalg.norm(rhs))
    x = np.zeros_like(rhs)
    if b_norm == 0.0:
        return x, SolveReport(0, 0.0, 0.0, True, time.perf_counter() - t0)
    r = rhs.copy()
    z = m(r)
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    converged = float(np.linalg.norm(r)) / b_norm <= tol
    while not converged and iterations < max_iter:
        ap = a(p)
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        iterations += 1
        if float(np.linalg.norm(r)) / b_norm <= tol:
            converged = True
            break
        z = m(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    true_res = float(np.linalg.norm(rhs - a(x)))
    rel = true_res / b_norm
    report = SolveReport(iterations, rel, true_res, rel <= tol,
                         time.perf_counter() - t0)
    if raise_on_fail and not report.converged:
        raise MaxIterationsExceeded(
            f"pcg: {iterations} iterations, relative residual {rel:.3e}")
    return x, report


def gmres_reference(apply_a, rhs: np.ndarray, apply_m=None, tol: float = 1e-9,
                    max_iter: int = 1000):
    """Restart-free GMRES for comparing the nonsymmetric approximate
    inverse against the symmetric preconditioners; desk scale only."""
    a = _as_action(apply_a)
    n = rhs.shape[0]
    count = {"it": 0}

    def cb(_):
        count["it"] += 1

    lin_a = scipy.sparse.linalg.LinearOperator((n, n), matvec=a)
    lin_m = None
    if apply_m is not None:
        m = _as_action(apply_m)
        lin_m = scipy.sparse.linalg.LinearOperator((n, n), matvec=m)
    t0 = time.perf_counter()
    x, info = scipy.sparse.linalg.gmres(
        lin_a, rhs, M=lin_m, rtol=tol, atol=0.0, restart=max_iter,
        maxiter=1, callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(rhs - a(x)))
    rel = res / float(np.linalg.norm(rhs))
    return x, SolveReport(count["it"], rel, res, info == 0,
                          time.perf_counter() - t0)


def power_iteration_spectral_error(apply_e, n: int, iters: int = 200,
                                   apply_et=None, seed: int = 0) -> float:
    """Spectral norm ||E||_2 estimated by power iteration on E^T E.

    ``apply_et`` defaults to ``apply_e`` (symmetric E). The start vector is
    a fixed-seed random unit vector, so runs are reproducible.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    e = _as_action(apply_e)
    et = _as_action(apply_et) if apply_et is not None else e
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = et(e(v))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        lam = float(v @ w)
        v = w / norm
    return float(np.sqrt(max(lam, 0.0)))


def spmv(s: SparseCoefficientMatrix, v: np.ndarray) -> np.ndarray:
    return s.csc @ v


def transpose_spmv(s: SparseCoefficientMatrix, v: np.ndarray) -> np.ndarray:
    return s.csc.T @ v


def sparse_triangular_solve(l_sparse: SparseCoefficientMatrix, v: np.ndarray,
                            lower: bool = True) -> np.ndarray:
    """Solve L x = v for a sparse triangular factor with full diagonal."""
    diag = l_sparse.csc.diagonal()
    if np.any(diag == 0.0):
        raise SingularDiagonal("triangular factor has a zero diagonal entry")
    return scipy.sparse.linalg.spsolve_triangular(
        l_sparse.csc.tocsr(), v, lower=lower)
