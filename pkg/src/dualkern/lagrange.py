"""Footprint machinery: cut-off and localized Lagrange bases and their
sparse global coefficient matrix B.

The footprint of site i is the set of sites within radius
kappa * h * |log h| of x_i, where h is the estimated fill distance. The
localized basis solves one small restricted kernel system per site; the
cut-off basis truncates the columns of the dense inverse instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import cdist

from .errors import DegenerateRadius, NotPositiveDefinite
from .kernels import KernelSpec
from .linalg import SparseCoefficientMatrix
from .pointset import DataSiteSet, GeometrySummary

__all__ = [
    "Footprint",
    "LocalizedBasis",
    "footprint_radius",
    "footprint",
    "build_footprints",
    "cutoff_lagrange",
    "localized_lagrange",
    "quasi_interpolant",
]

# cutoff_lagrange needs the dense inverse; refuse beyond this size
DENSE_INVERSE_LIMIT = 5000


@dataclass(frozen=True)
class Footprint:
    """Sorted member indices of one footprint and the local center slot."""

    center_index: int
    member_indices: np.ndarray
    local_center_position: int
    radius: float


@dataclass
class LocalizedBasis:
    """Sparse global coefficient matrix B; column i is supported on
    footprint(i)."""

    b: SparseCoefficientMatrix
    kind: str  # "cutoff" or "localized"
    kappa: float
    lam: float


def footprint_radius(summary: GeometrySummary, kappa: float) -> float:
    """kappa * h * |log h|; requires h < 1 so the log factor is positive."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    h = summary.fill_distance_est
    if h >= 1.0:
        raise DegenerateRadius(
            f"fill distance {h} >= 1; rescale the domain before localizing")
    return kappa * h * abs(np.log(h))


def footprint(sites: DataSiteSet, summary: GeometrySummary, i: int,
              kappa: float) -> Footprint:
    """Footprint of site i at localization strength kappa."""
    r = footprint_radius(summary, kappa)
    members = np.asarray(
        sorted(sites.kdtree().query_ball_point(sites.points[i], r)),
        dtype=np.intp)
    if i not in members:
        members = np.sort(np.append(members, i))
    m = int(np.searchsorted(members, i))
    return Footprint(i, members, m, r)


def build_footprints(sites: DataSiteSet, summary: GeometrySummary,
                     kappa: float) -> list[Footprint]:
    """Footprints for every site, via one batched range query."""
    r = footprint_radius(summary, kappa)
    ball = sites.kdtree().query_ball_point(sites.points, r)
    out = []
    for i, lst in enumerate(ball):
        members = np.asarray(sorted(lst), dtype=np.intp)
        if i not in members:
            members = np.sort(np.append(members, i))
        out.append(Footprint(i, members, int(np.searchsorted(members, i)), r))
    return out


def mean_footprint_size(footprints: list[Footprint]) -> float:
    return float(np.mean([f.member_indices.size for f in footprints]))


def cutoff_lagrange(a_inv_reference: np.ndarray,
                    footprints: list[Footprint],
                    kappa: float = 0.0, lam: float = 0.0) -> LocalizedBasis:
    """Truncate the dense inverse columnwise to the footprints.

    Column i keeps the rows of a_inv_reference[:, i] inside footprint(i)
    and zeroes the rest; the surviving coefficients are unchanged.
    """
    n = a_inv_reference.shape[0]
    if n > DENSE_INVERSE_LIMIT:
        raise ValueError(
            f"cutoff basis is desk-scale only (N <= {DENSE_INVERSE_LIMIT})")
    rows, cols, vals = [], [], []
    for fp in footprints:
        i = fp.center_index
        rows.append(fp.member_indices)
        cols.append(np.full(fp.member_indices.size, i, dtype=np.intp))
        vals.append(a_inv_reference[fp.member_indices, i])
    b = SparseCoefficientMatrix.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        (n, n))
    return LocalizedBasis(b, "cutoff", kappa, lam)


def localized_lagrange(spec: KernelSpec, sites: DataSiteSet,
                       footprints: list[Footprint], lam: float,
                       kappa: float = 0.0,
                       dense_a: np.ndarray | None = None) -> LocalizedBasis:
    """Solve the restricted systems (A|_Xi + lam*I) beta = e_m per site.

    Each local solution is scattered into global column i. ``dense_a`` may
    supply a precomputed unregularized kernel matrix so the local blocks
    are sliced instead of re-evaluated.
    """
    n = sites.n
    phi0 = spec.phi0()
    rows, cols, vals = [], [], []
    cached_idx, factor = None, None
    for fp in footprints:
        idx = fp.member_indices
        # consecutive identical footprints share one factorization
        if cached_idx is None or not np.array_equal(idx, cached_idx):
            if dense_a is not None:
                a_loc = dense_a[np.ix_(idx, idx)].copy()
            else:
                sub = sites.points[idx]
                from .kernels import eval_kernel
                a_loc = eval_kernel(spec, cdist(sub, sub))
            np.fill_diagonal(a_loc, phi0 + lam)
            try:
                factor = scipy.linalg.cho_factor(a_loc, lower=True,
                                                 overwrite_a=True)
            except scipy.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(
                    f"footprint {fp.center_index} (size {idx.size}) "
                    f"is not SPD: {exc}") from exc
            cached_idx = idx
        e = np.zeros(idx.size)
        e[fp.local_center_position] = 1.0
        beta = scipy.linalg.cho_solve(factor, e)
        rows.append(idx)
        cols.append(np.full(idx.size, fp.center_index, dtype=np.intp))
        vals.append(beta)
    b = SparseCoefficientMatrix.from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        (n, n))
    return LocalizedBasis(b, "localized", kappa, lam)


def quasi_interpolant(basis: LocalizedBasis, data: np.ndarray,
                      spec: KernelSpec, sites: DataSiteSet,
                      queries: np.ndarray) -> np.ndarray:
    """Evaluate sum_i f_i chi_i^loc at the query points."""
    from .bases import interpolant
    return interpolant(basis.b, data, spec, sites, queries)
