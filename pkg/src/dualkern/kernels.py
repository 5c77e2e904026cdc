"""Positive definite radial kernels and dense kernel matrix assembly.

Supported families: the Matern kernels with half-integer smoothness 1/2,
3/2, 5/2 (closed forms), arbitrary smoothness via the modified Bessel
function, the Gaussian, and the H^1(R) Sobolev kernel 0.5*exp(-|x-y|).

By default kernels are normalized so phi(0) = 1 (the raw closed form for
smoothness 5/2 has phi(0) = 3); pass ``normalize=False`` for the raw
values. The Sobolev kernel is never rescaled since its 1/2 factor is part
of its definition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma, kv

from .errors import InvalidSubset, UnsupportedSmoothness
from .pointset import DataSiteSet

__all__ = [
    "KernelSpec",
    "KernelMatrix",
    "eval_kernel",
    "assemble",
    "assemble_restricted",
    "parse_kernel_spec",
]

FAMILIES = (
    "matern_half",
    "matern_three_half",
    "matern_five_half",
    "matern_general",
    "gaussian",
    "sobolev_h1",
)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family with smoothness and lengthscale.

    ``nu`` is ignored for the gaussian and sobolev_h1 families. The
    lengthscale enters as phi(r / lengthscale); sites are never rescaled.
    """

    family: str
    nu: float = 0.5
    lengthscale: float = 1.0
    normalize: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.lengthscale <= 0:
            raise ValueError("lengthscale must be positive")
        if self.family == "matern_general" and self.nu <= 0:
            raise UnsupportedSmoothness("matern_general needs nu > 0")

    def phi0(self) -> float:
        """Kernel value at distance zero."""
        return float(eval_kernel(self, 0.0))


def _phi_raw(family: str, nu: float, s: np.ndarray) -> np.ndarray:
    """Unnormalized radial profile at scaled distance s = r / lengthscale."""
    if family == "matern_half":
        return np.exp(-s)
    if family == "matern_three_half":
        return (1.0 + s) * np.exp(-s)
    if family == "matern_five_half":
        return (3.0 + 3.0 * s + s * s) * np.exp(-s)
    if family == "gaussian":
        return np.exp(-s * s)
    if family == "sobolev_h1":
        return 0.5 * np.exp(-s)
    if family == "matern_general":
        # 2^{1-nu}/Gamma(nu) s^nu K_nu(s); continuous limit 1 at s = 0
        out = np.empty_like(s)
        small = s < 1e-12
        out[small] = 1.0
        sb = s[~small]
        out[~small] = (2.0 ** (1.0 - nu) / gamma(nu)) * sb**nu * kv(nu, sb)
        return out
    raise UnsupportedSmoothness(family)


_PHI0_RAW = {
    "matern_half": 1.0,
    "matern_three_half": 1.0,
    "matern_five_half": 3.0,
    "matern_general": 1.0,
    "gaussian": 1.0,
    "sobolev_h1": 0.5,
}


def eval_kernel(spec: KernelSpec, r) -> np.ndarray:
    """Evaluate the radial profile at distance(s) ``r`` >= 0."""
    s = np.asarray(r, dtype=np.float64) / spec.lengthscale
    if np.any(s < 0):
        raise ValueError("distances must be nonnegative")
    val = _phi_raw(spec.family, spec.nu, np.atleast_1d(s))
    if spec.normalize and spec.family != "sobolev_h1":
        val = val / _PHI0_RAW[spec.family]
    return val.reshape(np.shape(s)) if np.ndim(r) else val[0]


@dataclass(frozen=True)
class KernelMatrix:
    """Dense symmetric kernel matrix with diagonal regularization."""

    entries: np.ndarray
    regularization: float
    site_count: int

    def __post_init__(self):
        e = self.entries
        if e.shape != (self.site_count, self.site_count):
            raise ValueError("entries must be N x N")


def _pairwise(spec: KernelSpec, pts_a: np.ndarray, pts_b: np.ndarray,
              block: int = 2048) -> np.ndarray:
    """Kernel values for all point pairs, computed in row blocks."""
    n, m = pts_a.shape[0], pts_b.shape[0]
    out = np.empty((n, m))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        out[lo:hi] = eval_kernel(spec, cdist(pts_a[lo:hi], pts_b))
    return out


def assemble(spec: KernelSpec, sites: DataSiteSet, lam: float = 0.0) -> KernelMatrix:
    """Dense regularized kernel matrix phi(||x_i - x_j|| / delta) + lam*I.

    Each pair is computed once and mirrored, so the result is bitwise
    symmetric.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    n = sites.n
    a = _pairwise(spec, sites.points, sites.points)
    iu = np.triu_indices(n, 1)
    a[(iu[1], iu[0])] = a[iu]  # mirror upper onto lower: exact symmetry
    np.fill_diagonal(a, spec.phi0() + lam)
    return KernelMatrix(a, lam, n)


def assemble_restricted(spec: KernelSpec, sites: DataSiteSet,
                        index_subset, lam: float = 0.0) -> KernelMatrix:
    """Principal submatrix A|_S + lam*I for a strictly increasing subset."""
    idx = np.asarray(index_subset, dtype=np.intp)
    if idx.size == 0:
        raise InvalidSubset("subset must be nonempty")
    if np.any(idx < 0) or np.any(idx >= sites.n):
        raise InvalidSubset("subset index out of range")
    if np.any(np.diff(idx) <= 0):
        raise InvalidSubset("subset must be strictly increasing")
    sub = sites.points[idx]
    a = _pairwise(spec, sub, sub)
    iu = np.triu_indices(idx.size, 1)
    a[(iu[1], iu[0])] = a[iu]
    np.fill_diagonal(a, spec.phi0() + lam)
    return KernelMatrix(a, lam, idx.size)


def parse_kernel_spec(text: str, normalize: bool = True) -> KernelSpec:
    """Parse the CLI form ``family:nu:delta``, e.g. ``matern:0.5:0.1``.

    The family name ``matern`` picks the closed form when nu is one of
    1/2, 3/2, 5/2 and the Bessel evaluator otherwise.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("kernel spec must be family:nu:delta")
    family, nu_s, delta_s = parts
    nu = float(nu_s) if nu_s else 0.5
    delta = float(delta_s)
    if family == "matern":
        closed = {0.5: "matern_half", 1.5: "matern_three_half", 2.5: "matern_five_half"}
        family = closed.get(nu, "matern_general")
    if family not in FAMILIES:
        raise ValueError(f"unknown kernel family {family!r}")
    return KernelSpec(family, nu, delta, normalize)
