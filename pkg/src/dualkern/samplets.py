"""Samplet multiresolution basis: construction via per-cluster QR of
moment matrices, fast forward/inverse transforms, kernel matrix
compression in samplet coordinates, and the embedded/dual samplet views.

Leaf clusters carry Dirac distributions at their owned sites as scaling
distributions. Each internal cluster stacks its children's scaling
distributions, computes their polynomial moment matrix (monomials up to
total degree q, centered and scaled per cluster box for conditioning),
and splits the orthogonal QR factor into m_q = binom(q+d, d) new scaling
distributions plus samplets. Every samplet therefore annihilates all
polynomials of total degree <= q, and the implicit global transform T is
orthogonal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import NotPositiveDefinite, RankDeficientMoments
from .kernels import KernelSpec, assemble
from .linalg import SparseCoefficientMatrix
from .pointset import ClusterTree, DataSiteSet

__all__ = [
    "SampletTransform",
    "CompressedKernelMatrix",
    "build_transform",
    "compress_kernel_matrix",
    "embedded_samplet_evaluation",
    "dual_samplet_coefficients",
]

_RANK_TOL = 1e-10


def multi_indices(q: int, d: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total degree <= q, by degree then lex."""
    out = []
    for deg in range(q + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            alpha = [0] * d
            for a in combo:
                alpha[a] += 1
            out.append(tuple(alpha))
    # dedupe while keeping degree-major order
    seen, uniq = set(), []
    for a in out:
        if a not in seen:
            seen.add(a)
            uniq.append(a)
    return uniq


def _monomials(points: np.ndarray, alphas, center, scale) -> np.ndarray:
    """Evaluate centered/scaled monomials at points: (npts, m_q)."""
    z = (points - center) / scale
    cols = [np.prod(z**np.asarray(a), axis=1) for a in alphas]
    return np.stack(cols, axis=1)


@dataclass
class _NodeTransform:
    n_in: int
    n_scaling: int
    q_block: np.ndarray | None  # (n_in, n_in); None for leaves
    samplet_rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))

    @property
    def n_samplets(self) -> int:
        return self.n_in - self.n_scaling if self.q_block is not None else 0


@dataclass
class SampletTransform:
    """Orthogonal samplet transform bound to a cluster tree.

    Rows of the implicit N x N matrix T are ordered root scaling
    distributions first, then samplets by tree level and cluster.
    """

    tree: ClusterTree
    sites: DataSiteSet
    q: int
    m_q: int
    node_tf: list[_NodeTransform]
    root_scaling_rows: np.ndarray
    level_index: list[dict]
    _order_desc: list[int]

    @property
    def n(self) -> int:
        return self.sites.n

    def forward(self, v: np.ndarray) -> np.ndarray:
        """T @ v through the tree recursion; v may be (N,) or (N, k)."""
        squeeze = v.ndim == 1
        vp = np.atleast_2d(v.T).T[self.tree.permutation]
        out = np.empty_like(vp)
        buf: dict[int, np.ndarray] = {}
        nodes = self.tree.nodes
        for nid in self._order_desc:
            node, tf = nodes[nid], self.node_tf[nid]
            if node.is_leaf:
                c = vp[node.start:node.end]
            else:
                c = np.concatenate([buf.pop(ch) for ch in node.children])
                w = tf.q_block.T @ c
                if tf.n_samplets:
                    out[tf.samplet_rows] = w[tf.n_scaling:]
                c = w[:tf.n_scaling]
            buf[nid] = c
        out[self.root_scaling_rows] = buf[0]
        return out[:, 0] if squeeze else out

    def inverse(self, w: np.ndarray) -> np.ndarray:
        """T^T @ w (the transposed recursion); inverse of forward."""
        squeeze = w.ndim == 1
        wp = np.atleast_2d(w.T).T
        vp = np.empty_like(wp)
        nodes = self.tree.nodes
        buf: dict[int, np.ndarray] = {0: wp[self.root_scaling_rows]}
        for nid in reversed(self._order_desc):
            node, tf = nodes[nid], self.node_tf[nid]
            c = buf.pop(nid)
            if node.is_leaf:
                vp[node.start:node.end] = c
            else:
                full = tf.q_block @ np.concatenate([c, wp[tf.samplet_rows]])
                off = 0
                for ch in node.children:
                    k = self.node_tf[ch].n_scaling
                    buf[ch] = full[off:off + k]
                    off += k
        v = np.empty_like(vp)
        v[self.tree.permutation] = vp
        return v[:, 0] if squeeze else v

    def as_dense(self) -> np.ndarray:
        """Materialize T (desk scale only)."""
        return self.forward(np.eye(self.n))

    def dump_level_map(self, path) -> None:
        """CSV of (row, level, kind, k, cluster id, support size)."""
        with open(path, "w") as fh:
            fh.write("row,level,kind,k,cluster,support\n")
            for rec in self.level_index:
                fh.write("{row},{level},{kind},{k},{cluster},{support}\n".format(**rec))


def build_transform(tree: ClusterTree, sites: DataSiteSet, q: int) -> SampletTransform:
    """Bottom-up construction of the samplet transform of degree q."""
    if q < 0:
        raise ValueError("q must be >= 0")
    d = sites.dim
    alphas = multi_indices(q, d)
    m_q = len(alphas)
    nodes = tree.nodes
    order_desc = sorted(range(len(nodes)), key=lambda i: -nodes[i].level)
    pts_perm = sites.points[tree.permutation]

    node_tf: list[_NodeTransform | None] = [None] * len(nodes)
    coeffs: dict[int, np.ndarray] = {}  # node -> (|tau|, n_scaling) over owned Diracs

    for nid in order_desc:
        node = nodes[nid]
        if node.is_leaf:
            node_tf[nid] = _NodeTransform(node.size, node.size, None)
            coeffs[nid] = np.eye(node.size)
            continue
        gam = scipy.linalg.block_diag(*[coeffs.pop(ch) for ch in node.children]) \
            if len(node.children) > 1 else coeffs.pop(node.children[0])
        n_in = gam.shape[1]
        center = 0.5 * (node.bbox[0] + node.bbox[1])
        scale = np.maximum(0.5 * (node.bbox[1] - node.bbox[0]), 1e-300)
        p = _monomials(pts_perm[node.start:node.end], alphas, center, scale)
        moments = p.T @ gam  # (m_q, n_in)
        qmat, r = np.linalg.qr(moments.T, mode="complete")
        # deterministic signs: largest-magnitude entry of each column positive
        for k in range(n_in):
            piv = int(np.argmax(np.abs(qmat[:, k])))
            if qmat[piv, k] < 0:
                qmat[:, k] = -qmat[:, k]
                if k < r.shape[0]:
                    r[k, :] = -r[k, :]
        n_scaling = min(m_q, n_in)
        if n_in > m_q:
            diag = np.abs(np.diag(r)[:m_q])
            if diag.min() <= _RANK_TOL * max(diag.max(), 1.0):
                raise RankDeficientMoments(
                    f"cluster {nid} (size {node.size}): moment matrix is "
                    "numerically rank deficient")
        node_tf[nid] = _NodeTransform(n_in, n_scaling, qmat)
        coeffs[nid] = gam @ qmat[:, :n_scaling]

    # assign output rows: root scaling block first, then samplets by level
    root_rows = np.arange(node_tf[0].n_scaling, dtype=np.intp)
    level_index = [
        {"row": int(rw), "level": 0, "kind": "scaling", "k": int(rw),
         "cluster": 0, "support": nodes[0].size}
        for rw in root_rows
    ]
    next_row = node_tf[0].n_scaling
    per_level_k: dict[int, int] = {}
    for nid in sorted(range(len(nodes)), key=lambda i: (nodes[i].level, i)):
        tf = node_tf[nid]
        if tf.n_samplets == 0:
            continue
        tf.samplet_rows = np.arange(next_row, next_row + tf.n_samplets, dtype=np.intp)
        lvl = nodes[nid].level
        for rw in tf.samplet_rows:
            k = per_level_k.get(lvl, 0)
            per_level_k[lvl] = k + 1
            level_index.append({"row": int(rw), "level": lvl, "kind": "samplet",
                                "k": k, "cluster": nid,
                                "support": nodes[nid].size})
        next_row += tf.n_samplets
    assert next_row == sites.n

    return SampletTransform(tree, sites, q, m_q, node_tf, root_rows,
                            level_index, order_desc)


@dataclass
class CompressedKernelMatrix:
    """Thresholded samplet-coordinate kernel matrix with its transform."""

    s: SparseCoefficientMatrix
    threshold: float
    lam: float
    transform: SampletTransform
    _lu: object = None

    def compression_rate(self) -> float:
        return self.s.compression_rate()

    def factorize(self):
        """Sparse factorization with a fill-reducing (minimum degree)
        ordering; raises NotPositiveDefinite on over-compression."""
        if self._lu is None:
            try:
                lu = scipy.sparse.linalg.splu(
                    self.s.csc, permc_spec="MMD_AT_PLUS_A",
                    options={"SymmetricMode": True, "DiagPivotThresh": 0.001})
            except RuntimeError as exc:
                raise NotPositiveDefinite(str(exc)) from exc
            if np.any(lu.U.diagonal() <= 0):
                raise NotPositiveDefinite(
                    "compressed matrix is not positive definite; "
                    "lower the compression threshold")
            self._lu = lu
        return self._lu

    def factor_compression_rate(self) -> float:
        """nnz of the sparse triangular factor over N^2."""
        n = self.s.shape[0]
        return self.factorize().L.nnz / (n * n)

    def apply_inverse(self, rhs_in_point_coords: np.ndarray) -> np.ndarray:
        """Action of B_Sigma = T^T S^{-1} T on a point-coordinate vector."""
        t = self.transform
        return t.inverse(self.factorize().solve(t.forward(rhs_in_point_coords)))


def compress_kernel_matrix(t: SampletTransform, spec: KernelSpec,
                           sites: DataSiteSet, lam: float,
                           threshold: float,
                           dense_a: np.ndarray | None = None
                           ) -> CompressedKernelMatrix:
    """Form T (A + lam*I) T^T densely and drop small off-diagonal entries.

    Desk-scale path: the dense samplet-coordinate matrix is materialized
    before thresholding. The diagonal is always retained and the pattern
    is exactly symmetric.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    a = assemble(spec, sites, 0.0).entries if dense_a is None else dense_a
    a_sig = t.forward(t.forward(a).T)
    a_sig = 0.5 * (a_sig + a_sig.T)
    a_sig[np.diag_indices_from(a_sig)] += lam
    keep = np.abs(a_sig) >= threshold
    np.fill_diagonal(keep, True)
    s = SparseCoefficientMatrix.from_dense(np.where(keep, a_sig, 0.0))
    return CompressedKernelMatrix(s, threshold, lam, t)


def factorize_and_solve(s: CompressedKernelMatrix,
                        rhs_in_point_coords: np.ndarray) -> np.ndarray:
    """Solve (A + lam*I) x ~= rhs through the compressed representation."""
    return s.apply_inverse(rhs_in_point_coords)


def embedded_samplet_evaluation(t: SampletTransform, spec: KernelSpec,
                                sites: DataSiteSet, queries: np.ndarray):
    """Evaluate the embedded samplets sum_i T[(j,k),i] K(., x_i).

    Returns a BasisEvaluation whose column order matches the transform's
    row order (root scaling block first).
    """
    from .bases import evaluate_basis
    return evaluate_basis(t.as_dense().T, spec, sites, queries)


def dual_samplet_coefficients(t: SampletTransform, spec: KernelSpec,
                              sites: DataSiteSet, lam: float = 0.0) -> np.ndarray:
    """Kernel-translate coefficients of the dual embedded samplets,
    T^T (T (A + lam*I) T^T)^{-1}, dense desk-scale evaluation."""
    a = assemble(spec, sites, lam).entries
    td = t.as_dense()
    a_sig = td @ a @ td.T
    try:
        inv = np.linalg.inv(a_sig)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return td.T @ inv
