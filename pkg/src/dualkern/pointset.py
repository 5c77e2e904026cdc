"""Scattered data sites: generation, geometry summaries, neighbor queries,
and the hierarchical cluster tree shared by footprints and samplets.

Points are stored row-wise in a (N, d) float64 array. The global index of a
point is its row; all downstream sparse structures refer to these indices.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DuplicatePoints

__all__ = [
    "DataSiteSet",
    "GeometrySummary",
    "ClusterNode",
    "ClusterTree",
    "generate_uniform",
    "geometry_summary",
    "neighbors_within",
    "build_cluster_tree",
    "read_csv",
    "write_csv",
    "read_cache",
    "write_cache",
]

_CACHE_MAGIC = b"KDB1"


@dataclass(frozen=True)
class DataSiteSet:
    """An ordered set of scattered data sites with its intended domain box.

    Attributes
    ----------
    points : (N, d) ndarray
        Site coordinates; row order is meaningful and stable.
    domain_box : (2, d) ndarray
        Axis-aligned box [lo; hi] containing all sites.
    """

    points: np.ndarray
    domain_box: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.atleast_2d(self.points), dtype=np.float64)
        box = np.asarray(self.domain_box, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("points must be a nonempty (N, d) array")
        if box.shape != (2, pts.shape[1]):
            raise ValueError("domain_box must have shape (2, d)")
        if np.any(pts < box[0] - 1e-12) or np.any(pts > box[1] + 1e-12):
            raise ValueError("all points must lie inside domain_box")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain_box", box)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def kdtree(self) -> cKDTree:
        # lazily built and cached; cKDTree is immutable so sharing is safe
        tree = getattr(self, "_kdtree", None)
        if tree is None:
            tree = cKDTree(self.points)
            object.__setattr__(self, "_kdtree", tree)
        return tree


@dataclass(frozen=True)
class GeometrySummary:
    """Fill distance estimate, exact separation radius, and their ratio."""

    fill_distance_est: float
    separation_radius: float
    quasi_uniformity_ratio: float


@dataclass
class ClusterNode:
    """One node of the cluster tree owning permuted indices [start, end)."""

    start: int
    end: int
    level: int
    bbox: np.ndarray  # (2, d) tight box of owned points
    children: list[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.end - self.start

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ClusterTree:
    """Binary cluster tree over a permutation of the global point indices.

    ``permutation[p]`` is the global index of the point in tree position
    ``p``; every node owns the contiguous slice ``permutation[start:end]``.
    """

    nodes: list[ClusterNode]
    permutation: np.ndarray
    leaf_capacity: int

    @property
    def root(self) -> ClusterNode:
        return self.nodes[0]

    @property
    def depth(self) -> int:
        return max(n.level for n in self.nodes)

    def leaves(self) -> list[ClusterNode]:
        return [n for n in self.nodes if n.is_leaf]

    def node_indices(self, node: ClusterNode) -> np.ndarray:
        """Global indices owned by ``node``."""
        return self.permutation[node.start:node.end]


def generate_uniform(n: int, dim: int, seed: int) -> DataSiteSet:
    """Draw ``n`` i.i.d. uniform points in the unit hypercube [0, 1]^dim.

    Deterministic for a fixed seed (PCG64 generator).
    """
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, dim))
    box = np.vstack([np.zeros(dim), np.ones(dim)])
    return DataSiteSet(pts, box)


def geometry_summary(sites: DataSiteSet, probe_resolution: int = 64) -> GeometrySummary:
    """Compute the exact separation radius and a probe-grid fill distance.

    The separation radius is 0.5 * min pairwise distance (exact, via nearest
    neighbor queries). The fill distance is estimated as the max over a
    regular grid of ``probe_resolution**d`` points in the domain box of the
    distance to the nearest site; it is a lower bound of the true fill
    distance converging from below as the resolution grows.
    """
    if sites.n < 2:
        raise ValueError("geometry_summary needs at least two sites")
    tree = sites.kdtree()
    dists, _ = tree.query(sites.points, k=2)
    min_pair = float(dists[:, 1].min())
    if min_pair == 0.0:
        raise DuplicatePoints("two data sites coincide")
    q = 0.5 * min_pair

    axes = [
        np.linspace(sites.domain_box[0, a], sites.domain_box[1, a], probe_resolution)
        for a in range(sites.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    probes = np.stack([m.ravel() for m in mesh], axis=1)
    h = float(tree.query(probes, k=1)[0].max())
    return GeometrySummary(h, q, h / q)


def neighbors_within(sites: DataSiteSet, center_index: int, radius: float) -> np.ndarray:
    """All global indices j with ||x_center - x_j|| <= radius, ascending.

    Always contains ``center_index`` (radius >= 0).
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if not 0 <= center_index < sites.n:
        raise IndexError("center_index out of range")
    idx = sites.kdtree().query_ball_point(sites.points[center_index], radius)
    idx = np.asarray(sorted(idx), dtype=np.intp)
    if center_index not in idx:  # guard against strict-inequality edge cases
        idx = np.sort(np.append(idx, center_index))
    return idx


def build_cluster_tree(sites: DataSiteSet, leaf_capacity: int) -> ClusterTree:
    """Binary cluster tree by recursive longest-axis median bisection.

    Ties in the split coordinate are broken by global index (stable sort),
    so the tree is deterministic. Leaves own between 1 and ``leaf_capacity``
    points and the permutation is a bijection on the global indices.
    """
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be >= 1")
    pts = sites.points
    perm = np.arange(sites.n, dtype=np.intp)
    nodes: list[ClusterNode] = []

    def tight_box(idx: np.ndarray) -> np.ndarray:
        sub = pts[idx]
        return np.vstack([sub.min(axis=0), sub.max(axis=0)])

    def recurse(start: int, end: int, level: int) -> int:
        idx = perm[start:end]
        node_id = len(nodes)
        nodes.append(ClusterNode(start, end, level, tight_box(idx)))
        if end - start > leaf_capacity:
            box = nodes[node_id].bbox
            axis = int(np.argmax(box[1] - box[0]))
            order = np.lexsort((idx, pts[idx, axis]))
            perm[start:end] = idx[order]
            mid = start + (end - start) // 2
            left = recurse(start, mid, level + 1)
            right = recurse(mid, end, level + 1)
            nodes[node_id].children = [left, right]
        return node_id

    recurse(0, sites.n, 0)
    return ClusterTree(nodes, perm, leaf_capacity)


def write_csv(sites: DataSiteSet, path, header: bool = False) -> None:
    """One point per row, decimal floats, optional header row."""
    with open(path, "w") as fh:
        if header:
            fh.write(",".join(f"x{a}" for a in range(sites.dim)) + "\n")
        for row in sites.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_csv(path, header: bool = False, domain_box: np.ndarray | None = None) -> DataSiteSet:
    """Read points from CSV; the domain box defaults to the tight bounds."""
    pts = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    if domain_box is None:
        domain_box = np.vstack([pts.min(axis=0), pts.max(axis=0)])
    return DataSiteSet(pts, domain_box)


def write_cache(sites: DataSiteSet, path) -> None:
    """Binary cache: magic "KDB1", u64 N, u32 d, then N*d little-endian f64."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<QI", sites.n, sites.dim))
        fh.write(sites.points.astype("<f8").tobytes())


def read_cache(path, domain_box: np.ndarray | None = None) -> DataSiteSet:
    with open(path, "rb") as fh:
        if fh.read(4) != _CACHE_MAGIC:
            raise ValueError("bad magic bytes; not a dualkern point cache")
        n, d = struct.unpack("<QI", fh.read(12))
        pts = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d).copy()
    if domain_box is None:
        domain_box = np.vstack([pts.min(axis=0), pts.max(axis=0)])
    return DataSiteSet(pts, domain_box)
