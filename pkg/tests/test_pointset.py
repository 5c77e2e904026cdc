"""Tests for point set handling, geometry summaries, and the cluster tree."""

import numpy as np
import pytest

from dualkern.errors import DuplicatePoints
from dualkern.pointset import (
    DataSiteSet,
    build_cluster_tree,
    generate_uniform,
    geometry_summary,
    neighbors_within,
    read_cache,
    read_csv,
    write_cache,
    write_csv,
)


def test_generate_uniform_deterministic():
    a = generate_uniform(100, 2, 42)
    b = generate_uniform(100, 2, 42)
    assert np.array_equal(a.points, b.points)
    assert a.points.shape == (100, 2)
    assert np.all(a.points >= 0) and np.all(a.points <= 1)


def test_generate_uniform_rejects_bad_args():
    with pytest.raises(ValueError):
        generate_uniform(0, 2, 1)
    with pytest.raises(ValueError):
        generate_uniform(10, 0, 1)


def test_datasiteset_validation():
    box = np.array([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        DataSiteSet(np.array([[2.0, 0.5]]), box)
    with pytest.raises(ValueError):
        DataSiteSet(np.array([[0.5, 0.5]]), np.zeros((3, 2)))


def test_geometry_summary_exact_separation():
    # three collinear points with known minimum gap
    pts = np.array([[0.0, 0.0], [0.25, 0.0], [1.0, 0.0]])
    box = np.array([[0.0, 0.0], [1.0, 0.0]])
    sites = DataSiteSet(pts, box)
    s = geometry_summary(sites, probe_resolution=512)
    assert s.separation_radius == pytest.approx(0.125)
    # true fill distance is 0.375 (midpoint of the long gap)
    assert s.fill_distance_est == pytest.approx(0.375, rel=1e-2)
    assert s.quasi_uniformity_ratio == pytest.approx(
        s.fill_distance_est / s.separation_radius)


def test_geometry_summary_duplicate_points():
    pts = np.array([[0.5, 0.5], [0.5, 0.5], [0.1, 0.1]])
    sites = DataSiteSet(pts, np.array([[0.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(DuplicatePoints):
        geometry_summary(sites)


def test_neighbors_within_brute_force():
    sites = generate_uniform(200, 2, 3)
    r = 0.15
    for i in (0, 57, 199):
        got = neighbors_within(sites, i, r)
        dist = np.linalg.norm(sites.points - sites.points[i], axis=1)
        want = np.flatnonzero(dist <= r)
        assert np.array_equal(got, want)
        assert i in got


def test_neighbors_within_zero_radius():
    sites = generate_uniform(50, 2, 3)
    assert np.array_equal(neighbors_within(sites, 7, 0.0), [7])


def test_cluster_tree_partition_and_determinism():
    sites = generate_uniform(333, 2, 11)
    t1 = build_cluster_tree(sites, 16)
    t2 = build_cluster_tree(sites, 16)
    assert np.array_equal(t1.permutation, t2.permutation)
    # permutation is a bijection
    assert np.array_equal(np.sort(t1.permutation), np.arange(333))
    # leaves partition the index range and respect the capacity
    leaves = t1.leaves()
    assert sum(lf.size for lf in leaves) == 333
    assert all(1 <= lf.size <= 16 for lf in leaves)
    # children tile their parent exactly
    for node in t1.nodes:
        if not node.is_leaf:
            kids = [t1.nodes[c] for c in node.children]
            assert kids[0].start == node.start
            assert kids[-1].end == node.end
            for a, b in zip(kids, kids[1:]):
                assert a.end == b.start


def test_cluster_tree_bbox_contains_points():
    sites = generate_uniform(128, 3, 5)
    tree = build_cluster_tree(sites, 8)
    for node in tree.nodes:
        owned = sites.points[tree.node_indices(node)]
        assert np.all(owned >= node.bbox[0] - 1e-15)
        assert np.all(owned <= node.bbox[1] + 1e-15)


def test_csv_round_trip(tmp_path):
    sites = generate_uniform(40, 2, 1)
    path = tmp_path / "pts.csv"
    write_csv(sites, path, header=True)
    back = read_csv(path, header=True, domain_box=sites.domain_box)
    assert np.array_equal(back.points, sites.points)


def test_binary_cache_round_trip(tmp_path):
    sites = generate_uniform(64, 3, 2)
    path = tmp_path / "pts.bin"
    write_cache(sites, path)
    back = read_cache(path, domain_box=sites.domain_box)
    assert np.array_equal(back.points, sites.points)


def test_binary_cache_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        read_cache(path)
