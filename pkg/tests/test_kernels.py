"""Tests for kernel evaluation and dense assembly."""

import numpy as np
import pytest

from dualkern.errors import InvalidSubset
from dualkern.kernels import (
    KernelSpec,
    assemble,
    assemble_restricted,
    eval_kernel,
    parse_kernel_spec,
)
from dualkern.pointset import generate_uniform


def test_closed_forms_at_sample_distances():
    r = np.array([0.0, 0.5, 1.0, 2.0])
    half = KernelSpec("matern_half", 0.5, 1.0, normalize=False)
    assert np.allclose(eval_kernel(half, r), np.exp(-r))
    three = KernelSpec("matern_three_half", 1.5, 1.0, normalize=False)
    assert np.allclose(eval_kernel(three, r), (1 + r) * np.exp(-r))
    five = KernelSpec("matern_five_half", 2.5, 1.0, normalize=False)
    assert np.allclose(eval_kernel(five, r), (3 + 3 * r + r * r) * np.exp(-r))
    gauss = KernelSpec("gaussian")
    assert np.allclose(eval_kernel(gauss, r), np.exp(-r * r))
    sob = KernelSpec("sobolev_h1")
    assert np.allclose(eval_kernel(sob, r), 0.5 * np.exp(-r))


def test_normalization_and_phi0():
    five = KernelSpec("matern_five_half", 2.5, 1.0)
    assert five.phi0() == pytest.approx(1.0)
    raw = KernelSpec("matern_five_half", 2.5, 1.0, normalize=False)
    assert raw.phi0() == pytest.approx(3.0)
    # the Sobolev kernel keeps its 1/2 factor regardless
    assert KernelSpec("sobolev_h1").phi0() == pytest.approx(0.5)


def test_general_matern_matches_closed_forms():
    # the Bessel form must agree with the half-integer closed forms
    r = np.linspace(0.0, 3.0, 50)
    for nu, family in ((0.5, "matern_half"), (1.5, "matern_three_half"),
                       (2.5, "matern_five_half")):
        gen = eval_kernel(KernelSpec("matern_general", nu, 1.0), r)
        ref = eval_kernel(KernelSpec(family, nu, 1.0), r)
        assert np.allclose(gen, ref, atol=1e-12)


def test_general_matern_limit_at_zero():
    spec = KernelSpec("matern_general", 1.0, 1.0)
    assert eval_kernel(spec, 0.0) == 1.0
    # continuity near zero
    assert eval_kernel(spec, 1e-10) == pytest.approx(1.0, abs=1e-6)


def test_lengthscale_scaling():
    spec = KernelSpec("matern_half", 0.5, 0.1)
    assert eval_kernel(spec, 0.1) == pytest.approx(np.exp(-1.0))


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        eval_kernel(KernelSpec("matern_half"), -0.5)


def test_assemble_symmetry_and_diagonal():
    sites = generate_uniform(80, 2, 4)
    lam = 1e-4
    a = assemble(KernelSpec("matern_three_half", 1.5, 0.2), sites, lam)
    m = a.entries
    assert np.array_equal(m, m.T)  # bitwise symmetric by construction
    assert np.allclose(np.diag(m), 1.0 + lam)
    assert a.regularization == lam
    assert a.site_count == 80


def test_assemble_restricted_matches_slice():
    sites = generate_uniform(60, 2, 4)
    spec = KernelSpec("matern_half", 0.5, 0.2)
    idx = np.array([3, 10, 11, 40, 59])
    full = assemble(spec, sites, 1e-5).entries
    sub = assemble_restricted(spec, sites, idx, 1e-5).entries
    assert np.allclose(sub, full[np.ix_(idx, idx)])


def test_assemble_restricted_validation():
    sites = generate_uniform(20, 2, 4)
    spec = KernelSpec("matern_half", 0.5, 0.2)
    with pytest.raises(InvalidSubset):
        assemble_restricted(spec, sites, [])
    with pytest.raises(InvalidSubset):
        assemble_restricted(spec, sites, [3, 3, 5])
    with pytest.raises(InvalidSubset):
        assemble_restricted(spec, sites, [5, 3])
    with pytest.raises(InvalidSubset):
        assemble_restricted(spec, sites, [0, 25])


def test_kernel_matrix_is_positive_definite():
    sites = generate_uniform(100, 2, 8)
    a = assemble(KernelSpec("matern_half", 0.5, 0.1), sites, 0.0)
    w = np.linalg.eigvalsh(a.entries)
    assert w.min() > 0


def test_parse_kernel_spec():
    spec = parse_kernel_spec("matern:0.5:0.1")
    assert spec.family == "matern_half" and spec.lengthscale == 0.1
    assert parse_kernel_spec("matern:1.5:0.1").family == "matern_three_half"
    assert parse_kernel_spec("matern:0.8:0.1").family == "matern_general"
    assert parse_kernel_spec("gaussian:0.5:1.0").family == "gaussian"
    with pytest.raises(ValueError):
        parse_kernel_spec("matern:0.5")
    with pytest.raises(ValueError):
        parse_kernel_spec("banana:0.5:0.1")
