import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metapop.landscape import Exponential, from_arrays
from metapop.measures import (
    Ball,
    Rectangle,
    VCFamily,
    hoeffding_tail,
    measure_mass,
    shatter_bound,
    sup_discrepancy,
    sup_discrepancy_path,
    sup_discrepancy_points,
    tv_distance,
    tv_distance_values,
    vc_tail_bound,
    whole_space,
)
from metapop.oracle import brute_force_discrepancy


def _witness_value(pts, va, vb, wit):
    inside = wit.contains(pts)
    return abs(float((np.asarray(va, float) - vb)[inside].sum())) / len(va)


def test_family_dimensions():
    assert VCFamily("rectangles", 2).V == 4
    assert VCFamily("balls", 3).V == 4
    assert VCFamily("halflines", 2).V == 2
    with pytest.raises(ValueError):
        VCFamily("triangles", 2)


def test_measure_mass_examples():
    L = from_arrays(np.array([0.0, 1.0, 2.0]), np.ones(3), Exponential(1.0))
    assert measure_mass([1, 0, 1], L, whole_space(2)) == pytest.approx(2 / 3)
    assert measure_mass([1, 0, 1], L, Rectangle([1.0, 0.0], [0.0, 2.0])) == 0
    assert measure_mass([1, 0, 1], L, Rectangle([-0.5, 0.0], [1.5, 2.0])) == pytest.approx(1 / 3)
    assert measure_mass([0.2, 0.4, 0.6], L, Ball([1.0, 1.0], 1.0)) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        measure_mass([1, 0, 1], L, Rectangle([0.0], [1.0]))


def test_tv_examples():
    assert tv_distance(np.ones(5), np.ones(5)) == 0
    assert tv_distance(np.ones(5), np.full(5, 0.5)) == 0.5
    assert tv_distance([1, 1, 0, 0], [0.9, 0.8, 0.1, 0.2]) == pytest.approx(0.075)
    with pytest.raises(ValueError):
        tv_distance([1, 0], [0.5])


def test_shatter_and_tails():
    assert shatter_bound(0, 7) == 1
    assert shatter_bound(2, 3) == 16
    assert shatter_bound(4, 10) == 14641
    assert shatter_bound(40, 10**6) == (10**6 + 1) ** 40
    assert vc_tail_bound(4, 10, 0.01) == 1.0
    assert vc_tail_bound(4, 10**6, 0.02) == pytest.approx(2 * (10**6 + 1) ** 4 * math.exp(-800))
    assert hoeffding_tail(np.ones(100), 0.1) == pytest.approx(2 * math.exp(-2))
    assert hoeffding_tail(np.ones(100), 100.0) == 0.0
    assert hoeffding_tail(np.zeros(10), 0.1) == 0.0
    assert hoeffding_tail(np.ones(10), 0.01) == 1.0


def test_halfline_examples():
    fam = VCFamily("halflines", 1)
    z = np.array([0.0, 1.0])
    rep = sup_discrepancy_points(z, [1.0, 0.0], [0.0, 1.0], fam)
    assert rep.sup == pytest.approx(0.5) and rep.exact
    assert rep.witness.contains(z[:, None]).tolist() == [True, False]
    # the same differences scaled by 1/2 give half the supremum
    assert sup_discrepancy_points(z, [0.5, 0.0], [0.0, 0.5], fam).sup == pytest.approx(0.25)


def test_identical_values_give_zero():
    rng = np.random.default_rng(0)
    pts = rng.random((30, 2))
    v = rng.random(30)
    for kind in ("rectangles", "halflines", "balls"):
        assert sup_discrepancy_points(pts, v, v, VCFamily(kind, 2)).sup == 0


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("kind", ["rectangles", "halflines"])
def test_matches_brute_force(dim, kind):
    rng = np.random.default_rng(dim * 10 + len(kind))
    fam = VCFamily(kind, dim)
    for trial in range(40):
        n = int(rng.integers(1, 11))
        # coarse grid so coordinate ties occur
        pts = rng.integers(0, 4, size=(n, dim)).astype(float)
        va, vb = rng.random(n), rng.random(n)
        if trial % 3 == 0:
            va = (va < 0.5).astype(float)
        rep = sup_discrepancy_points(pts, va, vb, fam)
        assert rep.exact
        assert rep.sup == pytest.approx(brute_force_discrepancy(pts, va, vb, kind), abs=1e-12)
        assert _witness_value(pts, va, vb, rep.witness) == pytest.approx(rep.sup, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_sup_below_tv_and_family_monotone(n, dim, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, dim))
    X = (rng.random(n) < 0.5).astype(float)
    p = rng.random(n)
    tv = tv_distance(X, p)
    rect = sup_discrepancy_points(pts, X, p, VCFamily("rectangles", dim))
    half = sup_discrepancy_points(pts, X, p, VCFamily("halflines", dim))
    ball = sup_discrepancy_points(pts, X, p, VCFamily("balls", dim))
    for rep in (rect, half, ball):
        assert 0 <= rep.sup <= tv + 1e-12
        assert _witness_value(pts, X, p, rep.witness) == pytest.approx(rep.sup, abs=1e-12)
    if rect.exact:
        assert half.sup <= rect.sup + 1e-12
    assert tv_distance_values(X, p) == pytest.approx(tv)
    # constant coordinates drop out, so exactness depends on the varying ones
    varying = int((np.ptp(pts, axis=0) > 0).sum())
    assert rect.exact == (varying <= 2)
    assert rect.exact_flag in ("exact", "lower-bound")


def test_constant_coordinates_are_dropped():
    # equal weights: attribute space is effectively one-dimensional
    rng = np.random.default_rng(3)
    z = rng.random(12)
    pts = np.column_stack([z, np.ones(12), np.full(12, 2.0)])
    va, vb = rng.random(12), rng.random(12)
    rep = sup_discrepancy_points(pts, va, vb, VCFamily("rectangles", 3))
    assert rep.exact
    assert rep.sup == pytest.approx(brute_force_discrepancy(z, va, vb), abs=1e-12)


def test_landscape_wrapper_uses_location_and_weight():
    rng = np.random.default_rng(4)
    L = from_arrays(rng.random((10, 1)), rng.uniform(1, 2, 10), Exponential(1.0))
    va, vb = rng.random(10), rng.random(10)
    rep = sup_discrepancy(va, vb, L, VCFamily("rectangles", 2))
    assert rep.sup == pytest.approx(brute_force_discrepancy(L.points, va, vb), abs=1e-12)


@pytest.mark.parametrize("dim,const", [(1, False), (2, True), (2, False)])
def test_path_helper_matches_rows(dim, const):
    rng = np.random.default_rng(dim)
    n = 25
    pts = rng.random((n, dim))
    if const:
        pts[:, 1] = 1.0
    A = (rng.random((6, n)) < 0.5).astype(float)
    B = rng.random((6, n))
    for kind in ("rectangles", "halflines"):
        fam = VCFamily(kind, dim)
        sups, exact = sup_discrepancy_path(pts, A, B, fam)
        rows = [sup_discrepancy_points(pts, A[k], B[k], fam).sup for k in range(6)]
        assert exact and np.allclose(sups, rows, atol=1e-12)


def test_vc_tail_is_conservative():
    # W ~ independent Bernoulli(p): exceedance frequency stays below the bound
    rng = np.random.default_rng(0)
    n, eps = 400, 0.2
    pts = rng.random((n, 1))
    p = rng.random(n)
    fam = VCFamily("rectangles", 1)
    W = (rng.random((1000, n)) < p).astype(float)
    sups, _ = sup_discrepancy_path(pts, W, np.broadcast_to(p, W.shape), fam)
    bound = vc_tail_bound(fam.V, n, eps)
    assert bound < 1
    assert np.mean(sups > eps) <= bound
