"""Empirical patch measures and their discrepancies over set families.

For values v in [0, 1]^n (an occupancy state or a probability vector) the
measure of a set B of patch attributes w_i = (z_i, a_i) is

    n^{-1} sum_i v_i 1[w_i in B].

:func:`sup_discrepancy` maximises |measure_a(B) - measure_b(B)| over
axis-aligned rectangles, closed balls or lower orthants ("half-lines").
Rectangles are exact when at most two attribute coordinates vary; the 2-D
case sweeps the lower edge over the sorted y values and maintains a
max/min-subarray segment tree over x while the upper edge rises, which is
O(n^2 log n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numba
import numpy as np

from .landscape import Landscape

KINDS = ("rectangles", "balls", "halflines")


@dataclass(frozen=True)
class VCFamily:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown set family {self.kind!r}; choose from {KINDS}")
        if self.dim < 1:
            raise ValueError("family dimension must be at least 1")

    @property
    def V(self) -> int:
        if self.kind == "rectangles":
            return 2 * self.dim
        if self.kind == "balls":
            return self.dim + 1
        return self.dim


# --- sets --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Rectangle:
    """Closed box lo <= w <= hi (componentwise); lo > hi in any coordinate is empty."""

    lo: Any
    hi: Any

    def contains(self, pts: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return np.all((pts >= lo) & (pts <= hi), axis=1)


@dataclass(frozen=True, eq=False)
class Ball:
    center: Any
    radius: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center, float)
        return np.sqrt(((pts - c) ** 2).sum(axis=1)) <= self.radius


@dataclass(frozen=True, eq=False)
class HalfLine:
    """Lower orthant w <= upper (componentwise)."""

    upper: Any

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all(pts <= np.asarray(self.upper, float), axis=1)


def whole_space(dim: int) -> Rectangle:
    return Rectangle(np.full(dim, -np.inf), np.full(dim, np.inf))


def _check_set(B, dim: int):
    if isinstance(B, Rectangle):
        lo, hi = np.asarray(B.lo, float), np.asarray(B.hi, float)
        ok = lo.shape == hi.shape == (dim,) and not (np.isnan(lo).any() or np.isnan(hi).any())
    elif isinstance(B, Ball):
        c = np.asarray(B.center, float)
        ok = c.shape == (dim,) and np.isfinite(c).all() and B.radius >= 0
    elif isinstance(B, HalfLine):
        ok = np.asarray(B.upper, float).shape == (dim,)
    else:
        ok = False
    if not ok:
        raise ValueError(f"malformed set {B!r} for attribute dimension {dim}")


def measure_mass(values, L: Landscape, B) -> float:
    """n^{-1} sum_i values_i 1[(z_i, a_i) in B]."""
    values = np.asarray(values, dtype=float)
    pts = L.points
    _check_set(B, pts.shape[1])
    return float(values[B.contains(pts)].sum() / L.n)


def tv_distance(X, p) -> float:
    """Total variation between the occupancy measure of X and the measure of p."""
    X = np.asarray(X)
    p = np.asarray(p, dtype=float)
    if X.shape != p.shape:
        raise ValueError(f"length mismatch: {X.shape} vs {p.shape}")
    n = X.size
    occ = X == 1
    return float(max((1.0 - p[occ]).sum(), p[~occ].sum()) / n)


def tv_distance_values(va, vb) -> float:
    """Borel supremum of |measure_a(B) - measure_b(B)| for general value vectors."""
    diff = np.asarray(va, float) - np.asarray(vb, float)
    return float(max(diff[diff > 0].sum(), -diff[diff < 0].sum()) / diff.size)


# --- shatter coefficients and tail bounds ------------------------------------


def shatter_bound(V: int, n: int) -> int:
    """Sauer-type bound (n + 1)^V on the shatter coefficient.  Exact Python
    integer, so it never overflows; use :func:`vc_tail_bound` for probabilities."""
    if V < 0 or n < 1:
        raise ValueError("need V >= 0 and n >= 1")
    return (n + 1) ** V


def vc_tail_bound(V: int, n: int, eps: float) -> float:
    """min(1, 2 (n+1)^V exp(-2 n eps^2)), evaluated in log space."""
    log_b = math.log(2.0) + V * math.log(n + 1) - 2.0 * n * eps * eps
    return 1.0 if log_b >= 0 else math.exp(log_b)


def hoeffding_tail(g, eps: float, n: int | None = None) -> float:
    """min(1, 2 exp(-2 n eps^2 / G_n^2)) with G_n^2 = n^{-1} sum g_i^2."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    g = np.asarray(g, dtype=float)
    n = g.size if n is None else n
    G2 = float((g**2).sum() / n)
    if G2 == 0.0:
        return 0.0
    return min(1.0, 2.0 * math.exp(-2.0 * n * eps * eps / G2))


# --- discrepancy -------------------------------------------------------------


@dataclass
class DiscrepancyReport:
    sup: float
    witness: Any
    family: str
    exact: bool

    @property
    def exact_flag(self) -> str:
        return "exact" if self.exact else "lower-bound"


def _interval_extremes(vals: np.ndarray):
    """(max sum, lo, hi, min sum, lo, hi) over contiguous non-empty runs."""
    cum = np.concatenate([[0.0], np.cumsum(vals)])
    run_min = np.minimum.accumulate(cum[:-1])
    run_min_idx = _running_arg(cum[:-1], np.less)
    gain = cum[1:] - run_min
    j = int(np.argmax(gain))
    best_max, lo_max, hi_max = float(gain[j]), int(run_min_idx[j]), j
    run_max = np.maximum.accumulate(cum[:-1])
    run_max_idx = _running_arg(cum[:-1], np.greater)
    loss = cum[1:] - run_max
    j = int(np.argmin(loss))
    best_min, lo_min, hi_min = float(loss[j]), int(run_max_idx[j]), j
    return best_max, lo_max, hi_max, best_min, lo_min, hi_min


def _running_arg(x: np.ndarray, better) -> np.ndarray:
    idx = np.empty(x.size, dtype=np.int64)
    cur = 0
    for k in range(x.size):
        if better(x[k], x[cur]):
            cur = k
        idx[k] = cur
    return idx


def _group_by_coord(coord: np.ndarray, diff: np.ndarray):
    keys, inv = np.unique(coord, return_inverse=True)
    sums = np.zeros(keys.size)
    np.add.at(sums, inv, diff)
    return keys, sums, inv


def _rect_1d(coord, diff):
    keys, sums, _ = _group_by_coord(coord, diff)
    bmax, l1, h1, bmin, l2, h2 = _interval_extremes(sums)
    if max(bmax, -bmin) <= 0.0:
        return 0.0, None
    if bmax >= -bmin:
        return bmax, (keys[l1], keys[h1])
    return -bmin, (keys[l2], keys[h2])


# Segment tree over distinct x ranks.  Value fields per node: 0 sum,
# 1 best prefix, 2 best suffix, 3 best subarray (all maximised); index
# fields: 0 prefix end, 1 suffix start, 2 subarray left, 3 subarray right.
# Minima are obtained by running the same tree on the negated weights.


@numba.njit(cache=True)
def _pull(v, ix, k):
    l = 2 * k
    r = l + 1
    v[k, 0] = v[l, 0] + v[r, 0]
    if v[l, 1] >= v[l, 0] + v[r, 1]:
        v[k, 1] = v[l, 1]
        ix[k, 0] = ix[l, 0]
    else:
        v[k, 1] = v[l, 0] + v[r, 1]
        ix[k, 0] = ix[r, 0]
    if v[r, 2] > v[r, 0] + v[l, 2]:
        v[k, 2] = v[r, 2]
        ix[k, 1] = ix[r, 1]
    else:
        v[k, 2] = v[r, 0] + v[l, 2]
        ix[k, 1] = ix[l, 1]
    cross = v[l, 2] + v[r, 1]
    if v[l, 3] >= cross and v[l, 3] >= v[r, 3]:
        v[k, 3] = v[l, 3]
        ix[k, 2] = ix[l, 2]
        ix[k, 3] = ix[l, 3]
    elif cross >= v[r, 3]:
        v[k, 3] = cross
        ix[k, 2] = ix[l, 1]
        ix[k, 3] = ix[r, 0]
    else:
        v[k, 3] = v[r, 3]
        ix[k, 2] = ix[r, 2]
        ix[k, 3] = ix[r, 3]


@numba.njit(cache=True)
def _reset(v, ix, size):
    v[:, :] = 0.0
    for leaf in range(size):
        k = size + leaf
        for f in range(4):
            ix[k, f] = leaf
    for k in range(size - 1, 0, -1):
        _pull(v, ix, k)


@numba.njit(cache=True)
def _add(v, ix, size, leaf, delta):
    k = size + leaf
    val = v[k, 0] + delta
    for f in range(4):
        v[k, f] = val
    k //= 2
    while k >= 1:
        _pull(v, ix, k)
        k //= 2


@numba.njit(cache=True)
def _sweep_max_2d(ygroup_start, xleaf, w, m):
    """Max sum over rectangles.  Points are sorted by y and grouped
    (``ygroup_start`` has a trailing sentinel); ``xleaf`` is each point's
    distinct-x rank.  An optimal rectangle can always be shrunk until its
    bottom row holds a positive point, so only such rows are tried as
    bottoms.  Returns (best, [y_bottom, y_top, x_left, x_right]) in ranks."""
    size = 1
    while size < m:
        size *= 2
    v = np.zeros((2 * size, 4))
    ix = np.zeros((2 * size, 4), dtype=np.int64)
    q = ygroup_start.size - 1
    best = 0.0
    wit = np.full(4, -1, dtype=np.int64)
    for b in range(q):
        useful = False
        for p in range(ygroup_start[b], ygroup_start[b + 1]):
            if w[p] > 0.0:
                useful = True
                break
        if not useful:
            continue
        _reset(v, ix, size)
        for t in range(b, q):
            for p in range(ygroup_start[t], ygroup_start[t + 1]):
                _add(v, ix, size, xleaf[p], w[p])
            if v[1, 3] > best:
                best = v[1, 3]
                wit[0] = b
                wit[1] = t
                wit[2] = ix[1, 2]
                wit[3] = ix[1, 3]
    return best, wit


def _sweep_rect_2d(starts, xleaf, d, m):
    best_hi, wit_hi = _sweep_max_2d(starts, xleaf, d, m)
    best_lo, wit_lo = _sweep_max_2d(starts, xleaf, -d, m)
    return (best_hi, wit_hi) if best_hi >= best_lo else (best_lo, wit_lo)


@numba.njit(cache=True)
def _sweep_orthant_max_2d(ygroup_start, xleaf, w, m):
    size = 1
    while size < m:
        size *= 2
    v = np.zeros((2 * size, 4))
    ix = np.zeros((2 * size, 4), dtype=np.int64)
    _reset(v, ix, size)
    q = ygroup_start.size - 1
    best = 0.0
    wit = np.full(2, -1, dtype=np.int64)
    for t in range(q):
        for p in range(ygroup_start[t], ygroup_start[t + 1]):
            _add(v, ix, size, xleaf[p], w[p])
        if v[1, 1] > best:
            best = v[1, 1]
            wit[0] = t
            wit[1] = ix[1, 0]
    return best, wit


def _sweep_orthant_2d(starts, xleaf, d, m):
    best_hi, wit_hi = _sweep_orthant_max_2d(starts, xleaf, d, m)
    best_lo, wit_lo = _sweep_orthant_max_2d(starts, xleaf, -d, m)
    return (best_hi, wit_hi) if best_hi >= best_lo else (best_lo, wit_lo)


def _prepare_2d(pts2, diff):
    ykeys, yinv = np.unique(pts2[:, 1], return_inverse=True)
    xkeys, xinv = np.unique(pts2[:, 0], return_inverse=True)
    order = np.lexsort((xinv, yinv))
    ysorted = yinv[order]
    starts = np.searchsorted(ysorted, np.arange(ykeys.size + 1), side="left").astype(np.int64)
    return xkeys, ykeys, starts, xinv[order].astype(np.int64), np.ascontiguousarray(diff[order], dtype=float)


def _rect_2d(pts2, diff):
    xkeys, ykeys, starts, xleaf, d = _prepare_2d(pts2, diff)
    best, wit = _sweep_rect_2d(starts, xleaf, d, xkeys.size)
    if best <= 0.0:
        return 0.0, None
    xr = min(wit[3], xkeys.size - 1)
    return float(best), ((xkeys[wit[2]], xkeys[xr]), (ykeys[wit[0]], ykeys[wit[1]]))


def _orthant_2d(pts2, diff):
    xkeys, ykeys, starts, xleaf, d = _prepare_2d(pts2, diff)
    best, wit = _sweep_orthant_2d(starts, xleaf, d, xkeys.size)
    if best <= 0.0:
        return 0.0, None
    return float(best), (xkeys[min(wit[1], xkeys.size - 1)], ykeys[wit[0]])


def _varying(pts):
    return [k for k in range(pts.shape[1]) if np.ptp(pts[:, k]) > 0]


def _embed_rect(pts, coords, bounds) -> Rectangle:
    """Full-dimensional rectangle: data bounds on unused coordinates."""
    lo = pts.min(axis=0).astype(float)
    hi = pts.max(axis=0).astype(float)
    for k, (l, h) in zip(coords, bounds):
        lo[k], hi[k] = l, h
    return Rectangle(lo, hi)


def _rectangles(pts, diff):
    var = _varying(pts)
    if not var:
        tot = abs(float(diff.sum()))
        return tot, (whole_space(pts.shape[1]) if tot > 0 else None), True
    if len(var) == 1:
        best, b = _rect_1d(pts[:, var[0]], diff)
        return best, (_embed_rect(pts, var, [b]) if b else None), True
    if len(var) == 2:
        best, b = _rect_2d(pts[:, var], diff)
        return best, (_embed_rect(pts, var, b) if b else None), True
    # lower bound: exact slabs over every coordinate pair ...
    best, wit = 0.0, None
    for i in range(len(var)):
        for j in range(i + 1, len(var)):
            val, b = _rect_2d(pts[:, [var[i], var[j]]], diff)
            if val > best:
                best, wit = val, _embed_rect(pts, [var[i], var[j]], b)
    # ... and bounding boxes of point pairs for small n
    n = pts.shape[0]
    if n <= 300:
        val, lo, hi = _pair_boxes(np.ascontiguousarray(pts, dtype=float), diff)
        if val > best:
            best, wit = val, Rectangle(lo, hi)
    return best, wit, False


@numba.njit(cache=True)
def _pair_boxes(pts, diff):
    n, dim = pts.shape
    best = 0.0
    lo = np.empty(dim)
    hi = np.empty(dim)
    blo = pts[0].copy()
    bhi = pts[0].copy()
    for i in range(n):
        for j in range(i, n):
            for k in range(dim):
                lo[k] = min(pts[i, k], pts[j, k])
                hi[k] = max(pts[i, k], pts[j, k])
            s = 0.0
            for q in range(n):
                inside = True
                for k in range(dim):
                    if pts[q, k] < lo[k] or pts[q, k] > hi[k]:
                        inside = False
                        break
                if inside:
                    s += diff[q]
            if abs(s) > best:
                best = abs(s)
                blo[:] = lo
                bhi[:] = hi
    return best, blo, bhi


def _orthants(pts, diff):
    var = _varying(pts)
    top = pts.max(axis=0).astype(float)
    if not var:
        tot = abs(float(diff.sum()))
        return tot, (HalfLine(top) if tot > 0 else None), True

    def embed(coords, vals):
        u = top.copy()
        for k, c in zip(coords, vals):
            u[k] = c
        return HalfLine(u)

    if len(var) == 1:
        keys, sums, _ = _group_by_coord(pts[:, var[0]], diff)
        cum = np.cumsum(sums)
        j = int(np.argmax(np.abs(cum)))
        best = float(abs(cum[j]))
        return best, (embed(var, [keys[j]]) if best > 0 else None), True
    if len(var) == 2:
        best, c = _orthant_2d(pts[:, var], diff)
        return best, (embed(var, c) if c else None), True
    # corners at data points
    inside = np.all(pts[None, :, :] <= pts[:, None, :], axis=2)
    masses = inside.astype(float) @ diff
    j = int(np.argmax(np.abs(masses)))
    best, wit = float(abs(masses[j])), HalfLine(pts[j].astype(float))
    return best, (wit if best > 0 else None), False


def _balls(pts, diff):
    var = _varying(pts)
    if len(var) <= 1:
        # balls restricted to a line are exactly the closed intervals
        if not var:
            tot = abs(float(diff.sum()))
            c = pts[0].astype(float)
            return tot, (Ball(c, 0.0) if tot > 0 else None), True
        best, b = _rect_1d(pts[:, var[0]], diff)
        if not b:
            return 0.0, None, True
        c = pts[0].astype(float).copy()
        mid = 0.5 * (b[0] + b[1])
        c[var[0]] = mid
        # radius from the rounded centre so both end points stay inside
        return best, Ball(c, max(mid - b[0], b[1] - mid)), True
    best, wit = 0.0, None
    for k in range(pts.shape[0]):
        dist = np.sqrt(((pts - pts[k]) ** 2).sum(axis=1))
        order = np.argsort(dist, kind="stable")
        ds = dist[order]
        cum = np.cumsum(diff[order])
        last = np.r_[ds[1:] != ds[:-1], True]  # only radii at distinct distances
        vals = np.abs(cum[last])
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            wit = Ball(pts[k].astype(float), float(ds[last][j]))
    return best, wit, False


def sup_discrepancy_points(pts, values_a, values_b, family: VCFamily) -> DiscrepancyReport:
    """sup over the family of |n^{-1} sum_i (a_i - b_i) 1[pts_i in B]|."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    va = np.asarray(values_a, dtype=float)
    vb = np.asarray(values_b, dtype=float)
    if va.shape != vb.shape or va.shape[0] != pts.shape[0]:
        raise ValueError("value vectors and points must have equal length")
    if pts.shape[1] != family.dim:
        raise ValueError(f"points have dimension {pts.shape[1]}, family has {family.dim}")
    diff = (va - vb) / va.size
    if family.kind == "rectangles":
        best, wit, exact = _rectangles(pts, diff)
    elif family.kind == "halflines":
        best, wit, exact = _orthants(pts, diff)
    else:
        best, wit, exact = _balls(pts, diff)
    return DiscrepancyReport(float(best), wit, family.kind, exact)


def sup_discrepancy(values_a, values_b, L: Landscape, family: VCFamily) -> DiscrepancyReport:
    """Discrepancy over sets of patch attributes (z_i, a_i)."""
    return sup_discrepancy_points(L.points, values_a, values_b, family)


def sup_discrepancy_path(pts, A, B, family: VCFamily) -> tuple[np.ndarray, bool]:
    """Row-wise sup discrepancy between value matrices A and B (shape (k, n)).

    When at most one attribute coordinate varies, rectangles and balls
    reduce to intervals and the supremum of a row is max(cum) - min(cum) of
    its cumulative sum over group boundaries; this is done for all rows at
    once.  Otherwise each row goes through :func:`sup_discrepancy_points`.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = pts.shape[0]
    var = _varying(pts)
    if len(var) <= 1:
        if var:
            coord = pts[:, var[0]]
            order = np.argsort(coord, kind="stable")
            cs = coord[order]
            ends = np.flatnonzero(np.r_[cs[1:] != cs[:-1], True])
        else:
            order = np.arange(n)
            ends = np.array([n - 1])
        D = (A - B)[:, order] / n
        cum = np.cumsum(D, axis=1)[:, ends]
        cum = np.concatenate([np.zeros((cum.shape[0], 1)), cum], axis=1)
        if family.kind == "halflines":
            return np.abs(cum).max(axis=1), True
        return cum.max(axis=1) - cum.min(axis=1), True
    out = np.empty(A.shape[0])
    exact = True
    for k in range(A.shape[0]):
        rep = sup_discrepancy_points(pts, A[k], B[k], family)
        out[k] = rep.sup
        exact &= rep.exact
    return out, exact
