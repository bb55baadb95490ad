"""Continuous-time Levins dynamics.

* :func:`integrate_ode` - classical RK4 for dp_i/dt = C_i(p)(1 - p_i) - E_i(p) p_i
* :func:`simulate_ctmc` - exact event simulation of the occupancy chain
* :func:`simulate_coupled_ct` - the chain X coupled to the time-inhomogeneous
  independent-patches process W, simulated exactly by thinning
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landscape import Landscape
from .rates import RateModel, max_rate

_EDGE_TOL = 1e-12
_BLOCK = 4096


def k_max_rate(L: Landscape, M: RateModel) -> float:
    """max over patches and states of max(C_i(x), E_i(x))."""
    return max_rate(L, M)


def default_step(L: Landscape, M: RateModel) -> float:
    k = k_max_rate(L, M)
    return min(0.01, 1.0 / (10.0 * k)) if k > 0 else 0.01


# --- ODE ---------------------------------------------------------------------


@dataclass
class OdePath:
    """RK4 solution on a uniform grid, with the connectivity S(p) stored at
    each grid point.  S is linear in p, so interpolating it linearly is the
    same as evaluating it at the interpolated p."""

    times: np.ndarray
    p: np.ndarray
    conn: np.ndarray
    h: float

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def _locate(self, t: float):
        if t < 0 or t > self.T * (1 + 1e-12):
            raise ValueError(f"t = {t} outside [0, {self.T}]")
        K = len(self.times) - 1
        j = min(int(t / self.h), K - 1) if K > 0 else 0
        frac = (t - self.times[j]) / self.h if K > 0 else 0.0
        return j, frac

    def at(self, t: float) -> np.ndarray:
        j, frac = self._locate(t)
        if len(self.times) == 1:
            return self.p[0].copy()
        return self.p[j] + frac * (self.p[j + 1] - self.p[j])

    def connectivity_at(self, t: float) -> np.ndarray:
        j, frac = self._locate(t)
        if len(self.times) == 1:
            return self.conn[0].copy()
        return self.conn[j] + frac * (self.conn[j + 1] - self.conn[j])


def _vector_field(p, L: Landscape, M: RateModel):
    S = p @ L.influence
    return M.colonisation_rates(S) * (1.0 - p) - M.extinction_rates(S) * p


def integrate_ode(p0, L: Landscape, M: RateModel, T: float, h: float | None = None) -> OdePath:
    """Fixed-step RK4.  The step is shrunk so that it divides T exactly."""
    if h is None:
        h = default_step(L, M)
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (L.n,) or p0.min() < 0 or p0.max() > 1:
        raise ValueError("p0 must be a length-n vector in [0, 1]")
    K = max(1, math.ceil(T / h - 1e-9)) if T > 0 else 0
    h = T / K if K else h
    p = np.empty((K + 1, L.n))
    p[0] = p0
    for k in range(K):
        y = p[k]
        k1 = _vector_field(y, L, M)
        k2 = _vector_field(y + 0.5 * h * k1, L, M)
        k3 = _vector_field(y + 0.5 * h * k2, L, M)
        k4 = _vector_field(y + h * k3, L, M)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if y.min() < -_EDGE_TOL or y.max() > 1 + _EDGE_TOL:
            raise ValueError(f"RK4 step left [0, 1] at t = {(k + 1) * h:.6g}; reduce h")
        p[k + 1] = np.clip(y, 0.0, 1.0)
    times = np.arange(K + 1) * h
    return OdePath(times, p, p @ L.influence, h)


# --- event paths -------------------------------------------------------------


@dataclass
class EventPath:
    """Initial state plus the ordered list of single-patch flips."""

    x0: np.ndarray
    times: np.ndarray
    patches: np.ndarray
    values: np.ndarray
    T: float
    absorbed: bool = False

    @property
    def n_events(self) -> int:
        return len(self.times)

    @property
    def extinction_time(self) -> float | None:
        """Time of the last event if the chain was absorbed in the empty state."""
        if self.absorbed and not self.final_state().any():
            return float(self.times[-1]) if self.n_events else 0.0
        return None

    def final_state(self) -> np.ndarray:
        x = self.x0.copy()
        x[self.patches] = self.values  # later events overwrite earlier ones
        return x

    def states_at(self, grid) -> np.ndarray:
        """Dense states (right-continuous) at the given increasing times."""
        grid = np.asarray(grid, dtype=float)
        out = np.empty((grid.size, self.x0.size), dtype=np.uint8)
        x = self.x0.copy()
        k = 0
        for g, tg in enumerate(grid):
            while k < self.n_events and self.times[k] <= tg:
                x[self.patches[k]] = self.values[k]
                k += 1
            out[g] = x
        return out


class _Draws:
    """Block-buffered random numbers; deterministic given the generator.
    Blocks start small and double up to ``_BLOCK`` so short runs stay cheap."""

    def __init__(self, rng: np.random.Generator, n: int):
        self.rng = rng
        self.n = n
        self.size = 32
        self._refill()

    def _refill(self):
        b = self.size
        self.exp = self.rng.standard_exponential(b).tolist()
        self.unif = self.rng.random(b).tolist()
        self.idx = self.rng.integers(self.n, size=b).tolist()
        self.k = 0
        self.size = min(2 * b, _BLOCK)

    def next(self):
        if self.k == len(self.exp):
            self._refill()
        k = self.k
        self.k += 1
        return self.exp[k], self.unif[k], self.idx[k]


def _neighbourhoods(L: Landscape):
    """Patches whose connectivity changes when patch i flips, plus i itself.
    None means 'everyone' (dense kernels)."""
    nz = L.s != 0
    if nz.sum() > 0.1 * L.n * L.n:
        return None
    out = []
    for i in range(L.n):
        idx = np.flatnonzero(nz[i])
        out.append(np.union1d(idx, [i]))
    return out


def simulate_ctmc(X0, L: Landscape, M: RateModel, T: float, seed=None) -> EventPath:
    """Exact (direct-method) simulation of the occupancy chain on [0, T].

    Patch i becomes occupied at rate C_i(x) when empty and empty at rate
    E_i(x) when occupied.  Stops early once the total rate is zero.
    """
    rng = np.random.default_rng(seed)
    n = L.n
    x = np.asarray(X0, dtype=np.uint8).copy()
    x0 = x.copy()
    S = x.astype(float) @ L.influence
    C, E = M.colonisation_rates(S), M.extinction_rates(S)
    r = np.where(x == 1, E, C)
    nbrs = _neighbourhoods(L)
    infl = L.influence
    times, patches, values = [], [], []
    t = 0.0
    absorbed = False
    draws = _Draws(rng, n)
    while True:
        total = float(r.sum())
        if total <= 0.0:
            absorbed = True
            break
        e, u, _ = draws.next()
        t += e / total
        if t > T:
            break
        cum = np.cumsum(r)
        i = min(int(np.searchsorted(cum, u * cum[-1], side="right")), n - 1)
        while r[i] <= 0.0:  # guard against landing on a zero-rate slot at the edge
            i -= 1
        new = 1 - int(x[i])
        x[i] = new
        if new:
            S += infl[i]
        else:
            S -= infl[i]
            np.maximum(S, 0.0, out=S)
        if nbrs is None:
            C, E = M.colonisation_rates(S), M.extinction_rates(S)
            r = np.where(x == 1, E, C)
        else:
            idx = nbrs[i]
            Ci, Ei = M.rates_at(idx, S[idx])
            r[idx] = np.where(x[idx] == 1, Ei, Ci)
        times.append(t)
        patches.append(i)
        values.append(new)
    return EventPath(
        x0,
        np.array(times, dtype=float),
        np.array(patches, dtype=np.int64),
        np.array(values, dtype=np.uint8),
        T,
        absorbed,
    )


# --- coupled W / X -----------------------------------------------------------


@dataclass
class CoupledCtTrajectory:
    """Joint event record of (W, X).

    Event ``k`` happens at ``times[k]`` in patch ``patches[k]`` and leaves
    that patch at ``(w_values[k], x_values[k])``; ``Z[k]`` is the weighted
    disagreement sum_i a_i J_i right after it.
    """

    x0: np.ndarray
    times: np.ndarray
    patches: np.ndarray
    w_values: np.ndarray
    x_values: np.ndarray
    Z: np.ndarray
    J: np.ndarray
    T: float
    candidates: int
    dominating_rate: float

    def Z_at(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right"))
        return float(self.Z[k - 1]) if k else 0.0

    def states_at(self, grid) -> tuple[np.ndarray, np.ndarray]:
        """Dense (W, X) at the given increasing times."""
        grid = np.asarray(grid, dtype=float)
        n = self.x0.size
        W = np.empty((grid.size, n), dtype=np.uint8)
        X = np.empty_like(W)
        w, x = self.x0.copy(), self.x0.copy()
        k = 0
        for g, tg in enumerate(grid):
            while k < len(self.times) and self.times[k] <= tg:
                i = self.patches[k]
                w[i] = self.w_values[k]
                x[i] = self.x_values[k]
                k += 1
            W[g] = w
            X[g] = x
        return W, X

    def x_path(self) -> EventPath:
        """The X marginal as an :class:`EventPath` (W-only moves dropped)."""
        x = self.x0.copy()
        keep = []
        for k, i in enumerate(self.patches):
            if self.x_values[k] != x[i]:
                keep.append(k)
                x[i] = self.x_values[k]
        keep = np.array(keep, dtype=np.int64)
        return EventPath(self.x0, self.times[keep], self.patches[keep], self.x_values[keep], self.T)


def simulate_coupled_ct(X0, L: Landscape, M: RateModel, T: float, seed=None, ode: OdePath | None = None) -> CoupledCtTrajectory:
    """Exact simulation of the coupled (W, X) process on [0, T] by thinning.

    Candidate events arrive at the constant rate 2 n k(C, E); each picks a
    patch uniformly and is accepted according to that patch's joint rate
    table evaluated at the candidate time:

    * agreeing occupied patch: both die at min(E(p), E(x)), W alone at
      (E(p) - E(x))+, X alone at (E(x) - E(p))+; empty patches likewise
      with the colonisation rates;
    * disagreeing patch: W moves at its own rate E(p) or C(p), X at its own
      rate C(x) or E(x).

    ``ode`` must solve the deterministic equations from ``p(0) = X0``.
    """
    x = np.asarray(X0, dtype=np.uint8).copy()
    x0 = x.copy()
    if ode is None:
        ode = integrate_ode(x0.astype(float), L, M, T)
    if ode.T < T * (1 - 1e-12):
        raise ValueError(f"ODE horizon {ode.T} shorter than T = {T}")
    n = L.n
    rng = np.random.default_rng(seed)
    k = k_max_rate(L, M)
    w = x.copy()
    J = np.zeros(n, dtype=np.uint8)
    a = L.a
    infl = L.influence
    S = x.astype(float) @ infl
    fc, fe = M.colonisation, M.extinction
    conn, h = ode.conn, ode.h
    K = len(ode.times) - 1
    times, patches, wv, xv, Zs = [], [], [], [], []
    Z = 0.0
    cap = 2.0 * k
    dom = n * cap
    t = 0.0
    cand = 0
    if dom > 0:
        draws = _Draws(rng, n)
        while True:
            e, u, i = draws.next()
            t += e / dom
            if t > T:
                break
            cand += 1
            j = min(int(t / h), K - 1)
            frac = (t - j * h) / h
            sp = conn[j, i] + frac * (conn[j + 1, i] - conn[j, i])
            sx = S[i]
            wi, xi = w[i], x[i]
            v = u * cap
            if wi == xi:
                if wi:
                    rp, rx = fe[i](sp), fe[i](sx)
                else:
                    rp, rx = fc[i](sp), fc[i](sx)
                both = min(rp, rx)
                total = max(rp, rx)
                if total > cap * (1 + 1e-9):
                    raise AssertionError("dominating rate exceeded")
                if v < both:
                    nw, nx = 1 - wi, 1 - xi
                elif v < total:
                    if rp > rx:
                        nw, nx = 1 - wi, xi
                    else:
                        nw, nx = wi, 1 - xi
                else:
                    continue
            else:
                rw = fe[i](sp) if wi else fc[i](sp)
                rx = fe[i](sx) if xi else fc[i](sx)
                if rw + rx > cap * (1 + 1e-9):
                    raise AssertionError("dominating rate exceeded")
                if v < rw:
                    nw, nx = 1 - wi, xi
                elif v < rw + rx:
                    nw, nx = wi, 1 - xi
                else:
                    continue
            w[i] = nw
            if nx != xi:
                x[i] = nx
                if nx:
                    S += infl[i]
                else:
                    S -= infl[i]
                    np.maximum(S, 0.0, out=S)
            if nw != nx and not J[i]:
                J[i] = 1
                Z += a[i]
            times.append(t)
            patches.append(i)
            wv.append(nw)
            xv.append(nx)
            Zs.append(Z)
    return CoupledCtTrajectory(
        x0,
        np.array(times, dtype=float),
        np.array(patches, dtype=np.int64),
        np.array(wv, dtype=np.uint8),
        np.array(xv, dtype=np.uint8),
        np.array(Zs, dtype=float),
        J,
        T,
        cand,
        dom,
    )
