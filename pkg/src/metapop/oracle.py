"""Exact small-instance laws used as ground truth for the simulators.

Everything here is recomputed from the landscape arrays with explicit loops
rather than through the simulator code paths.  States of {0,1}^n are indexed
little-endian: patch i is bit i of the index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .landscape import Landscape
from .rates import RateModel

MAX_CHAIN_N = 6
MAX_JOINT_N = 3


class OracleSizeError(ValueError):
    pass


@dataclass
class ExactDistribution:
    """Probabilities over an enumerated state space.

    ``states[k]`` is the state with probability ``probs[k]``; for the joint
    chain each state is the (X, W, J) triple flattened to length 3n.
    """

    states: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        total = self.probs.sum()
        if abs(total - 1.0) > 1e-10:
            raise AssertionError(f"exact distribution sums to {total!r}")

    def prob_of(self, state) -> float:
        state = np.asarray(state)
        hit = np.all(self.states == state, axis=1)
        return float(self.probs[hit].sum())


def enumerate_states(n: int) -> np.ndarray:
    """All of {0,1}^n, row k holding the bits of k (patch 0 least significant)."""
    k = np.arange(2**n)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def state_index(x) -> int:
    return int(sum(int(b) << i for i, b in enumerate(x)))


def _conn(L: Landscape, x) -> list[float]:
    n = L.n
    out = []
    for i in range(n):
        tot = 0.0
        for j in range(n):
            if j != i:
                tot += float(x[j]) * float(L.a[j]) * float(L.s[j, i])
        out.append(tot / n)
    return out


def _rates(M: RateModel, S) -> tuple[list[float], list[float]]:
    C = [float(M.colonisation[i](S[i])) for i in range(len(S))]
    E = [float(M.extinction[i](S[i])) for i in range(len(S))]
    return C, E


def _check_n(n: int, cap: int):
    if n > cap:
        raise OracleSizeError(f"exact oracle limited to n <= {cap}, got {n}")


def transition_matrix(L: Landscape, M: RateModel, m: float) -> np.ndarray:
    n = L.n
    states = enumerate_states(n)
    P = np.zeros((2**n, 2**n))
    for r, x in enumerate(states):
        C, E = _rates(M, _conn(L, x))
        # probability each patch is occupied next step
        q = [1.0 - E[i] / m if x[i] else C[i] / m for i in range(n)]
        for c, y in enumerate(states):
            pr = 1.0
            for i in range(n):
                pr *= q[i] if y[i] else 1.0 - q[i]
            P[r, c] = pr
    return P


def _steps(m: float, T: float) -> int:
    k = int(round(m * T))
    if abs(m * T - k) > 1e-9:
        raise ValueError("m*T must be an integer")
    return k


def exact_chain_distribution(X0, L: Landscape, M: RateModel, m: float, T: float) -> ExactDistribution:
    """Law of X_{mT} by powering the 2^n x 2^n transition matrix."""
    _check_n(L.n, MAX_CHAIN_N)
    P = transition_matrix(L, M, m)
    pi = np.zeros(2**L.n)
    pi[state_index(X0)] = 1.0
    pi = pi @ np.linalg.matrix_power(P, _steps(m, T))
    return ExactDistribution(enumerate_states(L.n), pi)


def _det_path(p0, L: Landscape, M: RateModel, m: float, steps: int) -> list[list[float]]:
    path = [list(map(float, p0))]
    for _ in range(steps):
        p = path[-1]
        C, E = _rates(M, _conn(L, p))
        path.append([p[i] + (C[i] * (1 - p[i]) - E[i] * p[i]) / m for i in range(L.n)])
    return path


def _pair_law(x: int, w: int, qx: float, qw: float) -> dict:
    """Law of (X', W') when X' = 1[U <= qx], W' = 1[U <= qw] for one uniform U."""
    lo, hi = min(qx, qw), max(qx, qw)
    out = {(1, 1): lo, (0, 0): 1.0 - hi}
    out[(1, 0)] = max(qx - qw, 0.0)
    out[(0, 1)] = max(qw - qx, 0.0)
    return out


@dataclass
class CoupledMoment:
    mean: float
    var: float
    distribution: ExactDistribution

    @property
    def second_moment(self) -> float:
        return self.var + self.mean**2


def exact_coupled_moment(X0, L: Landscape, M: RateModel, m: float, T: float) -> CoupledMoment:
    """Exact law of (X, W, J) after mT coupled steps, and the mean and
    variance of Z = sum_i a_i J_i."""
    n = L.n
    _check_n(n, MAX_JOINT_N)
    steps = _steps(m, T)
    x0 = tuple(int(v) for v in X0)
    ppath = _det_path(x0, L, M, m, steps)
    dist = {(x0, x0, (0,) * n): 1.0}
    for t in range(steps):
        Cp, Ep = _rates(M, _conn(L, ppath[t]))
        nxt: dict = {}
        for (x, w, j), pr in dist.items():
            Cx, Ex = _rates(M, _conn(L, x))
            laws = []
            for i in range(n):
                qx = 1.0 - Ex[i] / m if x[i] else Cx[i] / m
                qw = 1.0 - Ep[i] / m if w[i] else Cp[i] / m
                laws.append(list(_pair_law(x[i], w[i], qx, qw).items()))
            for combo in itertools.product(*laws):
                q = pr
                for _, pi in combo:
                    q *= pi
                if q == 0.0:
                    continue
                x1 = tuple(c[0][0] for c in combo)
                w1 = tuple(c[0][1] for c in combo)
                j1 = tuple(int(j[i] or x1[i] != w1[i]) for i in range(n))
                key = (x1, w1, j1)
                nxt[key] = nxt.get(key, 0.0) + q
        dist = nxt
    keys = sorted(dist)
    states = np.array([k[0] + k[1] + k[2] for k in keys], dtype=np.uint8)
    probs = np.array([dist[k] for k in keys])
    a = [float(v) for v in L.a]
    Z = np.array([sum(a[i] * k[2][i] for i in range(n)) for k in keys])
    mean = float(probs @ Z)
    var = float(probs @ (Z - mean) ** 2)
    return CoupledMoment(mean, var, ExactDistribution(states, probs))


def generator(L: Landscape, M: RateModel) -> np.ndarray:
    """CTMC generator on {0,1}^n: patch i flips 0->1 at C_i(x), 1->0 at E_i(x)."""
    n = L.n
    states = enumerate_states(n)
    Q = np.zeros((2**n, 2**n))
    for r, x in enumerate(states):
        C, E = _rates(M, _conn(L, x))
        for i in range(n):
            c = r ^ (1 << i)
            Q[r, c] += E[i] if x[i] else C[i]
        Q[r, r] = -Q[r].sum()
    return Q


def uniformize(Q: np.ndarray, pi0: np.ndarray, T: float, tol: float = 1e-12) -> np.ndarray:
    """pi0 exp(QT) by uniformization at rate 1.05 max exit rate.

    The horizon is cut into pieces with Lambda * dt <= 30 so the Poisson
    weights never underflow; each piece truncates its tail below ``tol``.
    """
    exit_max = float(-np.diag(Q).min()) if Q.size else 0.0
    if T == 0 or exit_max == 0:
        return pi0.copy()
    lam = 1.05 * exit_max
    P = np.eye(Q.shape[0]) + Q / lam
    pieces = max(1, math.ceil(lam * T / 30.0))
    dt = T / pieces
    mu = lam * dt
    pi = pi0.astype(float)
    for _ in range(pieces):
        term = pi.copy()
        weight = math.exp(-mu)
        acc = weight * term
        mass = weight
        k = 0
        while 1.0 - mass > tol:
            k += 1
            term = term @ P
            weight *= mu / k
            acc += weight * term
            mass += weight
            if k > 10000:
                raise RuntimeError("uniformization series failed to converge")
        pi = acc
    return pi


def exact_ctmc_marginal(X0, L: Landscape, M: RateModel, T: float) -> ExactDistribution:
    _check_n(L.n, MAX_CHAIN_N)
    pi0 = np.zeros(2**L.n)
    pi0[state_index(X0)] = 1.0
    pi = uniformize(generator(L, M), pi0, T)
    return ExactDistribution(enumerate_states(L.n), pi)


def ctmc_marginal_expm(X0, L: Landscape, M: RateModel, T: float) -> np.ndarray:
    """Independent cross-check: pi0 expm(QT) by scaling and squaring."""
    _check_n(L.n, MAX_CHAIN_N)
    pi0 = np.zeros(2**L.n)
    pi0[state_index(X0)] = 1.0
    return pi0 @ expm(generator(L, M) * T)


def _joint_states(n: int):
    states = [s for s in itertools.product((0, 1), repeat=3 * n)]
    # J_i = 0 forces X_i = W_i
    keep = [s for s in states if all(s[2 * n + i] or s[i] == s[n + i] for i in range(n))]
    return keep, {s: k for k, s in enumerate(keep)}


def exact_coupled_ct_moment(X0, L: Landscape, M: RateModel, T: float, rtol: float = 1e-10) -> CoupledMoment:
    """Law of (X(T), W(T), J(T)) for the continuous-time coupling.

    The deterministic p(t) and the joint distribution are integrated
    together as one ODE system (DOP853, tight tolerances).
    """
    n = L.n
    _check_n(n, MAX_JOINT_N)
    states, index = _joint_states(n)
    Sx = [_rates(M, _conn(L, s[:n])) for s in states]

    def field(_, y):
        p = y[:n]
        Cp, Ep = _rates(M, _conn(L, p))
        dp = [Cp[i] * (1 - p[i]) - Ep[i] * p[i] for i in range(n)]
        pi = y[n:]
        dpi = np.zeros_like(pi)
        for k, s in enumerate(states):
            if pi[k] == 0.0:
                continue
            x, w, j = s[:n], s[n : 2 * n], s[2 * n :]
            Cx, Ex = Sx[k]
            for i in range(n):
                rx = Ex[i] if x[i] else Cx[i]
                rw = Ep[i] if w[i] else Cp[i]
                moves = []
                if x[i] == w[i]:
                    moves.append((1 - x[i], 1 - w[i], min(rx, rw)))
                    moves.append((1 - x[i], w[i], max(rx - rw, 0.0)))
                    moves.append((x[i], 1 - w[i], max(rw - rx, 0.0)))
                else:
                    moves.append((1 - x[i], w[i], rx))
                    moves.append((x[i], 1 - w[i], rw))
                for nx, nw, rate in moves:
                    if rate <= 0.0:
                        continue
                    t = list(s)
                    t[i], t[n + i] = nx, nw
                    t[2 * n + i] = int(j[i] or nx != nw)
                    dpi[index[tuple(t)]] += rate * pi[k]
                    dpi[k] -= rate * pi[k]
        return np.concatenate([dp, dpi])

    y0 = np.zeros(n + len(states))
    y0[:n] = [float(v) for v in X0]
    x0 = tuple(int(v) for v in X0)
    y0[n + index[x0 + x0 + (0,) * n]] = 1.0
    if T == 0:
        yT = y0
    else:
        sol = solve_ivp(field, (0.0, T), y0, method="DOP853", rtol=rtol, atol=1e-13)
        yT = sol.y[:, -1]
    probs = np.clip(yT[n:], 0.0, None)
    probs = probs / probs.sum()
    a = [float(v) for v in L.a]
    Z = np.array([sum(a[i] * s[2 * n + i] for i in range(n)) for s in states])
    mean = float(probs @ Z)
    var = float(probs @ (Z - mean) ** 2)
    return CoupledMoment(mean, var, ExactDistribution(np.array(states, dtype=np.uint8), probs))


def brute_force_discrepancy(pts, values_a, values_b, kind: str = "rectangles") -> float:
    """Max |n^{-1} sum_{i in S} (a_i - b_i)| over realizable traces S.

    A subset is the trace of some closed box iff its bounding box holds no
    other point, and of some lower orthant iff the orthant at its
    componentwise maximum holds no other point.  Exponential in n.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n > 16:
        raise OracleSizeError("brute-force discrepancy limited to n <= 16")
    diff = (np.asarray(values_a, float) - np.asarray(values_b, float)) / n
    best = 0.0
    for mask in range(1, 2**n):
        sub = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        if kind == "rectangles":
            lo, hi = pts[sub].min(axis=0), pts[sub].max(axis=0)
            inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        elif kind == "halflines":
            inside = np.all(pts <= pts[sub].max(axis=0), axis=1)
        else:
            raise ValueError(f"no brute-force oracle for {kind!r}")
        if np.array_equal(inside, sub):
            best = max(best, abs(float(diff[sub].sum())))
    return best
