"""Discrete-time incidence function chain, its deterministic recursion, and
the shared-uniform coupling with the independent-patches chain.

Uniform-stream convention: step ``t`` consumes one ``Generator.random(n)``
call, i.e. one uniform per patch in patch order, steps in time order.  Every
simulator here follows it, so the occupancy path of :func:`simulate_ifm` is
bitwise the ``X`` component of :func:`simulate_coupled` for the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .landscape import Landscape
from .rates import RateModel, validate_timestep

_EDGE_TOL = 1e-12


def n_steps(m: float, T: float) -> int:
    steps = m * T
    k = int(round(steps))
    if abs(steps - k) > 1e-9 or k < 0:
        raise ValueError(f"m*T must be a non-negative integer, got {steps}")
    return k


def _thresholds(state: np.ndarray, C: np.ndarray, E: np.ndarray, m: float) -> np.ndarray:
    # occupied: survive iff U <= 1 - E/m; empty: colonised iff U <= C/m
    return np.where(state == 1, 1.0 - E / m, C / m)


def step_deterministic(p, L: Landscape, M: RateModel, m: float) -> np.ndarray:
    """One step of p_i <- p_i + m^{-1} C_i(p)(1 - p_i) - m^{-1} E_i(p) p_i."""
    p = np.asarray(p, dtype=float)
    S = p @ L.influence
    C = M.colonisation_rates(S)
    E = M.extinction_rates(S)
    out = p + (C * (1.0 - p) - E * p) / m
    if out.min() < -_EDGE_TOL or out.max() > 1.0 + _EDGE_TOL:
        raise AssertionError("deterministic step left [0, 1]; timestep precondition violated")
    return np.clip(out, 0.0, 1.0)


def step_coupled(X, W, p, U, L: Landscape, M: RateModel, m: float):
    """Advance (X, W, p) by one step using the same uniforms for X and W."""
    X = np.asarray(X)
    W = np.asarray(W)
    p = np.asarray(p, dtype=float)
    Sx = X.astype(float) @ L.influence
    Sp = p @ L.influence
    qx = _thresholds(X, M.colonisation_rates(Sx), M.extinction_rates(Sx), m)
    qw = _thresholds(W, M.colonisation_rates(Sp), M.extinction_rates(Sp), m)
    X1 = (U <= qx).astype(np.uint8)
    W1 = (U <= qw).astype(np.uint8)
    return X1, W1, step_deterministic(p, L, M, m)


@dataclass
class CoupledTrajectory:
    """Synchronised paths of the chain X, the independent-patches chain W,
    the deterministic recursion p and the disagreement indicator J.

    Row ``k`` of each array holds the state after ``k`` steps; ``times``
    gives the corresponding model time ``k / m``.
    """

    X: np.ndarray
    W: np.ndarray
    p: np.ndarray
    J: np.ndarray
    m: float
    seed: object = None
    order: str = "one uniform per patch per step; patches ascending within a step"
    times: np.ndarray = field(init=False)

    def __post_init__(self):
        self.times = np.arange(self.X.shape[0]) / self.m

    def weighted_disagreement(self, a) -> np.ndarray:
        """sum_i a_i J_{i,t} for every t."""
        return self.J @ np.asarray(a, dtype=float)


def simulate_coupled(X0, L: Landscape, M: RateModel, m: float, T: float, seed=None) -> CoupledTrajectory:
    """Coupled run from X_0 = W_0 = p_0 = X0 for m*T steps."""
    validate_timestep(M, L, m)
    steps = n_steps(m, T)
    rng = np.random.default_rng(seed)
    n = L.n
    X = np.empty((steps + 1, n), dtype=np.uint8)
    W = np.empty_like(X)
    J = np.zeros_like(X)
    p = np.empty((steps + 1, n))
    X[0] = W[0] = np.asarray(X0, dtype=np.uint8)
    p[0] = X[0]
    for t in range(steps):
        U = rng.random(n)
        X[t + 1], W[t + 1], p[t + 1] = step_coupled(X[t], W[t], p[t], U, L, M, m)
        J[t + 1] = J[t] | (X[t + 1] != W[t + 1])
    return CoupledTrajectory(X, W, p, J, m, seed)


def simulate_ifm(X0, L: Landscape, M: RateModel, m: float, T: float, seed=None) -> np.ndarray:
    """Occupancy path of the incidence function chain, shape (m*T + 1, n)."""
    validate_timestep(M, L, m)
    steps = n_steps(m, T)
    rng = np.random.default_rng(seed)
    X = np.empty((steps + 1, L.n), dtype=np.uint8)
    X[0] = np.asarray(X0, dtype=np.uint8)
    for t in range(steps):
        U = rng.random(L.n)
        S = X[t].astype(float) @ L.influence
        q = _thresholds(X[t], M.colonisation_rates(S), M.extinction_rates(S), m)
        X[t + 1] = U <= q
    return X


def simulate_deterministic(p0, L: Landscape, M: RateModel, m: float, T: float) -> np.ndarray:
    validate_timestep(M, L, m)
    steps = n_steps(m, T)
    p = np.empty((steps + 1, L.n))
    p[0] = p0
    for t in range(steps):
        p[t + 1] = step_deterministic(p[t], L, M, m)
    return p


@dataclass
class CoupledBatch:
    """Many coupled replicates; arrays have shape (steps + 1, reps, n)."""

    X: np.ndarray
    W: np.ndarray
    J: np.ndarray
    p: np.ndarray


def simulate_coupled_batch(X0, L: Landscape, M: RateModel, m: float, T: float, reps: int, seed=None) -> CoupledBatch:
    """Vectorised coupled replicates drawn from one generator.

    Step ``t`` draws a ``(reps, n)`` block of uniforms; row ``r`` drives
    replicate ``r``.  Each replicate has the law of :func:`simulate_coupled`,
    but its uniforms differ from a per-replicate seeded run.
    """
    validate_timestep(M, L, m)
    steps = n_steps(m, T)
    rng = np.random.default_rng(seed)
    n = L.n
    p = simulate_deterministic(np.asarray(X0, dtype=float), L, M, m, T)
    Sp = p @ L.influence
    Cp, Ep = M.colonisation_rates(Sp), M.extinction_rates(Sp)
    X = np.empty((steps + 1, reps, n), dtype=np.uint8)
    W = np.empty_like(X)
    J = np.zeros_like(X)
    X[0] = W[0] = np.asarray(X0, dtype=np.uint8)
    for t in range(steps):
        U = rng.random((reps, n))
        Sx = X[t].astype(float) @ L.influence
        qx = _thresholds(X[t], M.colonisation_rates(Sx), M.extinction_rates(Sx), m)
        qw = _thresholds(W[t], Cp[t], Ep[t], m)
        X[t + 1] = U <= qx
        W[t + 1] = U <= qw
        J[t + 1] = J[t] | (X[t + 1] != W[t + 1])
    return CoupledBatch(X, W, J, p)
