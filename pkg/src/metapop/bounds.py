"""Bound constants and the (threshold, failure probability) pairs of the
three approximation theorems.

The theorem statements write the noise constants as b and b_2; they are
identified with H and H_2 below.  Probabilities are clamped to [0, 1];
thresholds are reported raw and flagged ``vacuous`` when they exceed 1,
since no discrepancy between sub-probability measures can.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .landscape import Landscape
from .rates import RateModel, lipschitz_constants, max_rate


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class BoundConstants:
    n: int
    a_bar: float
    L: np.ndarray
    beta: np.ndarray
    A: float
    H: float
    A2: float
    H2: float
    k: float

    @property
    def ratio(self) -> float:
        """H / (A a_bar)."""
        return self.H / (self.A * self.a_bar)

    @property
    def variance_ratio(self) -> float:
        """(A_2 H + H_2 A) / H^2, the Theorem 2 variance factor."""
        return (self.A2 * self.H + self.H2 * self.A) / self.H**2

    @property
    def variance_ratio_ct(self) -> float:
        """(2 A_2 H + A H_2) / (2 H^2), its continuous-time analogue."""
        return (2.0 * self.A2 * self.H + self.A * self.H2) / (2.0 * self.H**2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["L"] = self.L.tolist()
        d["beta"] = self.beta.tolist()
        return d


def bound_constants(L: Landscape, M: RateModel) -> BoundConstants:
    n = L.n
    a = L.a.astype(float)
    s = L.s
    _, _, lip = lipschitz_constants(M, L.max_connectivity())
    as_ = a[:, None] * s  # (j, i) -> a_j s_ji
    beta = np.sqrt((as_**2).sum(axis=0) / n)
    A = float(((a * lip)[:, None] * s).sum(axis=0).max() / n)
    H = float((a * lip * beta).sum() / n)
    # A2: max over j of n^{-1} sum_i a_i^2 L_i s_ij
    A2 = float((s * (a * a * lip)[:, None]).sum(axis=0).max() / n)
    H2 = float((a * a * lip * beta).sum() / n)
    return BoundConstants(n, float(a.mean()), lip, beta, A, H, A2, H2, max_rate(L, M))


def psi(L_or_a, theta: float):
    """(psi(theta), I(theta)) with I = {i : a_i < theta a_bar}."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    a = L_or_a.a if isinstance(L_or_a, Landscape) else np.asarray(L_or_a, dtype=float)
    idx = np.flatnonzero(a < theta * a.mean())
    return idx.size / a.size, idx


def eps_n(n: int, r: float) -> float:
    """n^{-1/2} sqrt(r log n), natural log."""
    if n < 2:
        raise ValueError("eps_n needs n >= 2")
    if r < 0:
        raise ValueError("r must be non-negative")
    return math.sqrt(r * math.log(n) / n)


@dataclass
class TheoremBound:
    theorem: str
    threshold: float
    probability: float
    inputs: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return self.threshold > 1.0

    @property
    def valid(self) -> bool:
        return all(self.diagnostics.values())

    @property
    def informative(self) -> bool:
        return self.valid and not self.vacuous and self.probability < 1.0

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "threshold": self.threshold,
            "probability": self.probability,
            "vacuous": self.vacuous,
            "valid": self.valid,
            "inputs": self.inputs,
            "diagnostics": self.diagnostics,
        }


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def _need_A(C: BoundConstants):
    if C.A <= 0 or C.H <= 0:
        raise BoundError(
            "A = 0 (all Lipschitz constants vanish): the ratio H/(A a_bar) is undefined; "
            "with constant rates X and W coincide, so use the Hoeffding/VC tail directly"
        )


def _psi_value(psi_value, L, theta):
    if psi_value is not None:
        return psi_value
    if L is None:
        raise ValueError("pass either the landscape or a precomputed psi value")
    return psi(L, theta)[0]


def theorem1_bound(C: BoundConstants, n: int, m: float, T: float, V: int, theta: float, eta: float,
                   L: Landscape | None = None, psi_value: float | None = None) -> TheoremBound:
    if not eta > 0 or not theta > 0:
        raise ValueError("need eta > 0 and theta > 0")
    _need_A(C)
    steps = m * T
    if abs(steps - round(steps)) > 1e-9:
        raise ValueError("m*T must be an integer")
    ps = _psi_value(psi_value, L, theta)
    thr = ps + n ** (-0.5 + eta) * (C.ratio / theta * math.exp(C.A * T) + 1.0)
    log_first = math.log(2.0 * steps) + V * math.log(n + 1) - 2.0 * n ** (2 * eta) if steps > 0 else -math.inf
    prob = (math.exp(log_first) if log_first < 700 else math.inf) + n ** (-eta)
    inputs = dict(theta=theta, eta=eta, T=T, m=m, V=V, n=n)
    return TheoremBound("T1", thr, _clamp(prob), inputs, {})


def theorem2_bound(C: BoundConstants, n: int, m: float, T: float, V: int, theta: float, r: float,
                   L: Landscape | None = None, psi_value: float | None = None) -> TheoremBound:
    _need_A(C)
    ps = _psi_value(psi_value, L, theta)
    eps = eps_n(n, r)
    logn = math.log(n)
    diag = {
        "r <= n/log n": r <= n / logn,
        "(2r-V-1) log n >= log(m/A)": (2 * r - V - 1) * logn >= math.log(m / C.A),
    }
    thr = ps + (2.0 * C.ratio / theta * math.exp(C.A * T) + 1.0) * eps
    prob = 2 * C.A * T / n + 2 ** (V + 1) * C.A * T / n + C.variance_ratio / (n * eps)
    inputs = dict(theta=theta, r=r, T=T, m=m, V=V, n=n)
    return TheoremBound("T2", thr, _clamp(prob), inputs, diag)


def theorem3_bound(C: BoundConstants, n: int, T: float, V: int, theta: float, eta: float, alpha: float, r: float,
                   L: Landscape | None = None, psi_value: float | None = None):
    """(T3a, T3b) for the continuous-time model."""
    _need_A(C)
    ps = _psi_value(psi_value, L, theta)
    eps = eps_n(n, r)
    logn = math.log(n)
    diag = {
        "A/n <= k": C.A / n <= C.k,
        "k <= A n^alpha": C.k <= C.A * n**alpha,
        "2r > V+5+2alpha+(V+1)log2/log n": 2 * r > V + 5 + 2 * alpha + (V + 1) * math.log(2) / logn,
    }
    growth = math.exp(C.A * T)
    base = ps + 2.0 / n + eps
    head = 5.0 * (C.A * T + 1.0) / n
    a_thr = base + n ** (-0.5 + eta) * growth / theta
    a_prob = head + C.ratio * n ** (-eta) * math.sqrt(r * logn)
    b_thr = base + 2.0 * eps * C.ratio * growth / theta
    b_prob = head + C.variance_ratio_ct / (n * eps)
    inputs = dict(theta=theta, eta=eta, alpha=alpha, r=r, T=T, V=V, n=n)
    return (
        TheoremBound("T3a", a_thr, _clamp(a_prob), inputs, dict(diag)),
        TheoremBound("T3b", b_thr, _clamp(b_prob), dict(inputs), dict(diag)),
    )
