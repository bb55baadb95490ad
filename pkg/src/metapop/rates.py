"""Colonisation and extinction rates as functions of connectivity.

Rates come from a closed set of parametric families so that Lipschitz
constants and suprema over a connectivity range ``[0, s_max]`` are known in
closed form.  Every family instance is callable on floats and on arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .landscape import Landscape


@dataclass(frozen=True)
class Linear:
    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"linear rate needs lam >= 0, got {self.lam}")

    def __call__(self, s):
        return self.lam * s

    def lipschitz(self, s_max: float) -> float:
        return abs(self.lam)

    def supremum(self, s_max: float) -> float:
        return self.lam * s_max

    def __str__(self):
        return f"linear({self.lam!r})"


@dataclass(frozen=True)
class Constant:
    c: float

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError(f"constant rate must be non-negative, got {self.c}")

    def __call__(self, s):
        return self.c + 0.0 * s

    def lipschitz(self, s_max: float) -> float:
        return 0.0

    def supremum(self, s_max: float) -> float:
        return self.c

    def __str__(self):
        return f"const({self.c!r})"


def _hill_slope(y: float, s_max: float) -> float:
    # f'(s) = 2 s y^2 / (s^2 + y^2)^2 increases up to s = y / sqrt(3), then decreases
    s = min(s_max, y / math.sqrt(3.0))
    return 2.0 * s * y * y / (s * s + y * y) ** 2


@dataclass(frozen=True)
class Hill:
    """f(s) = s^2 / (s^2 + y^2)."""

    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError(f"Hill half-saturation must be positive, got {self.y}")

    def __call__(self, s):
        s2 = s * s
        return s2 / (s2 + self.y * self.y)

    def lipschitz(self, s_max: float) -> float:
        return _hill_slope(self.y, s_max)

    def supremum(self, s_max: float) -> float:
        return self(float(s_max))

    def __str__(self):
        return f"hill({self.y!r})"


@dataclass(frozen=True)
class RescueExtinction:
    """Extinction reduced by connectivity: f(s) = e (1 - s^2 / (s^2 + y^2))."""

    e: float
    y: float

    def __post_init__(self):
        if not self.e >= 0:
            raise ValueError(f"rescue extinction level must be non-negative, got {self.e}")
        if not self.y > 0:
            raise ValueError(f"rescue half-saturation must be positive, got {self.y}")

    def __call__(self, s):
        yy = self.y * self.y
        return self.e * yy / (s * s + yy)

    def lipschitz(self, s_max: float) -> float:
        return self.e * _hill_slope(self.y, s_max)

    def supremum(self, s_max: float) -> float:
        return self.e

    def __str__(self):
        return f"rescue({self.e!r}, {self.y!r})"


RateFamily = Union[Linear, Constant, Hill, RescueExtinction]


class TimestepError(ValueError):
    """m^{-1} times a rate supremum exceeds 1 at some patch."""

    def __init__(self, patch: int, supremum: float, m: float):
        self.patch = patch
        self.supremum = supremum
        self.m = m
        super().__init__(
            f"patch {patch}: rate supremum {supremum:.6g} exceeds m = {m:.6g}"
        )


def _per_patch(fam, n: int) -> tuple:
    if isinstance(fam, (list, tuple)):
        if len(fam) != n:
            raise ValueError(f"expected {n} per-patch families, got {len(fam)}")
        return tuple(fam)
    return (fam,) * n


class RateModel:
    """Per-patch colonisation and extinction families.

    ``colonisation`` and ``extinction`` may each be a single family (shared
    by all patches) or a sequence of length ``n``.
    """

    def __init__(self, colonisation, extinction, n: int):
        self.n = n
        self.colonisation = _per_patch(colonisation, n)
        self.extinction = _per_patch(extinction, n)
        self._c_groups = self._group(self.colonisation)
        self._e_groups = self._group(self.extinction)

    @staticmethod
    def _group(fams):
        groups: dict = {}
        for i, f in enumerate(fams):
            groups.setdefault(f, []).append(i)
        if len(groups) == 1:
            return [(next(iter(groups)), slice(None))]
        return [(f, np.array(idx)) for f, idx in groups.items()]

    @property
    def homogeneous(self) -> bool:
        return len(self._c_groups) == 1 and len(self._e_groups) == 1

    def __repr__(self):
        return f"RateModel(n={self.n}, C={self.colonisation[0]}, E={self.extinction[0]}, homogeneous={self.homogeneous})"

    @staticmethod
    def _apply(groups, S):
        if len(groups) == 1:
            return np.asarray(groups[0][0](S), dtype=float)
        out = np.empty_like(S, dtype=float)
        for f, idx in groups:
            out[..., idx] = f(S[..., idx])
        return out

    def colonisation_rates(self, S) -> np.ndarray:
        return self._apply(self._c_groups, np.asarray(S, dtype=float))

    def extinction_rates(self, S) -> np.ndarray:
        return self._apply(self._e_groups, np.asarray(S, dtype=float))

    def rates_at(self, idx, S_sub) -> tuple[np.ndarray, np.ndarray]:
        """(C, E) for the patches ``idx`` given their connectivities."""
        if self.homogeneous:
            return self.colonisation[0](S_sub), self.extinction[0](S_sub)
        C = np.array([self.colonisation[j](s) for j, s in zip(idx, S_sub)])
        E = np.array([self.extinction[j](s) for j, s in zip(idx, S_sub)])
        return C, E

    def per_patch(self, which: str, s_max) -> tuple[np.ndarray, np.ndarray]:
        """(Lipschitz constants, suprema) on [0, s_max_i] for 'C' or 'E'."""
        fams = self.colonisation if which == "C" else self.extinction
        s_max = np.broadcast_to(np.asarray(s_max, dtype=float), (self.n,))
        lip = np.array([f.lipschitz(float(s)) for f, s in zip(fams, s_max)])
        sup = np.array([f.supremum(float(s)) for f, s in zip(fams, s_max)])
        return lip, sup


def eval_rates(M: RateModel, S) -> tuple[np.ndarray, np.ndarray]:
    S = np.asarray(S, dtype=float)
    if np.any(S < 0):
        raise ValueError("connectivity must be non-negative")
    return M.colonisation_rates(S), M.extinction_rates(S)


def lipschitz_constants(M: RateModel, s_max) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic (L(C), L(E), L(C) + L(E)) on [0, s_max_i] per patch."""
    lc, _ = M.per_patch("C", s_max)
    le, _ = M.per_patch("E", s_max)
    return lc, le, lc + le


def rate_suprema(M: RateModel, L: Landscape) -> tuple[np.ndarray, np.ndarray]:
    s_max = L.max_connectivity()
    return M.per_patch("C", s_max)[1], M.per_patch("E", s_max)[1]


def max_rate(L: Landscape, M: RateModel) -> float:
    """k(C, E): the largest colonisation or extinction rate any patch can see."""
    sup_c, sup_e = rate_suprema(M, L)
    return float(max(sup_c.max(), sup_e.max()))


def validate_timestep(M: RateModel, L: Landscape, m: float) -> None:
    """Raise :class:`TimestepError` unless m^{-1} C_i, m^{-1} E_i <= 1 everywhere."""
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    sup = np.maximum(*rate_suprema(M, L))
    bad = np.flatnonzero(sup > m)
    if bad.size:
        i = int(bad[0])
        raise TimestepError(i, float(sup[i]), m)


# --- config syntax -----------------------------------------------------------

_CALL = re.compile(r"^\s*([a-zA-Z_]+)\s*\(([^)]*)\)\s*$")


def parse_family(text: str) -> RateFamily:
    """``linear(2.0)``, ``const(1.0)``, ``hill(0.5)`` or ``rescue(1.0, 0.5)``."""
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse rate family {text!r}")
    name = m.group(1).lower()
    args = [float(v) for v in m.group(2).split(",") if v.strip()]
    table = {
        "linear": (Linear, 1),
        "const": (Constant, 1),
        "constant": (Constant, 1),
        "hill": (Hill, 1),
        "rescue": (RescueExtinction, 2),
    }
    if name not in table:
        raise ValueError(f"unknown rate family {name!r}")
    cls, nargs = table[name]
    if len(args) != nargs:
        raise ValueError(f"{name} takes {nargs} argument(s), got {len(args)}")
    return cls(*args)


def parse_rates(text: str, n: int) -> RateModel:
    """Parse a rates config.

    Lines are ``colonisation = <family>`` and ``extinction = <family>``;
    ``colonisation[i] = <family>`` overrides patch ``i`` (1-based).
    """
    base: dict = {}
    overrides: dict = {"colonisation": {}, "extinction": {}}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        km = re.match(r"^(colonisation|colonization|extinction)(?:\[(\d+)\])?$", key)
        if not km:
            raise ValueError(f"unknown rates key {key!r}")
        which = "extinction" if km.group(1) == "extinction" else "colonisation"
        fam = parse_family(value)
        if km.group(2) is None:
            base[which] = fam
        else:
            idx = int(km.group(2))
            if not 1 <= idx <= n:
                raise ValueError(f"patch index {idx} outside 1..{n}")
            overrides[which][idx - 1] = fam
    if set(base) != {"colonisation", "extinction"}:
        raise ValueError("rates config needs both colonisation and extinction")
    fams = {}
    for which in ("colonisation", "extinction"):
        if overrides[which]:
            per = [base[which]] * n
            for i, f in overrides[which].items():
                per[i] = f
            fams[which] = per
        else:
            fams[which] = base[which]
    return RateModel(fams["colonisation"], fams["extinction"], n)


def format_rates(M: RateModel) -> str:
    lines = [f"colonisation = {M.colonisation[0]}", f"extinction = {M.extinction[0]}"]
    for which, fams in (("colonisation", M.colonisation), ("extinction", M.extinction)):
        for i, f in enumerate(fams):
            if f != fams[0]:
                lines.append(f"{which}[{i + 1}] = {f}")
    return "\n".join(lines) + "\n"
