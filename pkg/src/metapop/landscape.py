"""Patch networks: locations, weights, interaction kernels and connectivity.

A :class:`Landscape` holds ``n`` patches with locations ``z`` (``n x d``),
weights ``a`` (length ``n``) and a symmetric, non-negative kernel matrix
``s`` with zero diagonal.  The connectivity of patch ``i`` in state ``x`` is

    S_i(x) = n^{-1} sum_{j != i} x_j a_j s_ji

and is evaluated as ``x @ influence`` with ``influence = a[:, None] * s / n``
precomputed once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform


class LandscapeError(ValueError):
    """Raised for malformed patches, kernels or landscape files."""


@dataclass(frozen=True)
class Patch:
    z: tuple[float, ...]
    a: float

    def __post_init__(self):
        if len(self.z) < 1:
            raise LandscapeError("patch location must have at least one coordinate")
        if not self.a > 0:
            raise LandscapeError(f"patch weight must be positive, got {self.a}")


# --- kernels -----------------------------------------------------------------


@dataclass(frozen=True)
class Exponential:
    """s_ij = exp(-alpha |z_i - z_j|)."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise LandscapeError(f"exponential kernel needs alpha > 0, got {self.alpha}")


@dataclass(frozen=True)
class TopHat:
    """s_ij = (v(d) R^d)^{-1} 1[|z_i - z_j| <= R], v(d) the unit-ball volume."""

    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise LandscapeError(f"top-hat kernel needs R > 0, got {self.R}")


@dataclass(frozen=True)
class Ring:
    """Nearest neighbours on a cycle: s_ij = 1 iff |i - j| = 1 or {i, j} = {1, n}."""


@dataclass(frozen=True, eq=False)
class ExplicitMatrix:
    matrix: np.ndarray


KernelSpec = Union[Exponential, TopHat, Ring, ExplicitMatrix]


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _kernel_matrix(z: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    n, d = z.shape
    if isinstance(kernel, Ring):
        s = np.zeros((n, n))
        if n > 1:
            idx = np.arange(n - 1)
            s[idx, idx + 1] = 1.0
            s[idx + 1, idx] = 1.0
            s[0, n - 1] = s[n - 1, 0] = 1.0
        np.fill_diagonal(s, 0.0)
        return s
    if isinstance(kernel, ExplicitMatrix):
        s = np.array(kernel.matrix, dtype=float)
        if s.shape != (n, n):
            raise LandscapeError(f"kernel matrix has shape {s.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise LandscapeError("kernel matrix entries must be finite and non-negative")
        if np.any(np.diag(s) != 0):
            raise LandscapeError("kernel matrix must have zero diagonal")
        if not np.array_equal(s, s.T):
            raise LandscapeError("kernel matrix must be symmetric")
        return s
    # one distance per unordered pair, mirrored: bitwise symmetric
    dist = squareform(pdist(z)) if n > 1 else np.zeros((1, 1))
    if isinstance(kernel, Exponential):
        s = np.exp(-kernel.alpha * dist)
    elif isinstance(kernel, TopHat):
        s = (dist <= kernel.R) / (unit_ball_volume(d) * kernel.R**d)
    else:
        raise LandscapeError(f"unknown kernel {kernel!r}")
    np.fill_diagonal(s, 0.0)
    return s


@dataclass(frozen=True, eq=False)
class Landscape:
    """Immutable patch network.  Safe to share between simulations."""

    z: np.ndarray
    a: np.ndarray
    s: np.ndarray
    kernel: KernelSpec | None = None
    influence: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        a = np.asarray(self.a, dtype=float).reshape(-1)
        s = np.asarray(self.s, dtype=float)
        n = a.size
        if n < 1:
            raise LandscapeError("a landscape needs at least one patch")
        if z.shape[0] != n or s.shape != (n, n):
            raise LandscapeError("inconsistent shapes for z, a and s")
        if np.any(a <= 0):
            raise LandscapeError("patch weights must be positive")
        for arr in (z, a, s):
            arr.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "s", s)
        infl = a[:, None] * s / n
        infl.setflags(write=False)
        object.__setattr__(self, "influence", infl)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def d(self) -> int:
        return self.z.shape[1]

    @property
    def points(self) -> np.ndarray:
        """Patch attributes (z_i, a_i) as an ``n x (d + 1)`` array."""
        return np.column_stack([self.z, self.a])

    def max_connectivity(self) -> np.ndarray:
        """S_i(1): the largest connectivity each patch can reach."""
        return self.influence.sum(axis=0)

    def scaled(self, c: float) -> "Landscape":
        """Same dynamics with a -> c a and s -> s / c."""
        return Landscape(self.z, self.a * c, self.s / c, kernel=self.kernel)

    def permuted(self, perm: Sequence[int]) -> "Landscape":
        perm = np.asarray(perm)
        return Landscape(self.z[perm], self.a[perm], self.s[np.ix_(perm, perm)], kernel=self.kernel)


def build_landscape(patches: Sequence[Patch], kernel: KernelSpec) -> Landscape:
    if len(patches) == 0:
        raise LandscapeError("a landscape needs at least one patch")
    dims = {len(p.z) for p in patches}
    if len(dims) != 1:
        raise LandscapeError(f"patches have mixed dimensions {sorted(dims)}")
    z = np.array([p.z for p in patches], dtype=float)
    a = np.array([p.a for p in patches], dtype=float)
    return Landscape(z, a, _kernel_matrix(z, kernel), kernel=kernel)


def from_arrays(z, a, kernel: KernelSpec) -> Landscape:
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    return Landscape(z, np.asarray(a, dtype=float), _kernel_matrix(z, kernel), kernel=kernel)


def connectivity(L: Landscape, x) -> np.ndarray:
    """S_i(x) for a binary state or a probability vector ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (L.n,):
        raise LandscapeError(f"state has shape {x.shape}, expected ({L.n},)")
    if np.any(x < 0) or np.any(x > 1):
        raise LandscapeError("state entries must lie in [0, 1]")
    return x @ L.influence


# --- generators --------------------------------------------------------------


@dataclass(frozen=True)
class UniformBox:
    n: int
    d: int = 1
    seed: int = 0


@dataclass(frozen=True)
class Grid:
    n: int
    d: int = 1


@dataclass(frozen=True)
class RingLayout:
    n: int


def generate_landscape(spec, kernel: KernelSpec) -> Landscape:
    """Random or regular landscape.

    ``UniformBox`` draws locations uniformly on ``[0, n^{1/d}]^d`` with
    ``a_i = n`` (so that ``a_i / n = 1``).  ``Grid`` places ``n`` patches on
    the first ``n`` points of a unit-spaced lattice, ``RingLayout`` at the
    integers ``0..n-1``; both use ``a_i = 1``.
    """
    if spec.n < 1:
        raise LandscapeError("n must be at least 1")
    if isinstance(spec, UniformBox):
        rng = np.random.default_rng(spec.seed)
        z = rng.uniform(0.0, spec.n ** (1.0 / spec.d), size=(spec.n, spec.d))
        a = np.full(spec.n, float(spec.n))
    elif isinstance(spec, Grid):
        side = math.ceil(spec.n ** (1.0 / spec.d) - 1e-9)
        mesh = np.stack(np.meshgrid(*[np.arange(side)] * spec.d, indexing="ij"), axis=-1)
        z = mesh.reshape(-1, spec.d)[: spec.n].astype(float)
        a = np.ones(spec.n)
    elif isinstance(spec, RingLayout):
        z = np.arange(spec.n, dtype=float)[:, None]
        a = np.ones(spec.n)
    else:
        raise LandscapeError(f"unknown landscape spec {spec!r}")
    return Landscape(z, a, _kernel_matrix(z, kernel), kernel=kernel)


def equal_patch_landscape(n: int, a: float = 1.0, seed: int = 0, d: int = 1) -> Landscape:
    """All weights equal, s_ij = 1 for every pair; locations uniform on [0, 1]^d."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(size=(n, d))
    s = np.ones((n, n)) - np.eye(n)
    return Landscape(z, np.full(n, float(a)), s, kernel=ExplicitMatrix(s))


def graph_landscape(adjacency, a: float = 1.0, seed: int = 0) -> Landscape:
    """Landscape whose kernel is a 0/1 adjacency matrix."""
    s = np.asarray(adjacency, dtype=float)
    n = s.shape[0]
    z = np.random.default_rng(seed).uniform(size=(n, 1))
    return Landscape(z, np.full(n, float(a)), _kernel_matrix(z, ExplicitMatrix(s)), kernel=ExplicitMatrix(s))


# --- text format -------------------------------------------------------------


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``exponential(1.5)``, ``exponential 1.5``, ``tophat(2)`` or ``ring``."""
    parts = text.replace("(", " ").replace(")", " ").replace(",", " ").split()
    if not parts:
        raise LandscapeError("empty kernel spec")
    kind = parts[0].lower()
    try:
        if kind in ("exponential", "exp"):
            return Exponential(float(parts[1]))
        if kind in ("tophat", "top-hat"):
            return TopHat(float(parts[1]))
    except (IndexError, ValueError) as exc:
        raise LandscapeError(f"bad kernel spec {text!r}") from exc
    if kind == "ring":
        return Ring()
    raise LandscapeError(f"unknown kernel {text!r}")


def save_landscape(L: Landscape, path) -> None:
    lines = [f"{L.d} {L.n}"]
    for zi, ai in zip(L.z, L.a):
        lines.append(" ".join(repr(float(v)) for v in (*zi, ai)))
    k = L.kernel
    if isinstance(k, Exponential):
        lines.append(f"kernel exponential {k.alpha!r}")
    elif isinstance(k, TopHat):
        lines.append(f"kernel tophat {k.R!r}")
    elif isinstance(k, Ring):
        lines.append("kernel ring")
    else:
        lines.append("kernel matrix")
        lines.extend(" ".join(repr(float(v)) for v in row) for row in L.s)
    Path(path).write_text("\n".join(lines) + "\n")


def load_landscape(path) -> Landscape:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        d, n = int(rows[0][0]), int(rows[0][1])
        body = np.array([[float(v) for v in r] for r in rows[1 : 1 + n]])
    except (IndexError, ValueError) as exc:
        raise LandscapeError(f"malformed landscape file {path}") from exc
    if body.shape != (n, d + 1):
        raise LandscapeError(f"expected {n} rows of {d + 1} numbers")
    z, a = body[:, :d], body[:, d]
    rest = rows[1 + n :]
    if not rest:
        raise LandscapeError("landscape file has no kernel block")
    head = rest[0]
    if head[0] != "kernel" or len(head) < 2:
        raise LandscapeError(f"expected a kernel line, got {' '.join(head)!r}")
    if head[1] == "matrix":
        mat = np.array([[float(v) for v in r] for r in rest[1 : 1 + n]])
        kernel: KernelSpec = ExplicitMatrix(mat)
    else:
        kernel = parse_kernel(" ".join(head[1:]))
    return Landscape(z, a, _kernel_matrix(z, kernel), kernel=kernel)
