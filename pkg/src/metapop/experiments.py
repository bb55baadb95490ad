"""Config-driven experiments: contact-process divergence, Poisson landscapes,
theorem falsification, n-convergence and bound sweeps.

Replicate ``k`` of stream ``g`` (one stream per n or R value) runs with seed
``base ^ splitmix64((g << 32) | k)``, so results do not depend on execution
order or on the number of workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .bounds import BoundError, bound_constants, psi, theorem1_bound, theorem2_bound, theorem3_bound
from .continuous import integrate_ode, simulate_coupled_ct, simulate_ctmc
from .discrete import simulate_coupled
from .landscape import (
    Grid,
    Landscape,
    Ring,
    RingLayout,
    TopHat,
    UniformBox,
    equal_patch_landscape,
    generate_landscape,
    load_landscape,
    parse_kernel,
    unit_ball_volume,
)
from .measures import VCFamily, sup_discrepancy_path, tv_distance
from .rates import Constant, Linear, RateModel, parse_family

_MASK = (1 << 64) - 1
KINDS = ("contact", "poisson", "convergence", "theorem-verify", "bound-sweep")
_ALIASES = {"verify": "theorem-verify", "sweep": "bound-sweep"}


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def replicate_seed(base: int, rep: int, stream: int = 0) -> int:
    return (int(base) ^ splitmix64((stream << 32) | rep)) & _MASK


# --- config ------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    kind: str
    landscape: str = "equal"  # equal | ring | uniform | grid | file
    landscape_file: str | None = None
    kernel: str = "exponential(1.0)"
    d: int = 1
    landscape_seed: int = 0
    colonisation: str = "linear(0.5)"
    extinction: str = "const(0.5)"
    n: list = field(default_factory=lambda: [100])
    m: float = 1.0
    T: float = 1.0
    reps: int = 100
    seed: int = 0
    family: str = "rectangles"
    V: int | None = None
    dynamics: str = "discrete"  # discrete | continuous
    theorems: list = field(default_factory=list)
    theta: list = field(default_factory=lambda: [1.0])
    eta: list = field(default_factory=lambda: [0.25])
    r: list = field(default_factory=lambda: [3.0])
    alpha: list = field(default_factory=lambda: [0.5])
    lam: float = 1.0
    Rd: list = field(default_factory=lambda: [50.0, 200.0, 800.0])
    cap_factor: float = 50.0
    ode_T: float = 50.0
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        self.kind = _ALIASES.get(self.kind, self.kind)
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.dynamics not in ("discrete", "continuous"):
            raise ValueError("dynamics must be discrete or continuous")

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("output", None)
        d.pop("workers", None)
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def family_for(self, L: Landscape) -> VCFamily:
        return VCFamily(self.family, L.d + 1)

    def vc_dim(self, L: Landscape) -> int:
        return self.V if self.V is not None else self.family_for(L).V


_LIST_KEYS = {"n": int, "theorems": str, "theta": float, "eta": float, "r": float, "alpha": float, "Rd": float}
_KEY_ALIASES = {"lambda": "lam", "colonization": "colonisation", "R^d": "Rd", "rd": "Rd", "t": "T", "v": "V"}


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Flat ``key = value`` lines; lists are comma separated; ``#`` comments."""
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    vals: dict[str, Any] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"expected key = value, got {raw!r}")
        key = key.strip()
        key = _KEY_ALIASES.get(key, _KEY_ALIASES.get(key.lower(), key))
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        vals[key] = _convert(key, value.strip(), types[key])
    vals.update({k: v for k, v in overrides.items() if v is not None})
    if "kind" not in vals:
        raise ValueError("config needs a kind")
    return ExperimentConfig(**vals)


def _convert(key: str, value: str, typ: str):
    if key in _LIST_KEYS:
        conv = _LIST_KEYS[key]
        return [conv(float(v)) if conv is int else conv(v.strip()) for v in value.split(",") if v.strip()]
    if "int" in typ and "None" in typ:
        return None if value.lower() == "none" else int(value)
    if typ.startswith("int"):
        return int(float(value))
    if typ.startswith("float"):
        return float(value)
    if "None" in typ and value.lower() == "none":
        return None
    return value


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)


# --- results -----------------------------------------------------------------


@dataclass
class ExperimentResult:
    kind: str
    config: ExperimentConfig
    records: list
    aggregates: list
    summary: dict
    bounds: dict
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.manifest:
            self.manifest = build_manifest(self.config)

    def write(self, outdir) -> Path:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", self.records)
        _write_csv(out / "aggregates.csv", self.aggregates)
        _dump(out / "bounds.json", self.bounds)
        _dump(out / "summary.json", self.summary)
        _dump(out / "manifest.json", self.manifest)
        return out


def build_manifest(cfg: ExperimentConfig) -> dict:
    import numba
    import scipy

    return {
        "kind": cfg.kind,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "seed_rule": "base ^ splitmix64((stream << 32) | replicate)",
        "versions": {
            "metapop": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
    }


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write_csv(path: Path, rows: list):
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    return o


def _dump(path: Path, obj):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


# --- replicate dispatch ------------------------------------------------------

_CTX: dict = {}


def _init_worker(fn, ctx):
    _CTX["fn"], _CTX["ctx"] = fn, ctx


def _call(rep):
    return _CTX["fn"](_CTX["ctx"], rep)


def run_replicates(fn: Callable, ctx, reps: int, workers: int = 1) -> list:
    """[fn(ctx, k) for k in range(reps)], optionally across processes.
    Output order is the replicate order either way."""
    if workers <= 1 or reps == 1:
        return [fn(ctx, k) for k in range(reps)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(fn, ctx)) as ex:
        return list(ex.map(_call, range(reps), chunksize=max(1, reps // (4 * workers))))


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.unique(x).size < 2:
        raise ValueError("a slope needs at least two distinct x values")
    if np.any(y <= 0) or np.any(x <= 0):
        raise ValueError("log-log slope needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# --- model construction --------------------------------------------------------


def make_landscape(cfg: ExperimentConfig, n: int) -> Landscape:
    kind = cfg.landscape
    if kind == "equal":
        return equal_patch_landscape(n, seed=cfg.landscape_seed, d=cfg.d)
    if kind == "ring":
        return generate_landscape(RingLayout(n), Ring())
    if kind == "uniform":
        return generate_landscape(UniformBox(n, cfg.d, cfg.landscape_seed), parse_kernel(cfg.kernel))
    if kind == "grid":
        return generate_landscape(Grid(n, cfg.d), parse_kernel(cfg.kernel))
    if kind == "file":
        if not cfg.landscape_file:
            raise ValueError("landscape = file needs landscape_file")
        return load_landscape(cfg.landscape_file)
    raise ValueError(f"unknown landscape kind {kind!r}")


def make_rates(cfg: ExperimentConfig, L: Landscape) -> RateModel:
    if cfg.landscape == "ring" and cfg.kind == "convergence":
        # bounded influence: rate lam per occupied neighbour
        return contact_rates(L.n, cfg.lam)
    return RateModel(parse_family(cfg.colonisation), parse_family(cfg.extinction), L.n)


def contact_rates(n: int, lam: float) -> RateModel:
    """C_i = lam (x_{i-1} + x_{i+1}), E_i = 1 on the ring with a_i = 1."""
    return RateModel(Linear(lam * n), Constant(1.0), n)


# --- contact process ---------------------------------------------------------

_TV_TIMES = (1.0, 5.0, 20.0)


def _contact_rep(ctx, rep):
    L, M, cap, seed, stream, ode = ctx
    s = replicate_seed(seed, rep, stream)
    path = simulate_ctmc(np.ones(L.n, dtype=np.uint8), L, M, cap, seed=s)
    t_ext = path.extinction_time
    grid = [t for t in _TV_TIMES if t <= cap]
    states = path.states_at(grid)
    rec = {
        "n": L.n,
        "rep": rep,
        "seed": s,
        "extinction_time": t_ext if t_ext is not None else math.nan,
        "censored": t_ext is None,
        "events": path.n_events,
    }
    for t, x in zip(_TV_TIMES, states):
        rec[f"tv_t{t:g}"] = tv_distance(x, ode.at(min(t, ode.T)))
    return rec


def run_contact_experiment(n, lam: float = 1.0, reps: int = 200, seed: int = 0, *, cap_factor: float = 50.0,
                           ode_T: float = 50.0, workers: int = 1, config: ExperimentConfig | None = None) -> ExperimentResult:
    """Ring contact process: CTMC extinction times against the ODE equilibrium."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    ns = [int(v) for v in np.atleast_1d(n)]
    cfg = config or ExperimentConfig("contact", landscape="ring", n=ns, lam=lam, reps=reps, seed=seed,
                                     cap_factor=cap_factor, ode_T=ode_T, workers=workers)
    records, aggs, bounds = [], [], {}
    for g, nn in enumerate(ns):
        L = generate_landscape(RingLayout(nn), Ring())
        M = contact_rates(nn, lam)
        cap = cap_factor * math.log(nn)
        ode = integrate_ode(np.ones(nn), L, M, max(ode_T, max(_TV_TIMES)))
        recs = run_replicates(_contact_rep, (L, M, cap, seed, g, ode), reps, workers)
        records += recs
        times = np.array([r["extinction_time"] if not r["censored"] else math.inf for r in recs])
        p_end = ode.at(ode_T)
        med = float(np.median(times))
        aggs.append({
            "n": nn,
            "log_n": math.log(nn),
            "median_extinction_time": med,
            "mean_extinction_time": float(np.mean(times[np.isfinite(times)])) if np.isfinite(times).any() else math.nan,
            "censored_fraction": float(np.mean(~np.isfinite(times))),
            "cap": cap,
            "ode_terminal_min": float(p_end.min()),
            "ode_terminal_max": float(p_end.max()),
            "ode_equilibrium": 1.0 - 1.0 / (2.0 * lam) if lam > 0.5 else 0.0,
            "mean_tv_t5": float(np.mean([r["tv_t5"] for r in recs])),
        })
        C = bound_constants(L, M)
        bounds[str(nn)] = {"constants": C.to_dict()}
    med = np.array([a["median_extinction_time"] for a in aggs])
    logn = np.array([a["log_n"] for a in aggs])
    summary = {"lambda": lam, "ode_equilibrium": aggs[0]["ode_equilibrium"]}
    if len(ns) >= 2 and np.all(np.isfinite(med)):
        summary["slope_log_median_vs_log_log_n"] = loglog_slope(logn, med)
        summary["slope_median_vs_log_n"] = float(np.polyfit(logn, med, 1)[0])
    summary["ode_max_abs_error"] = float(max(max(abs(a["ode_terminal_min"] - a["ode_equilibrium"]),
                                                  abs(a["ode_terminal_max"] - a["ode_equilibrium"])) for a in aggs))
    return ExperimentResult("contact", cfg, records, aggs, summary, bounds)


# --- Poisson landscape ---------------------------------------------------------


_W_DIAG_REPS = 10


def _poisson_rep(ctx, rep):
    L, M, T, seed, stream, ode, family, Rd = ctx
    s = replicate_seed(seed, rep, stream)
    tr = simulate_coupled_ct(np.ones(L.n, dtype=np.uint8), L, M, T, seed=s, ode=ode)
    W, X = tr.states_at([T])
    p = ode.at(T)
    sup, exact = sup_discrepancy_path(L.points, X.astype(float), p[None, :], family)
    # the W-vs-p sampling floor is a diagnostic; a few replicates suffice
    sup_w = sup_discrepancy_path(L.points, W.astype(float), p[None, :], family)[0] if rep < _W_DIAG_REPS else [math.nan]
    return {
        "Rd": Rd,
        "rep": rep,
        "seed": s,
        "t": T,
        "sup_rect": float(sup[0]),
        "sup_rect_W": float(sup_w[0]),
        "exact": exact,
        "tv": tv_distance(X[0], p),
        "J_frac": tr.Z_at(T) / L.a.sum(),
        "events": len(tr.times),
    }


def run_poisson_experiment(n: int = 4000, d: int = 2, Rd=(50.0, 200.0, 800.0), T: float = 2.0, reps: int = 50,
                           seed: int = 0, *, extinction: float = 0.5, landscape_seed: int = 0, theta: float = 1.0,
                           eta: float = 0.25, alpha: float = 0.5, r: float | None = None, workers: int = 1,
                           config: ExperimentConfig | None = None) -> ExperimentResult:
    """Uniform patches on [0, n^{1/d}]^d, top-hat kernel of volume R^d v(d),
    a_i = n, f_C(s) = s and constant extinction; coupled CTMC runs from the
    all-occupied state, sup-rectangle discrepancy of X(T) against p(T)."""
    Rds = [float(v) for v in np.atleast_1d(Rd)]
    cfg = config or ExperimentConfig("poisson", landscape="uniform", d=d, n=[n], Rd=Rds, T=T, reps=reps, seed=seed,
                                     landscape_seed=landscape_seed, extinction=f"const({extinction})",
                                     colonisation="linear(1.0)", theta=[theta], eta=[eta], alpha=[alpha],
                                     workers=workers)
    records, aggs, bounds = [], [], {}
    vd = unit_ball_volume(d)
    for g, rd in enumerate(Rds):
        R = rd ** (1.0 / d)
        L = generate_landscape(UniformBox(n, d, landscape_seed), TopHat(R))
        M = RateModel(Linear(1.0), parse_family(cfg.extinction), n)
        family = VCFamily("rectangles", d + 1)
        ode = integrate_ode(np.ones(n), L, M, T)
        recs = run_replicates(_poisson_rep, (L, M, T, seed, g, ode, family, rd), reps, workers)
        records += recs
        deg = (L.s > 0).sum(axis=0)
        C = bound_constants(L, M)
        V = family.V
        rr = r if r is not None else _min_r_theorem3(V, alpha, n)
        try:
            b3 = [b.to_dict() for b in theorem3_bound(C, n, T, V, theta, eta, alpha, rr, L=L)]
        except BoundError as exc:
            b3 = str(exc)
        bounds[f"{rd:g}"] = {"constants": _brief(C), "theorem3": b3}
        sups = np.array([x["sup_rect"] for x in recs])
        aggs.append({
            "Rd": rd,
            "R": R,
            "mean_sup_rect": float(sups.mean()),
            "sd_sup_rect": float(sups.std(ddof=1)) if sups.size > 1 else 0.0,
            "mean_sup_rect_W": float(np.nanmean([x["sup_rect_W"] for x in recs])),
            "mean_tv": float(np.mean([x["tv"] for x in recs])),
            "mean_J_frac": float(np.mean([x["J_frac"] for x in recs])),
            "max_degree": int(deg.max()),
            "max_degree_ratio": float(deg.max() / (vd * rd)),
            "A": C.A,
            "H_over_A_abar": C.ratio,
            "sqrt_log_n_over_Rd": math.sqrt(math.log(n) / rd),
        })
    summary = {"n": n, "d": d, "T": T}
    if len(Rds) >= 2:
        summary["slope_mean_sup_vs_Rd"] = loglog_slope(Rds, [a["mean_sup_rect"] for a in aggs])
        # R-dependent part of the error: fraction of patches where X and W have split
        if all(a["mean_J_frac"] > 0 for a in aggs):
            summary["slope_disagreement_vs_Rd"] = loglog_slope(Rds, [a["mean_J_frac"] for a in aggs])
    return ExperimentResult("poisson", cfg, records, aggs, summary, bounds)


def _min_r_theorem3(V: int, alpha: float, n: int) -> float:
    """Smallest half-integer r with 2r > V + 5 + 2 alpha + (V+1) log 2 / log n."""
    need = (V + 5 + 2 * alpha + (V + 1) * math.log(2) / math.log(n)) / 2
    return math.floor(2 * need + 1) / 2


def _brief(C) -> dict:
    d = C.to_dict()
    for k in ("L", "beta"):
        v = np.asarray(d.pop(k))
        d[f"{k}_min"], d[f"{k}_max"] = float(v.min()), float(v.max())
    return d


# --- theorem verification ----------------------------------------------------


def _path_sup(L: Landscape, family, X_rows, p_rows) -> tuple[float, bool]:
    sups, exact = sup_discrepancy_path(L.points, X_rows, p_rows, family)
    return float(sups.max()), exact


def _verify_rep(ctx, rep):
    L, M, cfg, stream, ode, family = ctx
    s = replicate_seed(cfg.seed, rep, stream)
    x0 = np.ones(L.n, dtype=np.uint8)
    if cfg.dynamics == "discrete":
        tr = simulate_coupled(x0, L, M, cfg.m, cfg.T, seed=s)
        sup, exact = _path_sup(L, family, tr.X[1:].astype(float), tr.p[1:])
        z = float(tr.weighted_disagreement(L.a)[-1])
    else:
        tr = simulate_coupled_ct(x0, L, M, cfg.T, seed=s, ode=ode)
        xp = tr.x_path()
        # evaluation times: right after every X event, plus the ODE grid
        t_eval = np.union1d(xp.times, ode.times)
        X = xp.states_at(t_eval).astype(float)
        P = np.array([ode.at(t) for t in t_eval])
        sup, exact = _path_sup(L, family, X, P)
        z = tr.Z_at(cfg.T)
    return {"n": L.n, "rep": rep, "seed": s, "max_sup": sup, "exact": exact, "Z_T": z}


def theorem_bounds(cfg: ExperimentConfig, L: Landscape, M: RateModel) -> list:
    """Every requested theorem at every grid point of (theta, eta, r, alpha)."""
    C = bound_constants(L, M)
    V = cfg.vc_dim(L)
    n = L.n
    out = []
    for th in cfg.theta:
        ps = psi(L, th)[0]
        for name in cfg.theorems:
            if name == "T1":
                out += [theorem1_bound(C, n, cfg.m, cfg.T, V, th, eta, psi_value=ps) for eta in cfg.eta]
            elif name == "T2":
                out += [theorem2_bound(C, n, cfg.m, cfg.T, V, th, r, psi_value=ps) for r in cfg.r]
            elif name in ("T3", "T3a", "T3b"):
                for eta in cfg.eta:
                    for al in cfg.alpha:
                        for r in cfg.r:
                            pair = theorem3_bound(C, n, cfg.T, V, th, eta, al, r, psi_value=ps)
                            out += [b for b in pair if name == "T3" or b.theorem == name]
            else:
                raise ValueError(f"unknown theorem {name!r}")
    return out


def run_theorem_verification(config: ExperimentConfig) -> ExperimentResult:
    """Falsification harness: observed frequency of max_t sup_B |X_t{B} - p_t{B}|
    exceeding each theorem threshold, against the theorem's failure probability.
    Vacuous or precondition-violating bounds are reported but not tested."""
    cfg = config
    if not cfg.theorems:
        cfg.theorems = ["T1", "T2"] if cfg.dynamics == "discrete" else ["T3"]
    records, aggs, bounds = [], [], {}
    summary = {"all_pass": True, "tested": 0}
    for g, nn in enumerate(cfg.n):
        L = make_landscape(cfg, nn)
        M = make_rates(cfg, L)
        family = cfg.family_for(L)
        ode = integrate_ode(np.ones(L.n), L, M, cfg.T) if cfg.dynamics == "continuous" else None
        recs = run_replicates(_verify_rep, (L, M, cfg, g, ode, family), cfg.reps, cfg.workers)
        records += recs
        sups = np.array([x["max_sup"] for x in recs])
        bounds[str(nn)] = {"constants": _brief(bound_constants(L, M))}
        try:
            tb = theorem_bounds(cfg, L, M)
        except BoundError as exc:
            # constant rates: X and W coincide and only the sampling term remains
            bounds[str(nn)]["error"] = str(exc)
            tb = []
        bounds[str(nn)]["bounds"] = [b.to_dict() for b in tb]
        for b in tb:
            freq = float(np.mean(sups > b.threshold))
            testable = b.valid and not b.vacuous and b.probability < 0.05
            tol = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / cfg.reps) if testable else math.nan
            ok = freq <= tol if testable else None
            if testable:
                summary["tested"] += 1
                summary["all_pass"] &= bool(ok)
            aggs.append({
                "n": nn,
                "theorem": b.theorem,
                **{k: b.inputs.get(k, math.nan) for k in ("theta", "eta", "r", "alpha")},
                "threshold": b.threshold,
                "probability": b.probability,
                "vacuous": b.vacuous,
                "valid": b.valid,
                "testable": testable,
                "exceedance": freq,
                "tolerance": tol,
                "pass": ok,
                "mean_max_sup": float(sups.mean()),
                "max_max_sup": float(sups.max()),
            })
    return ExperimentResult("theorem-verify", cfg, records, aggs, summary, bounds)


# --- convergence in n ----------------------------------------------------------


def run_convergence_study(n_list, scaling: str = "equal", reps: int = 50, seed: int = 0, *, m: float = 4.0,
                          T: float = 1.0, colonisation: str = "linear(0.5)", extinction: str = "const(0.5)",
                          lam: float = 1.0, workers: int = 1, config: ExperimentConfig | None = None) -> ExperimentResult:
    """Mean of max_t sup-rectangle discrepancy of the discrete chain against
    the recursion as n grows, with its log-log slope.

    ``scaling='equal'`` uses all-to-all equal patches (influence spread over
    every patch); ``scaling='ring'`` uses the nearest-neighbour ring with rate
    ``lam`` per occupied neighbour (bounded influence).
    """
    ns = [int(v) for v in n_list]
    if len(ns) < 2 or reps < 1:
        raise ValueError("a convergence slope needs at least two n values")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n list must be increasing")
    cfg = config or ExperimentConfig("convergence", landscape=scaling, n=ns, reps=reps, seed=seed, m=m, T=T,
                                     colonisation=colonisation, extinction=extinction, lam=lam, workers=workers)
    records, aggs, bounds = [], [], {}
    for g, nn in enumerate(ns):
        L = make_landscape(cfg, nn)
        M = make_rates(cfg, L)
        recs = run_replicates(_verify_rep, (L, M, cfg, g, None, cfg.family_for(L)), cfg.reps, cfg.workers)
        records += recs
        sups = np.array([x["max_sup"] for x in recs])
        bounds[str(nn)] = {"constants": _brief(bound_constants(L, M))}
        aggs.append({"n": nn, "mean_max_sup": float(sups.mean()), "sd_max_sup": float(sups.std()),
                     "mean_J_frac": float(np.mean([x["Z_T"] for x in recs]) / L.a.sum())})
    slope = loglog_slope(ns, [a["mean_max_sup"] for a in aggs])
    return ExperimentResult("convergence", cfg, records, aggs, {"slope": slope, "scaling": scaling}, bounds)


# --- bound sweep ---------------------------------------------------------------


def run_bound_sweep(config: ExperimentConfig) -> ExperimentResult:
    cfg = config
    if not cfg.theorems:
        cfg.theorems = ["T1", "T2", "T3"]
    records, bounds = [], {}
    for nn in cfg.n:
        L = make_landscape(cfg, nn)
        M = make_rates(cfg, L)
        bounds[str(nn)] = {"constants": _brief(bound_constants(L, M))}
        try:
            tb = theorem_bounds(cfg, L, M)
        except BoundError as exc:
            bounds[str(nn)]["error"] = str(exc)
            continue
        for b in tb:
            records.append({"n": nn, "theorem": b.theorem,
                            **{k: b.inputs.get(k, math.nan) for k in ("theta", "eta", "r", "alpha")},
                            "threshold": b.threshold, "probability": b.probability,
                            "vacuous": b.vacuous, "valid": b.valid})
    best = [r for r in records if r["valid"] and not r["vacuous"]]
    summary = {"evaluated": len(records), "informative": len(best)}
    if best:
        top = min(best, key=lambda r: r["threshold"] + r["probability"])
        summary["best"] = top
    return ExperimentResult("bound-sweep", cfg, records, [], summary, bounds)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.kind == "contact":
        return run_contact_experiment(cfg.n, cfg.lam, cfg.reps, cfg.seed, cap_factor=cfg.cap_factor,
                                      ode_T=cfg.ode_T, workers=cfg.workers, config=cfg)
    if cfg.kind == "poisson":
        ext = parse_family(cfg.extinction)
        if not isinstance(ext, Constant):
            raise ValueError("the Poisson experiment uses constant extinction")
        return run_poisson_experiment(cfg.n[0], cfg.d, cfg.Rd, cfg.T, cfg.reps, cfg.seed, extinction=ext.c,
                                      landscape_seed=cfg.landscape_seed, theta=cfg.theta[0], eta=cfg.eta[0],
                                      alpha=cfg.alpha[0], workers=cfg.workers, config=cfg)
    if cfg.kind == "convergence":
        return run_convergence_study(cfg.n, cfg.landscape, cfg.reps, cfg.seed, m=cfg.m, T=cfg.T,
                                     colonisation=cfg.colonisation, extinction=cfg.extinction, lam=cfg.lam,
                                     workers=cfg.workers, config=cfg)
    if cfg.kind == "theorem-verify":
        return run_theorem_verification(cfg)
    return run_bound_sweep(cfg)
