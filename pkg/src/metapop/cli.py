"""Command line interface: ``metapop <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bounds import BoundError, bound_constants, psi, theorem1_bound, theorem2_bound, theorem3_bound
from .continuous import integrate_ode, simulate_coupled_ct, simulate_ctmc
from .discrete import simulate_coupled, simulate_ifm
from .experiments import _jsonable, load_config, replicate_seed, run_experiment
from .landscape import Grid, RingLayout, UniformBox, generate_landscape, load_landscape, parse_kernel, save_landscape
from .measures import VCFamily, sup_discrepancy_path, tv_distance
from .rates import parse_rates


def _initial_state(spec: str, n: int, seed) -> np.ndarray:
    if spec == "ones":
        return np.ones(n, dtype=np.uint8)
    if spec.startswith("random:"):
        q = float(spec.split(":", 1)[1])
        return (np.random.default_rng(seed).random(n) < q).astype(np.uint8)
    x = np.array([int(c) for c in spec.replace(",", "").strip()], dtype=np.uint8)
    if x.size != n:
        raise SystemExit(f"initial state has {x.size} entries, landscape has {n}")
    return x


def _load_model(args):
    L = load_landscape(args.landscape)
    M = parse_rates(Path(args.rates).read_text(), L.n)
    return L, M


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_landscape_gen(args):
    kernel = parse_kernel(args.kernel)
    if args.kind == "uniform":
        spec = UniformBox(args.n, args.d, args.seed)
    elif args.kind == "grid":
        spec = Grid(args.n, args.d)
    else:
        spec = RingLayout(args.n)
    L = generate_landscape(spec, kernel)
    save_landscape(L, args.output)
    print(f"wrote {L.n} patches (d = {L.d}) to {args.output}")


def _wide(times, X, prefix):
    n = X.shape[1]
    header = ["t"] + [f"{prefix}_{i + 1}" for i in range(n)]
    return header, [[repr(float(t))] + [int(v) if X.dtype != float else repr(float(v)) for v in row] for t, row in zip(times, X)]


def cmd_simulate(args):
    L, M = _load_model(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    family = VCFamily("rectangles", L.d + 1)
    if args.model == "ode":
        p0 = _initial_state(args.x0, L.n, args.seed).astype(float)
        ode = integrate_ode(p0, L, M, args.T, args.h)
        header, rows = _wide(ode.times, ode.p, "p")
        _write_rows(out / "ode.csv", header, rows)
        print(f"wrote {len(ode.times)} rows to {out / 'ode.csv'}")
        return
    for rep in range(args.reps):
        s = replicate_seed(args.seed, rep)
        x0 = _initial_state(args.x0, L.n, s)
        if args.model == "discrete":
            if args.coupled:
                tr = simulate_coupled(x0, L, M, args.m, args.T, seed=s)
                header, rows = _wide(tr.times, tr.X, "X")
                _write_rows(out / f"rep{rep:04d}_X.csv", header, rows)
                sups, _ = sup_discrepancy_path(L.points, tr.X.astype(float), tr.p, family)
                summ = []
                for k, t in enumerate(tr.times):
                    summ.append([repr(float(t)), repr(float(tr.J[k] @ L.a)), repr(float(np.abs(tr.X[k].astype(int) - tr.W[k]).sum() / L.n)),
                                 repr(tv_distance(tr.X[k], tr.p[k])), repr(float(sups[k]))])
                _write_rows(out / f"rep{rep:04d}_coupled.csv", ["t", "sumJ_weighted", "l1_XW", "tv_Xp", "sup_rect_Xp"], summ)
            else:
                X = simulate_ifm(x0, L, M, args.m, args.T, seed=s)
                header, rows = _wide(np.arange(X.shape[0]) / args.m, X, "X")
                _write_rows(out / f"rep{rep:04d}_X.csv", header, rows)
        elif args.model == "ctmc":
            path = simulate_ctmc(x0, L, M, args.T, seed=s)
            rows = [[repr(float(t)), int(i) + 1, int(v)] for t, i, v in zip(path.times, path.patches, path.values)]
            _write_rows(out / f"rep{rep:04d}_events.csv", ["time", "patch", "new_value"], rows)
        else:
            ode = integrate_ode(x0.astype(float), L, M, args.T, args.h)
            tr = simulate_coupled_ct(x0, L, M, args.T, seed=s, ode=ode)
            rows = [[repr(float(t)), int(i) + 1, int(w), int(x), repr(float(z))]
                    for t, i, w, x, z in zip(tr.times, tr.patches, tr.w_values, tr.x_values, tr.Z)]
            _write_rows(out / f"rep{rep:04d}_events.csv", ["time", "patch", "W_value", "X_value", "sumJ_weighted"], rows)
    print(f"wrote {args.reps} replicate(s) to {out}")


def cmd_bounds(args):
    L, M = _load_model(args)
    C = bound_constants(L, M)
    V = args.V if args.V is not None else 2 * (L.d + 1)
    report = {"constants": C.to_dict(), "psi": psi(L, args.theta)[0], "V": V}
    try:
        if args.theorem == "1":
            bs = [theorem1_bound(C, L.n, args.m, args.T, V, args.theta, args.eta, L=L)]
        elif args.theorem == "2":
            bs = [theorem2_bound(C, L.n, args.m, args.T, V, args.theta, args.r, L=L)]
        else:
            bs = list(theorem3_bound(C, L.n, args.T, V, args.theta, args.eta, args.alpha, args.r, L=L))
    except BoundError as exc:
        report["error"] = str(exc)
        bs = []
    report["bounds"] = [b.to_dict() for b in bs]
    if args.json:
        print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
        return
    print(f"n = {C.n}  a_bar = {C.a_bar:.6g}  A = {C.A:.6g}  H = {C.H:.6g}  A2 = {C.A2:.6g}  H2 = {C.H2:.6g}  k = {C.k:.6g}")
    if "error" in report:
        print(report["error"])
    for b in bs:
        flags = [] if b.valid else ["INVALID: " + ", ".join(k for k, v in b.diagnostics.items() if not v)]
        if b.vacuous:
            flags.append("vacuous")
        print(f"{b.theorem}: threshold {b.threshold:.6g}  probability {b.probability:.6g}  {' '.join(flags)}")


def cmd_experiment(args):
    cfg = load_config(args.config, kind=args.kind, output=args.output)
    if args.workers is not None:
        cfg.workers = args.workers
    res = run_experiment(cfg)
    out = res.write(args.output or cfg.output or f"results_{cfg.kind}")
    print(json.dumps(_jsonable(res.summary), indent=2, sort_keys=True))
    print(f"outputs in {out}")


def cmd_oracle(args):
    from . import oracle

    L, M = _load_model(args)
    x0 = _initial_state(args.x0, L.n, args.seed)
    if args.model == "chain":
        dist = oracle.exact_chain_distribution(x0, L, M, args.m, args.T)
    elif args.model == "ctmc":
        dist = oracle.exact_ctmc_marginal(x0, L, M, args.T)
    elif args.model == "coupled":
        mom = oracle.exact_coupled_moment(x0, L, M, args.m, args.T)
        print(f"E[sum a_i J_i] = {mom.mean!r}  Var = {mom.var!r}")
        return
    else:
        mom = oracle.exact_coupled_ct_moment(x0, L, M, args.T)
        print(f"E[sum a_i J_i(T)] = {mom.mean!r}  Var = {mom.var!r}")
        return
    for st, p in zip(dist.states, dist.probs):
        print("".join(map(str, st)), repr(float(p)))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="metapop", description="Stochastic metapopulation models and approximation bounds")
    sub = ap.add_subparsers(dest="command", required=True)

    land = sub.add_parser("landscape", help="landscape utilities").add_subparsers(dest="action", required=True)
    g = land.add_parser("gen", help="generate a landscape file")
    g.add_argument("--kind", choices=["uniform", "ring", "grid"], default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kernel", default="exponential(1.0)")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_landscape_gen)

    def model_args(p):
        p.add_argument("--landscape", required=True)
        p.add_argument("--rates", required=True)
        p.add_argument("--T", type=float, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--x0", default="ones", help="'ones', 'random:<q>' or a 0/1 string")

    s = sub.add_parser("simulate", help="run simulators")
    s.add_argument("model", choices=["discrete", "ctmc", "ode", "coupled-ct"])
    model_args(s)
    s.add_argument("--m", type=float, default=1.0)
    s.add_argument("--h", type=float, default=None)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--coupled", action="store_true")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="evaluate theorem bounds")
    model_args(b)
    b.add_argument("--theorem", choices=["1", "2", "3"], required=True)
    b.add_argument("--m", type=float, default=1.0)
    b.add_argument("--V", type=int, default=None)
    b.add_argument("--theta", type=float, default=1.0)
    b.add_argument("--eta", type=float, default=0.25)
    b.add_argument("--r", type=float, default=3.0)
    b.add_argument("--alpha", type=float, default=0.5)
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", help="run a configured experiment")
    e.add_argument("kind", choices=["contact", "poisson", "convergence", "verify", "sweep"])
    e.add_argument("--config", required=True)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("-o", "--output", default=None)
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", help="exact small-instance laws")
    o.add_argument("model", choices=["chain", "coupled", "ctmc", "coupled-ct"])
    model_args(o)
    o.add_argument("--m", type=float, default=1.0)
    o.add_argument("--exact", action="store_true", help="accepted for symmetry with the simulators")
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
