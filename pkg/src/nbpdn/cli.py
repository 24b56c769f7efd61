"""Command-line front end: experiments, bound reports, and verification.

Subcommands:
  run     run a config/preset and write traces.csv, metrics.csv, metadata.json
  sweep   run a config/preset with a parameter sweep attached
  bounds  evaluate the bound constants across a lambda grid -> bounds.json
  rip     brute-force RIC (and optionally ROC) of a matrix -> JSON
  verify  lemma oracles + recurrence checks; exit 0 iff zero violations
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    bound_constants,
    default_partition,
    estimate_ric,
    estimate_roc,
    ric_frontier_2s,
)
from .experiments import ConfigError, load_config, load_preset, run_experiment
from .verification import run_verification


def _load_matrix(spec: str, seed) -> np.ndarray:
    """'gaussian:MxN' / 'orthogonal:MxN' / path to .npy or whitespace text."""
    if ":" in spec and not os.path.exists(spec):
        kind, _, dims = spec.partition(":")
        M, N = (int(v) for v in dims.lower().split("x"))
        rng = np.random.default_rng(seed)
        if kind == "gaussian":
            return rng.standard_normal((M, N)) / math.sqrt(M)
        if kind == "orthogonal":
            from .analysis.checks import partial_orthogonal
            return partial_orthogonal(rng, M, N)
        raise SystemExit(f"unknown matrix kind {kind!r}")
    path = Path(spec)
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path)


def _resolve_config(args):
    if bool(args.config) == bool(args.preset):
        raise ConfigError("exactly one of --config or --preset is required")
    cfg = load_config(args.config) if args.config else load_preset(args.preset)
    if getattr(args, "seed", None) is not None:
        cfg.instance.seed = args.seed
    if getattr(args, "trials", None) is not None:
        cfg.instance.trials = args.trials
    return cfg


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out) if args.out else Path("runs") / cfg.name
    progress = None
    if not args.quiet:
        def progress(sv, t):
            tag = f" {cfg.sweep['param']}={sv}" if cfg.sweep else ""
            print(f"[{cfg.name}] trial {t + 1}/{cfg.instance.trials}{tag}",
                  file=sys.stderr)
    result = run_experiment(cfg, out_dir=out, jobs=args.jobs, progress=progress)
    print(f"wrote {out}/metrics.csv {out}/traces.csv {out}/metadata.json "
          f"(config_hash={result.config_hash})")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    cfg = dataclasses.replace(
        cfg,
        name=f"{cfg.name}-sweep-{args.param}",
        sweep={"param": args.param,
               "values": [float(v) for v in args.values.split(",")]},
    )
    args.out = args.out or str(Path("runs") / cfg.name)
    args.config = None
    args.preset = None

    out = Path(args.out)
    progress = None
    if not args.quiet:
        def progress(sv, t):
            print(f"[{cfg.name}] trial {t + 1}/{cfg.instance.trials} "
                  f"{args.param}={sv}", file=sys.stderr)
    result = run_experiment(cfg, out_dir=out, jobs=args.jobs, progress=progress)
    print(f"wrote {out}/metrics.csv (config_hash={result.config_hash})")
    return 0


def cmd_bounds(args) -> int:
    A = _load_matrix(args.matrix, args.seed)
    s = args.s
    a, b = (args.a, args.b) if args.a and args.b else default_partition(s)
    grid = [float(v) for v in args.lambda_grid.split(",")]
    mode = args.mode
    budget = args.budget
    d_sa = estimate_ric(A, s + a, mode=mode, budget=budget, seed=args.seed)
    d_2s = estimate_ric(A, min(2 * s, A.shape[1]), mode=mode, budget=budget,
                        seed=args.seed)
    d_s = estimate_ric(A, s, mode=mode, budget=budget, seed=args.seed)
    theta = estimate_roc(A, s + a, b, mode=mode, budget=budget, seed=args.seed)
    entries = []
    for lam in grid:
        c = bound_constants(d_sa.delta, d_2s.delta, d_s.delta, theta.theta,
                            lam=lam, s=s, a=a, b=b, K=args.iters)
        entries.append(c.to_dict())
    doc = {
        "matrix": args.matrix,
        "shape": list(A.shape),
        "mode": mode,
        "exact": d_sa.exact,
        "s": s, "a": a, "b": b, "K": args.iters,
        "delta_s+a": d_sa.delta,
        "delta_2s": d_2s.delta,
        "delta_s": d_s.delta,
        "theta_s+a_b": theta.theta,
        "lambda_grid": grid,
        "constants": entries,
        "validity_frontier_delta2s": {
            repr(lam): ric_frontier_2s(lam) for lam in grid},
    }
    doc["inputs_hash"] = hashlib.sha256(
        json.dumps({k: doc[k] for k in ("matrix", "s", "a", "b", "K",
                                        "lambda_grid", "mode")},
                   sort_keys=True).encode()).hexdigest()[:16]
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_rip(args) -> int:
    A = _load_matrix(args.matrix, args.seed)
    est = estimate_ric(A, args.s, mode=args.mode, budget=args.budget,
                       seed=args.seed)
    doc = {"shape": list(A.shape), "s": args.s, "delta": est.delta,
           "exact": est.exact}
    if args.s2:
        roc = estimate_roc(A, args.s, args.s2, mode=args.mode,
                           budget=args.budget, seed=args.seed)
        doc.update({"s2": args.s2, "theta": roc.theta})
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_verify(args) -> int:
    if args.trials == 0 and args.recurrence_trials == 0:
        print("warning: no trials requested; nothing verified")
        return 0
    rhs_scale = 0.5 if args.self_test_perturb else 1.0
    report = run_verification(args.seed, trials=args.trials,
                              recurrence_trials=args.recurrence_trials,
                              rhs_scale=rhs_scale)
    for line in report.summary_lines():
        print(line)
    if args.out:
        doc = {
            "violations": report.violations,
            "lemmas": {case: dataclasses.asdict(rep)
                       for case, rep in report.lemmas.items()},
            "recurrences": [
                {k: v for k, v in dataclasses.asdict(rep).items()
                 if k != "lhs_l2"} for rep in report.recurrences],
        }
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True,
                                             default=float))
        print(f"wrote {args.out}")
    if report.violations:
        print(f"FAIL: {report.violations} violations")
        return 1
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbpdn", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_run_args(sp):
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--preset", help="shipped preset name (fig2, fig3, fig4, desk)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--trials", type=int, help="override the trial count")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--quiet", action="store_true")

    sp = sub.add_parser("run", help="run an experiment config or preset")
    add_run_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a config with a parameter sweep")
    add_run_args(sp)
    sp.add_argument("--param", required=True, choices=("snr_db", "lambda"))
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bounds", help="bound constants across a lambda grid")
    sp.add_argument("--matrix", required=True,
                    help="'gaussian:MxN', 'orthogonal:MxN', or a file path")
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--a", type=int)
    sp.add_argument("--b", type=int)
    sp.add_argument("--lambda-grid", default="0.6,0.8,1.0")
    sp.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    sp.add_argument("--budget", type=int, default=500_000)
    sp.add_argument("--iters", type=int, default=10, help="K in d1..d4")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("rip", help="brute-force RIC/ROC of a matrix")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--s2", type=int, help="also estimate theta_{s,s2}")
    sp.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    sp.add_argument("--budget", type=int, default=500_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_rip)

    sp = sub.add_parser("verify", help="lemma and recurrence oracles")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--recurrence-trials", type=int, default=10)
    sp.add_argument("--self-test-perturb", action="store_true",
                    help="deliberately weaken every bound; must exit 1")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
