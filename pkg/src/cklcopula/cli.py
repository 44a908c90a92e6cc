"""Command line entry point: ``cklcopula {sample,estimate,experiment,fit}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import BasisSet, GaussianCopulaParams
from .estimation import (OptimizerConfig, estimate_ckl, estimate_ckl_allpairs,
                         estimate_mle_gaussian, pair_randomly)
from .experiments import ExperimentConfig, emit_csv, loglog_fit, read_curve_csv, run_experiment
from .sampling import DEFAULT_SWEEPS, RandomSource, read_points_csv, sample_gaussian_copula
from .sampling import sample_minfo_approx


def _floats(s: str) -> list:
    return [float(v) for v in s.split(",")]


def _cmd_sample(args) -> int:
    if args.family == "gaussian":
        batch = sample_gaussian_copula(GaussianCopulaParams(args.rho), args.count, RandomSource(args.seed))
    else:
        basis = BasisSet.from_tags(args.basis)
        batch = sample_minfo_approx(basis, _floats(args.theta), args.count, args.sweeps,
                                    RandomSource(args.seed))
    side = batch.to_csv(args.out)
    logging.info("wrote %d points to %s (metadata %s)", len(batch), args.out, side)
    return 0


def _cmd_estimate(args) -> int:
    raw = read_points_csv(args.input)
    theta0 = _floats(args.theta0) if args.theta0 else None
    cfg = OptimizerConfig(theta0=theta0, step=args.step, grad_tol=args.grad_tol,
                          max_iters=args.max_iters, method=args.optimizer)
    if args.method == "mle":
        res = estimate_mle_gaussian(raw, cfg)
    else:
        basis = BasisSet.from_tags(args.basis)
        if args.method == "ckl":
            res = estimate_ckl(pair_randomly(raw, RandomSource(args.seed)), basis, cfg)
        else:
            res = estimate_ckl_allpairs(raw, basis, cfg)
    print(res.to_json())
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    if args.full:
        cfg = cfg.full()
    if args.nested:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "nested": True})
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    curves = run_experiment(cfg, workers=args.workers)
    summary = {}
    for name, curve in curves.items():
        emit_csv(curve, out / f"{name}.csv")
        summary[name] = {"a": curve.a, "b": curve.b, "failures": curve.failures}
    print(json.dumps(summary))
    return 0


def _cmd_fit(args) -> int:
    curve = read_curve_csv(args.input)
    a, b = loglog_fit([(r.N, r.mean_abs_error) for r in curve.rows])
    print(json.dumps({"a": a, "b": b}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cklcopula", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw a copula sample to CSV")
    fam = sp.add_subparsers(dest="family", required=True)
    g = fam.add_parser("gaussian", help="exact Gaussian copula sample")
    g.add_argument("--rho", type=float, required=True)
    m = fam.add_parser("minfo", help="approximate minimum information copula sample")
    m.add_argument("--basis", required=True, help="basis tag(s), comma separated")
    m.add_argument("--theta", required=True, help="theta value(s), comma separated")
    m.add_argument("--sweeps", type=int, default=DEFAULT_SWEEPS)
    for q in (g, m):
        q.add_argument("--count", type=int, required=True)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_sample)

    e = sub.add_parser("estimate", help="estimate theta from an x,y CSV")
    e.add_argument("--input", required=True)
    e.add_argument("--basis", default="gauss")
    e.add_argument("--method", choices=("ckl", "mle", "ckl-allpairs"), default="ckl")
    e.add_argument("--seed", type=int, default=0, help="seed for the random pairing")
    e.add_argument("--optimizer", choices=("gradient-descent", "newton"), default="gradient-descent")
    e.add_argument("--theta0", default=None)
    e.add_argument("--step", type=float, default=0.1)
    e.add_argument("--grad-tol", type=float, default=1e-8)
    e.add_argument("--max-iters", type=int, default=100_000)
    e.set_defaults(func=_cmd_estimate)

    x = sub.add_parser("experiment", help="run a convergence experiment from a JSON config")
    x.add_argument("--config", required=True)
    x.add_argument("--out-dir", required=True)
    x.add_argument("--full", action="store_true", help="N = 40..2000 step 10, 100 trials")
    x.add_argument("--nested", action="store_true", help="reuse one sample per trial across N")
    x.add_argument("--workers", type=int, default=1)
    x.set_defaults(func=_cmd_experiment)

    f = sub.add_parser("fit", help="log-log fit of an error curve CSV")
    f.add_argument("--input", required=True)
    f.set_defaults(func=_cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"cklcopula: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
