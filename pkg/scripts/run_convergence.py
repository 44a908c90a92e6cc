"""Run every config in scripts/configs and print the fitted log-log lines.

    python3 scripts/run_convergence.py                # desk grid, 20 trials
    python3 scripts/run_convergence.py --full -j 8    # N = 40..2000 step 10, 100 trials
"""
import argparse
import json
import time
from pathlib import Path

from cklcopula.experiments import ExperimentConfig, emit_csv, run_experiment

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("configs", nargs="*", type=Path, help="defaults to scripts/configs/*.json")
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--nested", action="store_true")
    ap.add_argument("-j", "--workers", type=int, default=1)
    args = ap.parse_args()

    paths = args.configs or sorted((HERE / "configs").glob("*.json"))
    print(f"{'config':<18} {'estimator':<9} {'a':>9} {'b':>9} {'failures':>8} {'secs':>7}")
    for path in paths:
        cfg = ExperimentConfig.from_json(path)
        if args.full:
            cfg = cfg.full()
        if args.nested:
            cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "nested": True})
        out = args.out_dir / path.stem
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2))
        t = time.perf_counter()
        curves = run_experiment(cfg, workers=args.workers)
        secs = time.perf_counter() - t
        for est, curve in curves.items():
            emit_csv(curve, out / f"{est}.csv")
            print(f"{path.stem:<18} {est:<9} {curve.a:>9.5f} {curve.b:>9.5f} {curve.failures:>8d} {secs:>7.1f}")


if __name__ == "__main__":
    main()
