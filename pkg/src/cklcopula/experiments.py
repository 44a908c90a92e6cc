"""Convergence-rate experiments: sample, pair, estimate, average, fit.

Every (N, trial) task draws its own 2N points from a stream seeded by
SeedSequence([base_seed, N, trial]), so a run is reproducible from its
config alone and independent of task scheduling. With ``nested=True`` one
sample of 2 * max(N) points is drawn per trial from
SeedSequence([base_seed, 0, trial]) and each N uses its first 2N points.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .core import BasisSet, GaussianCopulaParams, rho_to_theta
from .estimation import (OptimizerConfig, estimate_ckl, estimate_mle_gaussian,
                         pair_randomly)
from .sampling import DEFAULT_SWEEPS, RandomSource, sample_gaussian_copula, sample_minfo_approx

__all__ = [
    "SCENARIOS",
    "DESK_GRID",
    "FULL_GRID",
    "ExperimentConfig",
    "CurveRow",
    "ErrorCurve",
    "run_experiment",
    "loglog_fit",
    "emit_csv",
    "read_curve_csv",
]

log = logging.getLogger(__name__)

SCENARIOS = ("gaussian-exact", "gaussian-approx", "minfo-approx")
ESTIMATORS = ("ckl", "mle", "both")
DESK_GRID = (40, 63, 100, 158, 251, 398, 631, 1000, 1585, 2000)
FULL_GRID = tuple(range(40, 2001, 10))
FULL_TRIALS = 100
CSV_HEADER = ["N", "mean_abs_error", "std_error", "trials_used"]


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "gaussian-exact"
    basis: str = "gauss"
    true_theta: Optional[float] = None
    rho: Optional[float] = None
    N_grid: tuple = DESK_GRID
    trials: int = 20
    estimator: str = "ckl"
    base_seed: int = 0
    sweeps: int = DEFAULT_SWEEPS
    # extensions: optimizer used per trial, sample reuse across N
    method: str = "newton"
    nested: bool = False

    def __post_init__(self):
        object.__setattr__(self, "N_grid", tuple(int(n) for n in self.N_grid))
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if not self.N_grid or any(n < 1 for n in self.N_grid):
            raise ValueError("N_grid must hold positive integers")
        if any(b <= a for a, b in zip(self.N_grid, self.N_grid[1:])):
            raise ValueError("N_grid must be strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if self.estimator != "ckl" and self.scenario == "minfo-approx":
            raise ValueError("mle is only available for the gaussian scenarios")
        if self.scenario == "gaussian-exact" and self.basis != "gauss":
            raise ValueError("gaussian-exact data needs the 'gauss' basis")
        OptimizerConfig(method=self.method)
        if BasisSet.from_tags(self.basis).k != 1:
            raise ValueError("experiments estimate a scalar theta; use a single basis tag")

        if self.scenario.startswith("gaussian"):
            if self.rho is None:
                if self.true_theta is None:
                    raise ValueError("gaussian scenarios need rho or true_theta")
                object.__setattr__(self, "rho", GaussianCopulaParams.from_theta(self.true_theta).rho)
            theta = rho_to_theta(self.rho)
            if self.true_theta is not None and abs(theta - self.true_theta) > 1e-6:
                raise ValueError(f"true_theta={self.true_theta} disagrees with rho={self.rho} "
                                 f"(rho/(1-rho^2)={theta})")
            object.__setattr__(self, "true_theta", theta)
        elif self.true_theta is None:
            raise ValueError("minfo-approx needs true_theta")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["N_grid"] = list(self.N_grid)
        return d

    def full(self) -> "ExperimentConfig":
        """The full plan: N = 40, 50, ..., 2000 and 100 trials."""
        return replace(self, N_grid=FULL_GRID, trials=FULL_TRIALS)

    @property
    def estimators(self) -> tuple:
        return ("ckl", "mle") if self.estimator == "both" else (self.estimator,)


@dataclass
class CurveRow:
    N: int
    mean_abs_error: float
    std_error: float
    trials_used: int
    failures: int = 0


@dataclass
class ErrorCurve:
    estimator: str
    rows: list
    a: Optional[float] = None
    b: Optional[float] = None
    errors: dict = field(default_factory=dict, repr=False)  # N -> per-trial errors

    def fit(self) -> "ErrorCurve":
        usable = [(r.N, r.mean_abs_error) for r in self.rows]
        try:
            self.a, self.b = loglog_fit(usable)
        except ValueError:
            self.a = self.b = None
        return self

    def row(self, N: int) -> CurveRow:
        for r in self.rows:
            if r.N == N:
                return r
        raise KeyError(N)

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.rows)


def loglog_fit(rows) -> tuple:
    """Least squares of log(error) on log(N): returns slope a and intercept b.

    Rows with non-positive or non-finite error are dropped with a warning.
    """
    Ns, errs = [], []
    for N, e in rows:
        if not (e > 0 and math.isfinite(e)):
            warnings.warn(f"dropping row N={N} with error {e} from the log-log fit")
            continue
        Ns.append(float(N))
        errs.append(float(e))
    if len(Ns) < 3:
        raise ValueError(f"need >= 3 usable rows for a log-log fit, got {len(Ns)}")
    lx = np.log(Ns)
    ly = np.log(errs)
    A = np.column_stack([lx, np.ones_like(lx)])
    (a, b), *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(a), float(b)


# ---------------------------------------------------------------------------
# running

def _draw(cfg: ExperimentConfig, basis: BasisSet, count: int, src: RandomSource) -> np.ndarray:
    if cfg.scenario == "gaussian-exact":
        return sample_gaussian_copula(GaussianCopulaParams(cfg.rho), count, src).points
    return sample_minfo_approx(basis, [cfg.true_theta], count, cfg.sweeps, src).points


def _run_trial(cfg: ExperimentConfig, trial: int, Ns: tuple) -> list:
    """All N for one trial; returns [(N, {estimator: error or None})]."""
    basis = BasisSet.from_tags(cfg.basis)
    opt = OptimizerConfig(method=cfg.method)
    out = []
    shared = None
    if cfg.nested:
        shared = _draw(cfg, basis, 2 * max(cfg.N_grid), RandomSource(cfg.base_seed).child(0, trial))
    for N in Ns:
        src = RandomSource(cfg.base_seed).child(N, trial)
        raw = shared[:2 * N] if shared is not None else _draw(cfg, basis, 2 * N, src)
        errs = {}
        for est in cfg.estimators:
            if est == "ckl":
                res = estimate_ckl(pair_randomly(raw, src), basis, opt)
            else:
                res = estimate_mle_gaussian(raw, opt)
            errs[est] = abs(float(res.theta_hat[0]) - cfg.true_theta) if res.converged else None
        out.append((N, errs))
    return out


def _run_trial_star(args):
    return _run_trial(*args)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> dict:
    """Run every (N, trial) task and return one fitted ErrorCurve per estimator.

    Trials whose optimizer does not converge are excluded from the averages
    and counted in ``CurveRow.failures``.
    """
    tasks = [(cfg, t, cfg.N_grid) for t in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_trial_star, tasks))
    else:
        results = []
        for t, task in enumerate(tasks):
            results.append(_run_trial_star(task))
            log.info("%s trial %d/%d done", cfg.scenario, t + 1, cfg.trials)

    curves = {}
    for est in cfg.estimators:
        per_N = {N: [] for N in cfg.N_grid}
        fails = {N: 0 for N in cfg.N_grid}
        for trial_rows in results:
            for N, errs in trial_rows:
                if errs[est] is None:
                    fails[N] += 1
                else:
                    per_N[N].append(errs[est])
        rows = []
        for N in cfg.N_grid:
            e = np.asarray(per_N[N])
            if len(e) == 0:
                rows.append(CurveRow(N, math.nan, math.nan, 0, fails[N]))
                continue
            se = float(np.std(e, ddof=1) / math.sqrt(len(e))) if len(e) > 1 else 0.0
            rows.append(CurveRow(N, float(np.mean(e)), se, len(e), fails[N]))
            if fails[N]:
                log.warning("%s N=%d: %d trial(s) did not converge", est, N, fails[N])
        curves[est] = ErrorCurve(est, rows, errors=per_N).fit()
    return curves


# ---------------------------------------------------------------------------
# output

def emit_csv(curve: ErrorCurve, path) -> Path:
    """Write the curve as CSV plus a JSON sidecar holding the fit; returns the sidecar path."""
    path = Path(path)
    side = path.with_suffix(".json")
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in curve.rows:
                w.writerow([r.N, f"{r.mean_abs_error:.17g}", f"{r.std_error:.17g}", r.trials_used])
        meta = {"a": curve.a, "b": curve.b, "estimator": curve.estimator,
                "failures": {str(r.N): r.failures for r in curve.rows if r.failures}}
        side.write_text(json.dumps(meta, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write curve to {path}: {exc}") from exc
    return side


def read_curve_csv(path, estimator: str = "") -> ErrorCurve:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        rows = [CurveRow(int(r["N"]), float(r["mean_abs_error"]), float(r["std_error"]),
                         int(r["trials_used"])) for r in reader]
    return ErrorCurve(estimator or path.stem, rows)
