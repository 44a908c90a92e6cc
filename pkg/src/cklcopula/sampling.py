"""Samplers: exact for the Gaussian copula, pair-swap MCMC for the rest.

The swap chain starts from i.i.d. uniform points and repeatedly proposes to
exchange the y-coordinates of two random points (i, j). The exchange is
accepted with probability

    q(x_i, y_j) q(x_j, y_i) / (q(x_i, y_i) q(x_j, y_j) + q(x_i, y_j) q(x_j, y_i))

which only involves theta . h, so normalizing functions are never needed.
Both coordinate multisets are left exactly unchanged.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from .core import BasisSet, GaussianCopulaParams, check_theta, std_normal_cdf

__all__ = [
    "CLAMP_EPS",
    "DEFAULT_SWEEPS",
    "RandomSource",
    "SampleBatch",
    "sample_gaussian_copula",
    "swap_log_odds",
    "swap_probability",
    "sample_minfo_approx",
    "read_points_csv",
]

CLAMP_EPS = 1e-12
DEFAULT_SWEEPS = 50


class RandomSource:
    """Seeded PCG64 stream; the same seed gives the same draws bit for bit.

    ``child(*keys)`` derives an independent stream from (seed, *keys)
    through numpy's SeedSequence hashing.
    """

    def __init__(self, seed: int, *, _keys: tuple = ()):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in _keys)
        ss = np.random.SeedSequence([self.seed & (2**64 - 1), *self.keys])
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys: int) -> "RandomSource":
        return RandomSource(self.seed, _keys=self.keys + tuple(keys))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, keys={self.keys})"


def _as_source(rng) -> RandomSource:
    if isinstance(rng, RandomSource):
        return rng
    return RandomSource(int(rng))


@dataclass
class SampleBatch:
    points: np.ndarray
    provenance: str
    seed: Optional[int] = None
    sweeps: Optional[int] = None
    basis: Optional[list] = None
    theta: Optional[list] = None
    rho: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.points)

    @property
    def x(self):
        return self.points[:, 0]

    @property
    def y(self):
        return self.points[:, 1]

    def metadata(self) -> dict:
        out = {"provenance": self.provenance, "seed": self.seed, "count": len(self)}
        if self.sweeps is not None:
            out["sweeps"] = self.sweeps
        if self.basis is not None:
            out["basis"] = ",".join(self.basis)
        if self.theta is not None:
            out["theta"] = list(self.theta)
        if self.rho is not None:
            out["rho"] = self.rho
        out.update(self.meta)
        return out

    def to_csv(self, path) -> Path:
        """Write ``x,y`` rows with 17 significant digits and a JSON sidecar.

        The sidecar sits next to the CSV with a ``.json`` suffix. Returns the
        sidecar path.
        """
        path = Path(path)
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "y"])
                for x, y in self.points:
                    w.writerow([f"{x:.17g}", f"{y:.17g}"])
            side = path.with_suffix(".json")
            side.write_text(json.dumps(self.metadata(), indent=2) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write sample batch to {path}: {exc}") from exc
        return side


def read_points_csv(path) -> np.ndarray:
    """Read an ``x,y`` CSV back into an (n, 2) array."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected a header with columns x,y")
        rows = [(float(r["x"]), float(r["y"])) for r in reader]
    return np.array(rows, dtype=float).reshape(-1, 2)


# ---------------------------------------------------------------------------
# exact Gaussian copula

def sample_gaussian_copula(params: GaussianCopulaParams, count: int, rng) -> SampleBatch:
    """Draw ``count`` i.i.d. points of the Gaussian copula.

    Normal scores are (z1, rho z1 + sqrt(1 - rho^2) z2) for independent
    standard normals, mapped through Phi and clamped to [eps, 1 - eps].
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    src = _as_source(rng)
    z = src.generator.standard_normal((2, count))
    rho = params.rho
    xi = z[0]
    eta = rho * z[0] + math.sqrt((1.0 - rho) * (1.0 + rho)) * z[1]
    pts = np.column_stack([std_normal_cdf(xi), std_normal_cdf(eta)])
    np.clip(pts, CLAMP_EPS, 1.0 - CLAMP_EPS, out=pts)
    return SampleBatch(pts, "exact-gaussian", seed=src.seed, rho=rho,
                       theta=[params.theta], basis=["gauss"])


# ---------------------------------------------------------------------------
# pair-swap sampler

def swap_log_odds(basis: BasisSet, theta, pi, pj) -> float:
    """theta . (h(xi, yj) + h(xj, yi) - h(xi, yi) - h(xj, yj))."""
    theta = check_theta(theta, basis)
    (xi, yi), (xj, yj) = pi, pj
    h = basis.evaluate(np.array([xi, xj, xi, xj]), np.array([yj, yi, yi, yj]))
    return float(((h[0] - h[2]) + (h[1] - h[3])) @ theta)


def _logistic(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def swap_probability(basis: BasisSet, theta, pi, pj) -> float:
    """Probability of exchanging the y-coordinates of points ``pi`` and ``pj``."""
    return _logistic(swap_log_odds(basis, theta, pi, pj))


@numba.njit(cache=True)
def _swap_chain_product(F, G, y, theta, I, J, U):  # pragma: no cover - compiled
    # product basis: h_k(x, y) = F_k(x) G_k(y), so the log-odds factorizes
    k = F.shape[1]
    accepted = 0
    for t in range(I.shape[0]):
        i = I[t]
        j = J[t]
        s = 0.0
        for c in range(k):
            s += theta[c] * (F[i, c] - F[j, c]) * (G[j, c] - G[i, c])
        if s >= 0.0:
            p = 1.0 / (1.0 + math.exp(-s))
        else:
            e = math.exp(s)
            p = e / (1.0 + e)
        if U[t] < p:
            tmp = y[i]
            y[i] = y[j]
            y[j] = tmp
            for c in range(k):
                tmp = G[i, c]
                G[i, c] = G[j, c]
                G[j, c] = tmp
            accepted += 1
    return accepted


def _swap_chain_generic(basis, x, y, theta, I, J, U):
    accepted = 0
    for i, j, u in zip(I.tolist(), J.tolist(), U.tolist()):
        h = basis.evaluate(np.array([x[i], x[j], x[i], x[j]]),
                           np.array([y[j], y[i], y[i], y[j]]))
        s = float(((h[0] - h[2]) + (h[1] - h[3])) @ theta)
        if u < _logistic(s):
            y[i], y[j] = y[j], y[i]
            accepted += 1
    return accepted


def _propose(gen: np.random.Generator, n: int, size: int):
    # uniform over unordered pairs i != j, with replacement across proposals
    i = gen.integers(0, n, size=size)
    j = gen.integers(0, n - 1, size=size)
    j = j + (j >= i)
    return np.minimum(i, j), np.maximum(i, j), gen.random(size)


def sample_minfo_approx(basis: BasisSet, theta, count: int, sweeps: int = DEFAULT_SWEEPS,
                        rng=0, *, init: Optional[np.ndarray] = None) -> SampleBatch:
    """Approximate sample of the minimum information copula (basis, theta).

    One sweep is ``count`` proposed swaps. ``init`` overrides the i.i.d.
    uniform starting points (mainly for tests); the draws for the
    proposals still come from ``rng``.
    """
    theta = check_theta(theta, basis)
    if count < 2:
        raise ValueError("count must be >= 2")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    src = _as_source(rng)
    gen = src.generator
    if init is None:
        pts = gen.random((count, 2))
        np.clip(pts, CLAMP_EPS, 1.0 - CLAMP_EPS, out=pts)
    else:
        pts = np.array(init, dtype=float).reshape(-1, 2)
        if len(pts) != count:
            raise ValueError("init must hold exactly count points")
    x = np.ascontiguousarray(pts[:, 0])
    y = np.ascontiguousarray(pts[:, 1])

    accepted = 0
    if basis.is_product:
        F = np.column_stack([np.broadcast_to(bf.factors[0](x), x.shape) for bf in basis.functions])
        G = np.column_stack([np.broadcast_to(bf.factors[1](y), y.shape) for bf in basis.functions])
        F = np.ascontiguousarray(F, dtype=float)
        G = np.ascontiguousarray(G, dtype=float)
        for _ in range(sweeps):
            I, J, U = _propose(gen, count, count)
            accepted += _swap_chain_product(F, G, y, theta, I, J, U)
    else:
        for _ in range(sweeps):
            I, J, U = _propose(gen, count, count)
            accepted += _swap_chain_generic(basis, x, y, theta, I, J, U)

    return SampleBatch(np.column_stack([x, y]), "approx-swap", seed=src.seed, sweeps=sweeps,
                       basis=basis.tags, theta=theta.tolist(),
                       meta={"acceptance_rate": accepted / (sweeps * count)})
