"""Conditional KL (CKL) score and the plain KL baseline.

For two observations (x1, y1), (x2, y2) the CKL score is the negative log
conditional probability of the observed pairing against the swapped one:

    S = -log( q11 q22 / (q11 q22 + q12 q21) ) = softplus(L),
    L = log q12 + log q21 - log q11 - log q22,      qab = q(xa, yb).

Any factor depending on x alone or y alone cancels in L, so the unknown
normalizing functions of a minimum information copula never enter. With
log q = theta . h the log-odds is theta . H for the pair's H-vector

    H = h(x1, y2) + h(x2, y1) - h(x2, y2) - h(x1, y1).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .core import BasisSet, UnnormalizedLogDensity, check_theta

__all__ = [
    "ScoreEvaluationError",
    "ObservationPair",
    "PairedDataset",
    "softplus",
    "ckl_score",
    "kl_score",
    "h_vector",
    "h_matrix",
    "empirical_ckl_score",
    "empirical_ckl_gradient",
    "empirical_ckl_hessian",
    "softplus_mean",
    "softplus_mean_gradient",
    "softplus_mean_hessian",
    "all_pairs_h_matrix",
    "all_pairs_ckl_score",
]

_SOFTPLUS_CUT = 30.0


class ScoreEvaluationError(ArithmeticError):
    """A log-density was not finite where a score needed it."""


@dataclass(frozen=True)
class ObservationPair:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name}={v!r} is outside [0, 1]")

    def swapped(self) -> "ObservationPair":
        """The same pair with the y-coordinates exchanged."""
        return ObservationPair(self.x1, self.y2, self.x2, self.y1)


@dataclass(frozen=True)
class PairedDataset:
    """N quadruples stored column-wise as an (N, 4) array (x1, y1, x2, y2)."""

    quads: np.ndarray
    n_original: int

    def __post_init__(self):
        q = np.asarray(self.quads, dtype=float).reshape(-1, 4)
        if np.any((q < 0.0) | (q > 1.0)) or not np.all(np.isfinite(q)):
            raise ValueError("all coordinates must lie in [0, 1]")
        q.setflags(write=False)
        object.__setattr__(self, "quads", q)

    @classmethod
    def from_pairs(cls, pairs: Iterable[ObservationPair], n_original: int | None = None):
        rows = [(p.x1, p.y1, p.x2, p.y2) for p in pairs]
        n = 2 * len(rows) if n_original is None else n_original
        return cls(np.array(rows, dtype=float).reshape(-1, 4), n)

    @classmethod
    def from_halves(cls, first, second) -> "PairedDataset":
        """Pair row i of ``first`` with row i of ``second`` (both (N, 2))."""
        first = np.asarray(first, dtype=float)
        second = np.asarray(second, dtype=float)
        return cls(np.hstack([first, second]), 2 * len(first))

    def __len__(self):
        return self.quads.shape[0]

    @property
    def pairs(self) -> list[ObservationPair]:
        return [ObservationPair(*map(float, row)) for row in self.quads]


def softplus(t):
    """log(1 + e^t), branched to stay finite and accurate for large |t|."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    hi = t > _SOFTPLUS_CUT
    lo = t < -_SOFTPLUS_CUT
    mid = ~(hi | lo)
    out[hi] = t[hi] + np.exp(-t[hi])
    out[lo] = np.exp(t[lo])
    out[mid] = np.log1p(np.exp(t[mid]))
    return float(out) if out.ndim == 0 else out


def _corner_logs(pair: ObservationPair, log_q):
    corners = {
        "q11": (pair.x1, pair.y1),
        "q22": (pair.x2, pair.y2),
        "q12": (pair.x1, pair.y2),
        "q21": (pair.x2, pair.y1),
    }
    out = {}
    for name, (x, y) in corners.items():
        v = float(log_q(x, y))
        if not np.isfinite(v):
            raise ScoreEvaluationError(f"log-density at {name}=(x={x}, y={y}) is {v}")
        out[name] = v
    return out


def ckl_score(pair: ObservationPair, log_q) -> float:
    """CKL score of one pair under an unnormalized log-density.

    ``log_q`` is any callable (x, y) -> log q(x, y); an
    :class:`UnnormalizedLogDensity` is the usual choice.
    """
    c = _corner_logs(pair, log_q)
    # grouped so that pure functions of x or y cancel term by term
    logit = (c["q12"] - c["q11"]) + (c["q21"] - c["q22"])
    return softplus(logit)


def kl_score(x, y, log_q) -> float:
    """Plain log score -log q(x, y); only meaningful for a normalized density."""
    v = np.asarray(log_q(x, y), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ScoreEvaluationError(f"log-density is not finite at (x={x}, y={y})")
    out = -v
    return float(out) if out.ndim == 0 else out


def h_vector(pair: ObservationPair, basis: BasisSet) -> np.ndarray:
    return h_matrix(np.array([[pair.x1, pair.y1, pair.x2, pair.y2]]), basis)[0]


def h_matrix(quads, basis: BasisSet) -> np.ndarray:
    """H-vectors of many quadruples at once, shape (N, k).

    ``quads`` is an (N, 4) array or a :class:`PairedDataset`.
    """
    if isinstance(quads, PairedDataset):
        quads = quads.quads
    q = np.asarray(quads, dtype=float).reshape(-1, 4)
    x1, y1, x2, y2 = q.T
    return (basis.evaluate(x1, y2) - basis.evaluate(x1, y1)) + (
        basis.evaluate(x2, y1) - basis.evaluate(x2, y2))


def _as_h(data, basis: BasisSet) -> np.ndarray:
    if len(data) == 0:
        raise ValueError("the dataset is empty")
    return h_matrix(data, basis)


# The three kernels below work on a precomputed (N, k) H matrix; the
# estimators call them directly to avoid re-evaluating the basis.

def softplus_mean(H: np.ndarray, theta: np.ndarray) -> float:
    return float(np.mean(softplus(H @ theta)))


def softplus_mean_gradient(H: np.ndarray, theta: np.ndarray) -> np.ndarray:
    w = expit(H @ theta)
    return (w @ H) / H.shape[0]


def softplus_mean_hessian(H: np.ndarray, theta: np.ndarray) -> np.ndarray:
    s = expit(H @ theta)
    w = s * (1.0 - s)
    out = (H * w[:, None]).T @ H / H.shape[0]
    return 0.5 * (out + out.T)


def empirical_ckl_score(data: PairedDataset, basis: BasisSet, theta) -> float:
    """Mean CKL score over the pairs with log q = theta . h."""
    theta = check_theta(theta, basis)
    return softplus_mean(_as_h(data, basis), theta)


def empirical_ckl_gradient(data: PairedDataset, basis: BasisSet, theta) -> np.ndarray:
    theta = check_theta(theta, basis)
    return softplus_mean_gradient(_as_h(data, basis), theta)


def empirical_ckl_hessian(data: PairedDataset, basis: BasisSet, theta) -> np.ndarray:
    """Hessian of the empirical score, (1/N) sum s_i (1 - s_i) H_i H_i^T.

    Positive semidefinite always, definite once the H_i span R^k.
    """
    theta = check_theta(theta, basis)
    return softplus_mean_hessian(_as_h(data, basis), theta)


def all_pairs_h_matrix(raw: Sequence, basis: BasisSet) -> np.ndarray:
    """H-vectors of all n(n-1)/2 unordered pairs i < j. O(n^2 k) memory."""
    pts = np.asarray(raw, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    # grid[a, b] = h(x_a, y_b); each pair reads four entries of it
    grid = basis.evaluate(pts[:, 0][:, None], pts[:, 1][None, :])
    diag = grid[np.arange(n), np.arange(n)]
    i, j = np.triu_indices(n, k=1)
    return (grid[i, j] - diag[i]) + (grid[j, i] - diag[j])


def all_pairs_ckl_score(raw: Sequence, basis: BasisSet, theta) -> float:
    """Mean CKL score over every unordered pair of the raw points."""
    theta = check_theta(theta, basis)
    return softplus_mean(all_pairs_h_matrix(raw, basis), theta)
