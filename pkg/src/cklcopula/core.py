"""Copula density primitives on the unit square.

Minimum information copulas have log-densities of the form

    log c(x, y) = sum_i theta_i * h_i(x, y) + a(x) + b(y)

where ``a`` and ``b`` are normalizing functions that enforce uniform
marginals. They are generally unknown; the Gaussian copula is the one case
handled here in closed form.

The ``h_i`` are assumed linearly independent modulo additive functions of
``x`` alone and ``y`` alone. This is documented, not checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import erfc

__all__ = [
    "DomainError",
    "UnitPoint",
    "BasisFunction",
    "BasisSet",
    "register_basis",
    "basis_catalog",
    "check_theta",
    "UnnormalizedLogDensity",
    "GaussianCopulaParams",
    "std_normal_cdf",
    "std_normal_quantile",
    "gaussian_copula_log_density",
    "gaussian_normalizing_function",
    "rho_to_theta",
    "theta_to_rho",
]

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a function."""


@dataclass(frozen=True)
class UnitPoint:
    x: float
    y: float

    def __post_init__(self):
        for name in ("x", "y"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name}={v!r} is outside [0, 1]")


# ---------------------------------------------------------------------------
# basis functions

@dataclass(frozen=True)
class BasisFunction:
    """One dependence function h(x, y), vectorized over numpy arrays.

    ``factors`` optionally gives (f, g) with h(x, y) = f(x) * g(y). Product
    bases let the swap sampler precompute per-point values.
    """

    tag: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    factors: Optional[tuple] = None

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


_CATALOG: dict[str, BasisFunction] = {}


def register_basis(tag: str, func=None, factors=None, *, overwrite: bool = False) -> BasisFunction:
    """Add a basis function to the tag catalog.

    Either ``func`` or ``factors`` must be given; with only ``factors`` the
    product f(x) * g(y) is used as ``func``.
    """
    if tag in _CATALOG and not overwrite:
        raise KeyError(f"basis tag {tag!r} is already registered")
    if func is None:
        if factors is None:
            raise ValueError("need func or factors")
        f, g = factors
        func = lambda x, y: f(x) * g(y)  # noqa: E731
    bf = BasisFunction(tag, func, tuple(factors) if factors is not None else None)
    _CATALOG[tag] = bf
    return bf


def basis_catalog() -> dict[str, BasisFunction]:
    return dict(_CATALOG)


@dataclass(frozen=True)
class BasisSet:
    """The functions h_1, ..., h_k spanning the dependence structure."""

    functions: tuple[BasisFunction, ...]

    def __post_init__(self):
        if len(self.functions) < 1:
            raise ValueError("a basis needs at least one function")
        # finiteness on an interior grid; the gauss basis diverges on the edges
        g = np.linspace(0.01, 0.99, 21)
        gx, gy = np.meshgrid(g, g)
        for bf in self.functions:
            vals = np.broadcast_to(bf(gx, gy), gx.shape)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"basis function {bf.tag!r} is not finite on the unit square")

    @classmethod
    def from_tags(cls, tags: str | Sequence[str]) -> "BasisSet":
        """Build from catalog tags, e.g. ``"xy"`` or ``["xy", "x2y"]``.

        A single string may also hold comma-separated tags.
        """
        if isinstance(tags, str):
            tags = [t.strip() for t in tags.split(",") if t.strip()]
        try:
            return cls(tuple(_CATALOG[t] for t in tags))
        except KeyError as exc:
            raise KeyError(f"unknown basis tag {exc.args[0]!r}; known: {sorted(_CATALOG)}") from None

    @property
    def k(self) -> int:
        return len(self.functions)

    @property
    def tags(self) -> list[str]:
        return [bf.tag for bf in self.functions]

    @property
    def is_product(self) -> bool:
        return all(bf.factors is not None for bf in self.functions)

    def evaluate(self, x, y) -> np.ndarray:
        """Stack h_1..h_k along a trailing axis: shape ``broadcast(x, y).shape + (k,)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape, y.shape)
        return np.stack([np.broadcast_to(bf(x, y), shape) for bf in self.functions], axis=-1)


def check_theta(theta, basis: BasisSet) -> np.ndarray:
    """Coerce ``theta`` to a finite float vector of length ``basis.k``."""
    arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if arr.ndim != 1 or arr.shape[0] != basis.k:
        raise ValueError(f"theta has shape {arr.shape}, expected ({basis.k},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"theta has non-finite entries: {arr}")
    return arr


@dataclass(frozen=True)
class UnnormalizedLogDensity:
    """theta . h(x, y) + a(x) + b(y), with a = b = 0 when not supplied."""

    basis: BasisSet
    theta: np.ndarray
    additive_x: Optional[Callable] = None
    additive_y: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "theta", check_theta(self.theta, self.basis))

    def __call__(self, x, y):
        out = self.basis.evaluate(x, y) @ self.theta
        if self.additive_x is not None:
            out = out + self.additive_x(np.asarray(x, dtype=float))
        if self.additive_y is not None:
            out = out + self.additive_y(np.asarray(y, dtype=float))
        return out


# ---------------------------------------------------------------------------
# standard normal

# Acklam's rational approximation, relative error about 1.15e-9
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def std_normal_cdf(z):
    """Phi(z) via erfc, accurate in the lower tail."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


def _lower_quantile(p):
    # valid for 0 < p <= 0.5; the result is <= 0
    z = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        z[tail] = num / den
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z[mid] = num / den
    # one Halley step against the erfc-based cdf
    e = std_normal_cdf(z) - p
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)


def std_normal_quantile(p):
    """Inverse standard normal cdf for p strictly inside (0, 1).

    Works on scalars or arrays. The upper half is computed by symmetry from
    1 - p so that both tails use the accurate lower-tail cdf.

    Raises
    ------
    DomainError
        If any p is outside the open interval (0, 1) or is NaN.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("std_normal_quantile needs 0 < p < 1")
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    upper = flat > 0.5
    out[~upper] = _lower_quantile(flat[~upper])
    out[upper] = -_lower_quantile(1.0 - flat[upper])
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def _log_std_normal_pdf(z):
    return -LOG_SQRT_2PI - 0.5 * z * z


# ---------------------------------------------------------------------------
# Gaussian copula

@dataclass(frozen=True)
class GaussianCopulaParams:
    rho: float
    theta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", rho_to_theta(self.rho))

    @classmethod
    def from_theta(cls, theta: float) -> "GaussianCopulaParams":
        return cls(theta_to_rho(theta))


def rho_to_theta(rho: float) -> float:
    """theta = rho / (1 - rho^2)."""
    rho = float(rho)
    if not abs(rho) < 1.0:
        raise DomainError(f"|rho| must be < 1, got {rho!r}")
    return rho / ((1.0 - rho) * (1.0 + rho))


def theta_to_rho(theta: float) -> float:
    """Inverse of :func:`rho_to_theta`: rho = 2 theta / (1 + sqrt(1 + 4 theta^2))."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta!r}")
    if abs(theta) > 1e150:
        return math.copysign(1.0, theta) * (1.0 - 0.5 / abs(theta))
    return 2.0 * theta / (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))


def _interior(*arrays):
    for a in arrays:
        if not np.all((a > 0.0) & (a < 1.0)):
            raise DomainError("points must lie strictly inside (0, 1)^2")


def gaussian_copula_log_density(params: GaussianCopulaParams, x, y):
    """Log-density of the bivariate Gaussian copula at interior points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _interior(x, y)
    xi = np.asarray(std_normal_quantile(x))
    eta = np.asarray(std_normal_quantile(y))
    return _gaussian_log_density_scores(params.rho, xi, eta)


def _gaussian_log_density_scores(rho, xi, eta):
    # log c in terms of normal scores; shared with the MLE objective
    one_m = (1.0 - rho) * (1.0 + rho)
    quad = (rho * rho * (xi * xi + eta * eta) - 2.0 * rho * xi * eta) / (2.0 * one_m)
    out = -0.5 * math.log(one_m) - quad
    return float(out) if np.ndim(out) == 0 else out


def gaussian_normalizing_function(params: GaussianCopulaParams, x):
    """Normalizing function a(x) of the Gaussian copula; b(y) = a(y).

    With theta = rho / (1 - rho^2) and h(x, y) = Phi^-1(x) Phi^-1(y),
    theta h(x, y) + a(x) + a(y) reproduces the log-density exactly.
    """
    x = np.asarray(x, dtype=float)
    _interior(x)
    xi = np.asarray(std_normal_quantile(x))
    one_m = (1.0 - params.rho) * (1.0 + params.rho)
    out = (-LOG_SQRT_2PI - 0.25 * math.log(one_m) - _log_std_normal_pdf(xi)
           - xi * xi / (2.0 * one_m))
    return float(out) if out.ndim == 0 else out


register_basis("gauss", factors=(std_normal_quantile, std_normal_quantile))
register_basis("xy", factors=(lambda x: x, lambda y: y))
register_basis("x2y", factors=(lambda x: x * x, lambda y: y))
