"""Drawdown functions xi and minimum-capital functions theta.

A drawdown time is the first time the surplus falls below xi(running max).
``xi_bar(z) = z - xi(z)`` is the admissible gap and ``varsigma_bar`` is the
gap left after the minimum-capital requirement ``theta`` is reserved.

Usage::

    spec = DrawdownSpec(Linear(a=0.6, b=0.5))
    xi_bar(spec, 2.0)            # 1.3
    taxed = DrawdownSpec(Tax(TaxRate.constant(0.3), x0=1.0))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy import optimize

from .errors import ConstraintViolation, DomainError, ParameterError

_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, slots=True)
class Zero:
    """Classical ruin: xi identically 0."""


@dataclass(frozen=True, slots=True)
class Linear:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a < 1.0:
            raise ParameterError(f"Linear drawdown needs a < 1, got a={self.a}")
        if self.b < 0.0:
            raise ParameterError(f"Linear drawdown needs b >= 0, got b={self.b}")
        if self.b == 0.0 and self.a > 0.0:
            raise ParameterError("Linear drawdown with b = 0 requires a <= 0")


@dataclass(frozen=True, slots=True)
class TaxRate:
    """Piecewise-constant tax rate gamma(w) on the absolute surplus level w.

    ``rates[i]`` applies on ``[breakpoints[i-1], breakpoints[i])``.
    """

    rates: tuple[float, ...]
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.rates) != len(self.breakpoints) + 1:
            raise ParameterError("TaxRate needs exactly one more rate than breakpoints")
        if any(not 0.0 <= r < 1.0 for r in self.rates):
            raise ParameterError(f"tax rates must lie in [0, 1), got {self.rates}")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ParameterError("tax breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, rate: float) -> "TaxRate":
        return cls((float(rate),))

    @property
    def is_constant(self) -> bool:
        return len(self.rates) == 1

    def __call__(self, w):
        idx = np.searchsorted(np.asarray(self.breakpoints, dtype=float), w, side="right")
        return np.asarray(self.rates, dtype=float)[idx]

    def integral(self, lo, hi):
        """int_lo^hi gamma(w) dw, vectorised over hi."""
        edges = np.concatenate(([-np.inf], np.asarray(self.breakpoints, dtype=float), [np.inf]))
        hi = np.asarray(hi, dtype=float)[..., None]
        lo = np.asarray(lo, dtype=float)[..., None]
        left, right = edges[:-1], edges[1:]
        overlap = np.clip(hi, left, right) - np.clip(lo, left, right)
        return (overlap * np.asarray(self.rates)).sum(axis=-1)


@dataclass(frozen=True, slots=True)
class Tax:
    gamma: TaxRate
    x0: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.x0) or self.x0 < 0.0:
            raise ParameterError(f"Tax drawdown needs a finite x0 >= 0, got {self.x0}")


@dataclass(frozen=True, slots=True)
class Barrier:
    b: float

    def __post_init__(self) -> None:
        if self.b <= 0.0:
            raise ParameterError(f"Barrier needs b > 0, got {self.b}")


DrawdownFunction = Union[Zero, Linear, Tax, Barrier]


@dataclass(frozen=True, slots=True)
class ConstantFloor:
    """Minimum-capital function theta identically equal to v."""

    v: float

    def __post_init__(self) -> None:
        if self.v < 0.0:
            raise ParameterError(f"minimum capital must be nonnegative, got {self.v}")

    def __call__(self, z):
        return np.full(np.shape(z), self.v, dtype=float)[()]


@dataclass(frozen=True, slots=True)
class DrawdownSpec:
    xi: DrawdownFunction = field(default_factory=Zero)
    theta_fn: Callable | None = None

    @property
    def constrained(self) -> bool:
        if self.theta_fn is None:
            return False
        return not (isinstance(self.theta_fn, ConstantFloor) and self.theta_fn.v == 0.0)


def tax_spec(rate: float | TaxRate, x0: float) -> DrawdownSpec:
    gamma = rate if isinstance(rate, TaxRate) else TaxRate.constant(rate)
    return DrawdownSpec(Tax(gamma, x0))


def dividend_spec(b: float) -> DrawdownSpec:
    return DrawdownSpec(Barrier(b))


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------


def _out(z, value):
    value = np.asarray(value, dtype=float)
    return float(value) if np.ndim(z) == 0 else value


def xi(spec: DrawdownSpec, z):
    zs = np.asarray(z, dtype=float)
    match spec.xi:
        case Zero():
            value = np.zeros_like(zs)
        case Linear(a=a, b=b):
            value = a * zs - b
        case Tax(gamma=gamma, x0=x0):
            if np.any(zs < x0 - _DOMAIN_SLACK):
                raise DomainError(f"tax drawdown is defined for z >= x0={x0}")
            value = gamma.integral(x0, np.maximum(zs, x0))
        case Barrier(b=b):
            value = np.maximum(zs - b, 0.0)
        case other:
            raise TypeError(f"unsupported drawdown function {other!r}")
    return _out(z, value)


def xi_bar(spec: DrawdownSpec, z):
    zs = np.asarray(z, dtype=float)
    return _out(z, zs - np.asarray(xi(spec, zs)))


def theta_value(spec: DrawdownSpec, z):
    zs = np.asarray(z, dtype=float)
    if spec.theta_fn is None:
        return _out(z, np.zeros_like(zs))
    return _out(z, spec.theta_fn(zs))


def varsigma(spec: DrawdownSpec, z):
    zs = np.asarray(z, dtype=float)
    return _out(z, np.asarray(xi(spec, zs)) + np.asarray(theta_value(spec, zs)))


def varsigma_bar(spec: DrawdownSpec, z):
    zs = np.asarray(z, dtype=float)
    gap = np.asarray(xi_bar(spec, zs))
    floor = np.asarray(theta_value(spec, zs))
    if np.any(floor < 0.0) or np.any(floor >= gap):
        raise ConstraintViolation("minimum capital must satisfy 0 <= theta(z) < xi_bar(z)")
    return _out(z, gap - floor)


def gamma_at(spec: DrawdownSpec, z):
    if not isinstance(spec.xi, Tax):
        raise DomainError("gamma_at needs a tax drawdown spec")
    return _out(z, spec.xi.gamma(np.asarray(z, dtype=float)))


def xi_bar_inverse_tax(spec: DrawdownSpec, s: float) -> float:
    """Running max z of X with xi_bar(z) = s, i.e. the untaxed level behind taxed level s."""
    if not isinstance(spec.xi, Tax):
        raise DomainError("xi_bar_inverse_tax needs a tax drawdown spec")
    gamma, x0 = spec.xi.gamma, spec.xi.x0
    if s < x0 - _DOMAIN_SLACK:
        raise DomainError(f"s={s} lies below x0={x0}")
    if gamma.is_constant:
        return x0 + (s - x0) / (1.0 - gamma.rates[0])
    hi = x0 + (s - x0) / (1.0 - max(gamma.rates)) + 1.0
    return float(optimize.brentq(lambda z: xi_bar(spec, z) - s, x0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps))


# ----------------------------------------------------------------------
# piecewise-affine description of the gap functions
# ----------------------------------------------------------------------


class AffinePiece(NamedTuple):
    start: float
    end: float
    slope: float
    intercept: float

    def __call__(self, z):
        return self.slope * np.asarray(z, dtype=float) + self.intercept


def breakpoints(spec: DrawdownSpec) -> list[float]:
    match spec.xi:
        case Barrier(b=b):
            return [b]
        case Tax(gamma=gamma):
            return list(gamma.breakpoints)
    return []


def affine_pieces(spec: DrawdownSpec, lo: float, hi: float, *, constrained: bool = False) -> list[AffinePiece] | None:
    """Pieces of xi_bar (or varsigma_bar when ``constrained``) over [lo, hi].

    Returns None when the gap is not piecewise affine (a general theta).
    """
    shift = 0.0
    if constrained and spec.theta_fn is not None:
        if not isinstance(spec.theta_fn, ConstantFloor):
            return None
        shift = spec.theta_fn.v
    cuts = [lo] + [p for p in breakpoints(spec) if lo < p < hi] + [hi]
    pieces = []
    for start, end in zip(cuts, cuts[1:]):
        if end <= start:
            continue
        mid = 0.5 * (start + end)
        match spec.xi:
            case Zero():
                slope, intercept = 1.0, 0.0
            case Linear(a=a, b=b):
                slope, intercept = 1.0 - a, b
            case Barrier(b=b):
                slope, intercept = (1.0, 0.0) if mid < b else (0.0, b)
            case Tax(gamma=gamma):
                slope = 1.0 - float(gamma(mid))
                intercept = float(xi_bar(spec, start)) - slope * start
            case other:
                raise TypeError(f"unsupported drawdown function {other!r}")
        pieces.append(AffinePiece(start, end, slope, intercept - shift))
    return pieces
