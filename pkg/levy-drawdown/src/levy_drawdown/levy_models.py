"""Spectrally negative Levy models used as surplus processes.

Three families are supported::

    CramerLundbergExp(c, lambda0, mu_claim)      premium c, exponential claims
    BrownianDrift(mu, sigma)                     drifted Brownian motion
    JumpDiffusionErlang2(c, sigma, lambda0, alpha)  Brownian part plus Erlang(2) claims

All characteristics are closed form. Functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import optimize

from .errors import ParameterError, RootFindingError

logger = logging.getLogger(__name__)

PHI_MAX_ITER = 200
PHI_RTOL = 1e-12


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not np.isfinite(value) or value <= 0.0:
            raise ParameterError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True, slots=True)
class CramerLundbergExp:
    c: float
    lambda0: float
    mu_claim: float

    def __post_init__(self) -> None:
        _require_positive(c=self.c, lambda0=self.lambda0, mu_claim=self.mu_claim)


@dataclass(frozen=True, slots=True)
class BrownianDrift:
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.mu) or self.mu == 0.0:
            raise ParameterError(f"mu must be finite and nonzero, got {self.mu}")
        _require_positive(sigma=self.sigma)


@dataclass(frozen=True, slots=True)
class JumpDiffusionErlang2:
    c: float
    sigma: float
    lambda0: float
    alpha: float

    def __post_init__(self) -> None:
        _require_positive(c=self.c, sigma=self.sigma, lambda0=self.lambda0, alpha=self.alpha)


LevyModel = Union[CramerLundbergExp, BrownianDrift, JumpDiffusionErlang2]


def family_name(model: LevyModel) -> str:
    match model:
        case CramerLundbergExp():
            return "cramer_lundberg"
        case BrownianDrift():
            return "brownian"
        case JumpDiffusionErlang2():
            return "jump_diffusion"
    raise TypeError(f"unsupported model {model!r}")


def gaussian_coeff(model: LevyModel) -> float:
    if isinstance(model, CramerLundbergExp):
        return 0.0
    return model.sigma


def drift(model: LevyModel) -> float:
    """Linear drift of the path between jumps."""
    if isinstance(model, BrownianDrift):
        return model.mu
    return model.c


def jump_rate(model: LevyModel) -> float:
    if isinstance(model, BrownianDrift):
        return 0.0
    return model.lambda0


def net_profit(model: LevyModel) -> float:
    """psi'(0+), the mean increment of X per unit time."""
    match model:
        case CramerLundbergExp(c=c, lambda0=lam, mu_claim=mu):
            return c - lam / mu
        case BrownianDrift(mu=mu):
            return mu
        case JumpDiffusionErlang2(c=c, lambda0=lam, alpha=alpha):
            return c - 2.0 * lam / alpha
    raise TypeError(f"unsupported model {model!r}")


def is_net_profit(model: LevyModel) -> bool:
    return net_profit(model) > 0.0


def laplace_exponent(model: LevyModel, theta):
    """psi(theta) = log E[exp(theta (X(1) - x))]."""
    theta = np.asarray(theta)
    match model:
        case CramerLundbergExp(c=c, lambda0=lam, mu_claim=mu):
            out = c * theta - lam + lam * mu / (mu + theta)
        case BrownianDrift(mu=mu, sigma=sigma):
            out = mu * theta + 0.5 * sigma**2 * theta**2
        case JumpDiffusionErlang2(c=c, sigma=sigma, lambda0=lam, alpha=alpha):
            out = c * theta + 0.5 * sigma**2 * theta**2 - lam + lam * alpha**2 / (alpha + theta) ** 2
        case _:
            raise TypeError(f"unsupported model {model!r}")
    return out[()] if out.ndim == 0 else out


def phi_q(model: LevyModel, q: float) -> float:
    """Largest root of psi(theta) = q."""
    if q < 0.0:
        raise ParameterError(f"q must be nonnegative, got {q}")
    match model:
        case BrownianDrift(mu=mu, sigma=sigma):
            return float((-mu + np.sqrt(mu**2 + 2.0 * q * sigma**2)) / sigma**2)
        case CramerLundbergExp(c=c, lambda0=lam, mu_claim=mu):
            disc = (c * mu - lam - q) ** 2 + 4.0 * c * q * mu
            return float(max((lam + q - c * mu + np.sqrt(disc)) / (2.0 * c), 0.0))
    return _phi_by_bracketing(model, q)


def _phi_by_bracketing(model: LevyModel, q: float) -> float:
    if q == 0.0 and net_profit(model) >= 0.0:
        return 0.0

    def excess(theta: float) -> float:
        return float(laplace_exponent(model, theta)) - q

    theta_hi = 1.0
    for _ in range(PHI_MAX_ITER):
        if excess(theta_hi) > 0.0:
            break
        theta_hi *= 2.0
    else:
        raise RootFindingError(f"could not bracket Phi_q for {model!r}, q={q}")
    logger.debug("Phi_q bracket upper end %.6g for q=%g", theta_hi, q)

    theta_lo = 0.0
    if q == 0.0:
        # psi dips below zero right of the origin; start from its minimiser
        res = optimize.minimize_scalar(
            lambda t: float(laplace_exponent(model, t)),
            bounds=(0.0, theta_hi),
            method="bounded",
            options={"xatol": 1e-14},
        )
        theta_lo = float(res.x)
        if excess(theta_lo) >= 0.0:
            return 0.0
    try:
        root, info = optimize.brentq(
            excess, theta_lo, theta_hi, rtol=PHI_RTOL, maxiter=PHI_MAX_ITER, full_output=True
        )
    except (ValueError, RuntimeError) as exc:
        raise RootFindingError(f"Phi_q did not converge for {model!r}, q={q}: {exc}") from exc
    if not info.converged:
        raise RootFindingError(f"Phi_q did not converge for {model!r}, q={q}")
    return float(root)


def levy_density(model: LevyModel, z):
    """Density of the Levy measure of the (positive) claim size z."""
    z = np.asarray(z, dtype=float)
    match model:
        case CramerLundbergExp(lambda0=lam, mu_claim=mu):
            out = lam * mu * np.exp(-mu * z)
        case JumpDiffusionErlang2(lambda0=lam, alpha=alpha):
            out = lam * alpha**2 * z * np.exp(-alpha * z)
        case BrownianDrift():
            out = np.zeros_like(z)
        case _:
            raise TypeError(f"unsupported model {model!r}")
    out = np.where(z > 0.0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def levy_tail(model: LevyModel, z):
    """Tail mass nu((z, inf)); at z = 0 this is the total jump rate."""
    z = np.asarray(z, dtype=float)
    match model:
        case CramerLundbergExp(lambda0=lam, mu_claim=mu):
            out = lam * np.exp(-mu * z)
        case JumpDiffusionErlang2(lambda0=lam, alpha=alpha):
            out = lam * (1.0 + alpha * z) * np.exp(-alpha * z)
        case BrownianDrift():
            out = np.zeros_like(z)
        case _:
            raise TypeError(f"unsupported model {model!r}")
    out = np.where(z >= 0.0, out, jump_rate(model))
    return out[()] if out.ndim == 0 else out


def tail_quantile(model: LevyModel, level: float) -> float:
    """Smallest z with levy_tail(z) <= level."""
    rate = jump_rate(model)
    if rate == 0.0 or level >= rate:
        return 0.0
    match model:
        case CramerLundbergExp(mu_claim=mu):
            return float(np.log(rate / level) / mu)
        case JumpDiffusionErlang2(alpha=alpha):
            hi = 1.0
            while levy_tail(model, hi) > level:
                hi *= 2.0
            return float(optimize.brentq(lambda z: levy_tail(model, z) - level, 0.0, hi))
    return 0.0


# ----------------------------------------------------------------------
# exponential-kernel integrals of the tail
# ----------------------------------------------------------------------

_SERIES_CUTOFF = 1e-3


def _k1(a, b, u):
    """int_0^u exp(a (u - v) + b v) dv."""
    a, b, u = np.broadcast_arrays(np.asarray(a), np.asarray(b), np.asarray(u))
    d = a - b
    du = d * u
    small = np.abs(du) < _SERIES_CUTOFF
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        exact = (np.exp(a * u) - np.exp(b * u)) / np.where(small, 1.0, d)
    series = np.exp(b * u) * u * (1.0 + du / 2.0 + du**2 / 6.0 + du**3 / 24.0)
    return np.where(small, series, exact)


def _k2(a, b, u):
    """int_0^u v exp(a (u - v) + b v) dv."""
    a, b, u = np.broadcast_arrays(np.asarray(a), np.asarray(b), np.asarray(u))
    d = a - b
    du = d * u
    small = np.abs(du) < _SERIES_CUTOFF
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        exact = (np.exp(a * u) - np.exp(b * u) * (1.0 + du)) / np.where(small, 1.0, d) ** 2
    series = np.exp(b * u) * u**2 * (0.5 + du / 6.0 + du**2 / 24.0 + du**3 / 120.0)
    return np.where(small, series, exact)


def levy_tail_transform(model: LevyModel, theta, u, *, scaled: bool = False, offset=0.0):
    """Closed form of int_0^u exp(theta (u - v)) levy_tail(offset + v) dv.

    With ``scaled`` the result is multiplied by exp(-theta u), i.e. the
    integral of exp(-theta v) levy_tail(offset + v) over (0, u). Complex
    theta is fine; ``offset`` must be nonnegative.
    """
    theta = np.asarray(theta)
    d = np.asarray(offset, dtype=float)
    match model:
        case CramerLundbergExp(lambda0=lam, mu_claim=mu):
            if scaled:
                return lam * np.exp(-mu * d) * _k1(0.0, -(theta + mu), u)
            return lam * np.exp(-mu * d) * _k1(theta, -mu, u)
        case JumpDiffusionErlang2(lambda0=lam, alpha=alpha):
            head = lam * np.exp(-alpha * d)
            if scaled:
                return head * ((1.0 + alpha * d) * _k1(0.0, -(theta + alpha), u) + alpha * _k2(0.0, -(theta + alpha), u))
            return head * ((1.0 + alpha * d) * _k1(theta, -alpha, u) + alpha * _k2(theta, -alpha, u))
        case BrownianDrift():
            return np.zeros(np.broadcast(theta, np.asarray(u)).shape, dtype=complex)
    raise TypeError(f"unsupported model {model!r}")


def sample_jumps(model: LevyModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n claim sizes from the normalised Levy measure."""
    match model:
        case CramerLundbergExp(mu_claim=mu):
            return rng.exponential(1.0 / mu, size=n)
        case JumpDiffusionErlang2(alpha=alpha):
            return rng.gamma(2.0, 1.0 / alpha, size=n)
    return np.zeros(n)
