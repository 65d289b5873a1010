"""Closed-form q-scale functions W_q for the supported model families.

Every W_q here is a finite exponential sum

    W_q(x) = sum_j coef_j * exp(theta_j x),   x >= 0,

whose coefficients are the residues of 1 / (psi(theta) - q). A ``ScaleSet``
caches exponents and coefficients per (model, q); ``q`` may be complex, in
which case every evaluation returns complex values.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, RootFindingError
from .levy_models import (
    BrownianDrift,
    CramerLundbergExp,
    JumpDiffusionErlang2,
    LevyModel,
    laplace_exponent,
    phi_q,
)

logger = logging.getLogger(__name__)

ROOT_GAP_TOL = 1e-9
IMAG_TOL = 1e-10


@dataclass(frozen=True, slots=True, eq=False)
class ScaleSet:
    model: LevyModel
    q: complex | float
    exponents: np.ndarray
    coefficients: np.ndarray
    w0_plus: float
    is_complex: bool

    @property
    def dominant(self) -> int:
        """Index of the exponent with the largest real part."""
        return int(np.argmax(self.exponents.real))


def build_scale_set(model: LevyModel, q: complex | float) -> ScaleSet:
    """Exponents and residues of W_q; cached per (model, q)."""
    is_complex = isinstance(q, complex) or np.iscomplexobj(q)
    if is_complex:
        q = complex(q)
        if q.imag == 0.0:
            q, is_complex = q.real, False
    else:
        q = float(q)
    if not is_complex and q < 0.0:
        raise ParameterError(f"q must be nonnegative, got {q}")
    return _build_cached(model, q, is_complex)


@functools.lru_cache(maxsize=8192)
def _build_cached(model: LevyModel, q, is_complex: bool) -> ScaleSet:
    match model:
        case CramerLundbergExp():
            exps, coefs = _cramer_lundberg(model, q)
            w0 = 1.0 / model.c
        case BrownianDrift():
            exps, coefs = _brownian(model, q)
            w0 = 0.0
        case JumpDiffusionErlang2():
            exps, coefs = _jump_diffusion(model, q)
            w0 = 0.0
        case _:
            raise TypeError(f"unsupported model {model!r}")
    exps = np.asarray(exps, dtype=complex)
    exps.setflags(write=False)
    coefs = np.asarray(coefs, dtype=complex)
    coefs.setflags(write=False)
    return ScaleSet(model, q, exps, coefs, w0, is_complex)


def _csqrt(value):
    return np.sqrt(complex(value)) if isinstance(value, complex) else np.emath.sqrt(value)


def _check_distinct(roots: np.ndarray, model: LevyModel, q) -> None:
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < ROOT_GAP_TOL:
                raise RootFindingError(f"non-distinct roots for {model!r} at q={q}: {roots}")


def _cramer_lundberg(model: CramerLundbergExp, q):
    c, lam, mu = model.c, model.lambda0, model.mu_claim
    if not isinstance(q, complex) and q == 0.0:
        roots = np.array([0.0, (lam - c * mu) / c], dtype=complex)
    else:
        root_disc = _csqrt((c * mu - lam - q) ** 2 + 4.0 * c * q * mu)
        roots = np.array(
            [(lam + q - c * mu + root_disc) / (2.0 * c), (lam + q - c * mu - root_disc) / (2.0 * c)],
            dtype=complex,
        )
    _check_distinct(roots, model, q)
    gap = roots[0] - roots[1]
    coefs = np.array([(mu + roots[0]) / (c * gap), -(mu + roots[1]) / (c * gap)])
    return roots, coefs


def _brownian(model: BrownianDrift, q):
    mu, sigma = model.mu, model.sigma
    delta = _csqrt(mu**2 + 2.0 * q * sigma**2)
    if abs(delta) < ROOT_GAP_TOL:
        raise RootFindingError(f"non-distinct roots for {model!r} at q={q}")
    roots = np.array([(delta - mu) / sigma**2, (-delta - mu) / sigma**2], dtype=complex)
    a0 = 1.0 / delta
    return roots, np.array([a0, -a0], dtype=complex)


def jump_diffusion_quartic(model: JumpDiffusionErlang2, q) -> np.ndarray:
    """Coefficients (highest degree first) of (psi(theta) - q)(alpha + theta)^2."""
    c, sigma, lam, alpha = model.c, model.sigma, model.lambda0, model.alpha
    s2 = sigma**2
    return np.array(
        [
            0.5 * s2,
            alpha * s2 + c,
            0.5 * s2 * alpha**2 - lam - q + 2.0 * c * alpha,
            c * alpha**2 - 2.0 * (lam + q) * alpha,
            -q * alpha**2,
        ],
        dtype=complex,
    )


def _jump_diffusion(model: JumpDiffusionErlang2, q):
    poly = jump_diffusion_quartic(model, q)
    roots = np.roots(poly).astype(complex)
    # one Newton step on the quartic to recover precision lost in the eigensolver
    dpoly = np.polyder(poly)
    slope = np.polyval(dpoly, roots)
    safe = np.abs(slope) > 0.0
    roots = np.where(safe, roots - np.polyval(poly, roots) / np.where(safe, slope, 1.0), roots)
    _check_distinct(roots, model, q)
    half_s2 = 0.5 * model.sigma**2
    coefs = np.empty(4, dtype=complex)
    for j, root in enumerate(roots):
        others = np.delete(roots, j)
        coefs[j] = (model.alpha + root) ** 2 / (half_s2 * np.prod(root - others))
    return roots, coefs


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------


def _realize(sset: ScaleSet, values: np.ndarray, magnitude: np.ndarray):
    """Real part of a real-q scale sum; a surviving imaginary part means unpaired roots."""
    if sset.is_complex:
        return values
    imag = np.abs(values.imag)
    if np.any(imag > IMAG_TOL * np.maximum(magnitude, np.finfo(float).tiny)):
        raise RootFindingError(
            f"scale sum for {sset.model!r} at real q={sset.q:g} keeps imaginary part {imag.max():.3e}"
        )
    return values.real



def _scalar(x, out):
    if np.ndim(x) == 0:
        return out[()].item() if isinstance(out, np.ndarray) else out
    return out


def _terms(sset: ScaleSet, x: np.ndarray, power: int):
    weights = sset.coefficients * sset.exponents**power
    grid = np.exp(np.multiply.outer(x, sset.exponents)) * weights
    return grid.sum(axis=-1), np.abs(grid).sum(axis=-1)


def w(sset: ScaleSet, x):
    """W_q(x); zero for x < 0 and W_q(0+) at the origin."""
    xs = np.asarray(x, dtype=float)
    pos = np.where(xs > 0.0, xs, 0.0)
    total, size = _terms(sset, pos, 0)
    out = _realize(sset, total, size)
    out = np.where(xs > 0.0, out, np.where(xs == 0.0, sset.w0_plus, 0.0))
    return _scalar(x, out)


def w1(sset: ScaleSet, x):
    """W_q'(x); the right derivative at 0."""
    xs = np.asarray(x, dtype=float)
    pos = np.where(xs >= 0.0, xs, 0.0)
    total, size = _terms(sset, pos, 1)
    out = np.where(xs >= 0.0, _realize(sset, total, size), 0.0)
    return _scalar(x, out)


def w2(sset: ScaleSet, x):
    xs = np.asarray(x, dtype=float)
    pos = np.where(xs >= 0.0, xs, 0.0)
    total, size = _terms(sset, pos, 2)
    out = np.where(xs >= 0.0, _realize(sset, total, size), 0.0)
    return _scalar(x, out)


def scaled_w(sset: ScaleSet, x):
    """W_q(x) exp(-theta_d x) with theta_d the dominant exponent; no overflow."""
    xs = np.asarray(x, dtype=float)
    shift = sset.exponents - sset.exponents[sset.dominant]
    grid = np.exp(np.multiply.outer(xs, shift)) * sset.coefficients
    return _realize(sset, grid.sum(axis=-1), np.abs(grid).sum(axis=-1))


def log_w(sset: ScaleSet, x):
    """log W_q(x) for x > 0 (principal branch when q is complex)."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs <= 0.0):
        raise DomainError("log_w requires x > 0")
    lead = sset.exponents[sset.dominant]
    lead = lead if sset.is_complex else lead.real
    out = lead * xs + np.log(scaled_w(sset, xs))
    return _scalar(x, out)


def log_w_path(sset: ScaleSet, u: np.ndarray) -> np.ndarray:
    """log W_q along an increasing grid u > 0 with a continuous branch."""
    u = np.asarray(u, dtype=float)
    if not sset.is_complex:
        return np.asarray(log_w(sset, u), dtype=float)
    lead = sset.exponents[sset.dominant]
    rest = np.log(scaled_w(sset, u))
    return lead * u + rest.real + 1j * np.unwrap(rest.imag)


def log_derivative(sset: ScaleSet, x):
    """W_q'(x) / W_q(x), computed from the scaled sum."""
    xs = np.asarray(x, dtype=float)
    shift = sset.exponents - sset.exponents[sset.dominant]
    grid = np.exp(np.multiply.outer(xs, shift)) * sset.coefficients
    num = (grid * sset.exponents).sum(axis=-1)
    den = grid.sum(axis=-1)
    out = _realize(sset, num / den, np.abs(num / den))
    return _scalar(x, out)


def creeping_kernel(sset: ScaleSet, u):
    """W'(u)^2 / W(u) - W''(u), assembled from pairwise exponent gaps."""
    us = np.asarray(u, dtype=float)
    theta, coef = sset.exponents, sset.coefficients
    lead = theta[sset.dominant]
    i, j = np.triu_indices(len(theta), k=1)
    pair = -coef[i] * coef[j] * (theta[i] - theta[j]) ** 2
    num = (np.exp(np.multiply.outer(us, theta[i] + theta[j] - lead)) * pair).sum(axis=-1)
    den = (np.exp(np.multiply.outer(us, theta - lead)) * coef).sum(axis=-1)
    ratio = num / den
    out = _realize(sset, ratio, np.abs(ratio))
    return _scalar(u, out)


def w_infinity(sset: ScaleSet) -> float:
    """lim W_q(x) as x -> inf; finite only when the dominant exponent is 0."""
    lead = sset.exponents[sset.dominant]
    if sset.is_complex or abs(lead) > 0.0:
        return float("inf")
    return float(sset.coefficients[sset.dominant].real)


def verify_laplace_identity(sset: ScaleSet, theta: float) -> float:
    """|int e^{-theta x} W_q(x) dx - 1/(psi(theta) - q)| using the term-wise transform."""
    if sset.is_complex:
        raise DomainError("verify_laplace_identity needs a real q")
    phi = phi_q(sset.model, sset.q)
    if theta <= phi:
        raise DomainError(f"theta={theta} must exceed Phi_q={phi}")
    transform = np.sum(sset.coefficients / (theta - sset.exponents))
    target = 1.0 / (float(laplace_exponent(sset.model, theta)) - sset.q)
    return float(abs(transform - target))
