"""Expected discounted penalty functions at general drawdown times.

The surplus X starts at x and is stopped at the drawdown time
tau = inf{t : X(t) < xi(running max)}. With ell the time the final running
maximum s was reached, every functional here is built from

* the survival factor  S(s) = exp(-int_x^s W_q'(gap(z)) / W_q(gap(z)) dz),
* the jump densities   S(s) (W_lam'(s-y) - k W_lam(s-y)) nu(y+z) dy dz   (y < s)
                       S(s) W_lam(0+) nu(s+z) dz                           (y = s)
* the creeping density (sigma^2/2) S(s) (W_lam'^2/W_lam - W_lam'')(xi_bar(s)),

with q discounting ell and lam discounting tau - ell. With omega = 1 the
(y, z) integrals are closed form, so drawdown probabilities and joint Laplace
transforms reduce to a single adaptive s-integral.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .config import QuadratureConfig
from .drawdown import (
    DrawdownSpec,
    TaxRate,
    affine_pieces,
    breakpoints,
    dividend_spec,
    gamma_at,
    tax_spec,
    varsigma_bar,
    xi,
    xi_bar,
    xi_bar_inverse_tax,
)
from .errors import DomainError, ParameterError, QuadratureError, SingularJacobianError
from .levy_models import (
    CramerLundbergExp,
    LevyModel,
    gaussian_coeff,
    jump_rate,
    levy_density,
    levy_tail,
    levy_tail_transform,
    phi_q,
    tail_quantile,
)
from .scale_functions import (
    ScaleSet,
    build_scale_set,
    creeping_kernel,
    log_derivative,
    log_w,
    log_w_path,
    w,
    w1,
    w2,
    w_infinity,
)

logger = logging.getLogger(__name__)

_S_GRID_START = 1.0
_S_GRID_DOUBLINGS = 60
_COMPLEX_REFINE = 65
_BARRIER_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class PenaltySpec:
    """Penalty omega(y, w) on (surplus before, surplus at) drawdown.

    ``omega=None`` stands for omega = 1. ``bound`` is the caller's bound on
    sup |omega| and scales the truncation tolerances.
    """

    omega: Callable[[float, float], float] | None = None
    q: float = 0.0
    lam: float = 0.0
    bound: float = 1.0

    def __post_init__(self) -> None:
        if self.q < 0.0 or self.lam < 0.0:
            raise ParameterError("discount rates q and lam must be nonnegative")
        if self.bound <= 0.0:
            raise ParameterError("penalty bound must be positive")

    @property
    def is_unit(self) -> bool:
        return self.omega is None

    def value(self, y: float, w_at: float) -> float:
        return 1.0 if self.omega is None else float(self.omega(y, w_at))


@dataclass(frozen=True, slots=True)
class DensityPoint:
    s: float
    y: float
    z: float
    value: float
    part: str  # "continuous", "atom" or "creeping"


def _put_payoff(strike: float, shift: float, y: float, w_at: float) -> float:
    return max(strike - float(np.exp(shift - w_at)), 0.0)


def american_put_penalty(strike: float, log_price_shift: float, *, q: float = 0.0) -> PenaltySpec:
    """omega(y, w) = max(K - exp(a - w), 0): a perpetual put exercised at drawdown."""
    if strike <= 0.0:
        raise ParameterError("strike must be positive")
    omega = functools.partial(_put_payoff, float(strike), float(log_price_shift))
    return PenaltySpec(omega=omega, q=q, lam=q, bound=float(strike))


# ----------------------------------------------------------------------
# quadrature helpers
# ----------------------------------------------------------------------


def _quad(func: Callable[[float], float], a: float, b: float, cfg: QuadratureConfig, points=None) -> tuple[float, float]:
    if b <= a:
        return 0.0, 0.0
    inner = sorted({float(p) for p in (points or ()) if a < p < b}) or None
    result = integrate.quad(
        func,
        a,
        b,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        points=inner,
        full_output=1,
    )
    value, err = float(result[0]), float(result[1])
    if len(result) > 3:
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(value))
        if not np.isfinite(value) or err > 10.0 * tol:
            raise QuadratureError(f"quadrature on [{a:.6g}, {b:.6g}] failed: {result[3]}", estimate=value, error_bound=err)
        logger.warning("quadrature on [%.6g, %.6g] flagged (%s); error %.3e", a, b, result[3], err)
    return value, err


def _quad_any(func, a, b, cfg, points=None, *, is_complex: bool = False):
    if not is_complex:
        return _quad(lambda t: float(np.real(func(t))), a, b, cfg, points)[0]
    re = _quad(lambda t: float(np.real(func(t))), a, b, cfg, points)[0]
    im = _quad(lambda t: float(np.imag(func(t))), a, b, cfg, points)[0]
    return complex(re, im)


def _composite_rule(a: float, b: float, cuts, cfg: QuadratureConfig) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on [a, b] doubling in width away from a."""
    edges = [a]
    width = cfg.first_panel
    while edges[-1] + width < b:
        edges.append(edges[-1] + width)
        width *= 2.0
    edges.append(b)
    edges = np.unique(np.concatenate((edges, [c for c in cuts if a < c < b])))
    base_x, base_w = np.polynomial.legendre.leggauss(cfg.panel_nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (hi - lo) * base_x + 0.5 * (hi + lo)).ravel()
    weights = (0.5 * (hi - lo) * base_w).ravel()
    return nodes, weights


# ----------------------------------------------------------------------
# survival factors
# ----------------------------------------------------------------------


def _log_integral(sset: ScaleSet, spec: DrawdownSpec, x: float, s_grid, *, constrained: bool, cfg: QuadratureConfig | None = None):
    """int_x^s W'/W(gap(z)) dz for every s in s_grid (gap = xi_bar or varsigma_bar)."""
    s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
    out = np.zeros(s_grid.shape, dtype=complex if sset.is_complex else float)
    hi = float(s_grid.max())
    if hi <= x:
        return out
    pieces = affine_pieces(spec, x, hi, constrained=constrained)
    if pieces is None:
        return _log_integral_general(sset, spec, x, s_grid, cfg or QuadratureConfig())
    base = 0.0
    for piece in pieces:
        if piece.end <= piece.start:
            continue
        mask = (s_grid > piece.start) & (s_grid <= piece.end)
        pts = s_grid[mask]
        if piece.slope == 0.0:
            rate = log_derivative(sset, piece.intercept)
            out[mask] = base + (pts - piece.start) * rate
            base = base + (piece.end - piece.start) * rate
            continue
        u_eval = np.concatenate(([piece(piece.start)], piece(pts), [piece(piece.end)]))
        if sset.is_complex:
            u_eval = np.concatenate((u_eval, np.linspace(u_eval[0], u_eval[-1], _COMPLEX_REFINE)))
        u_sorted, inverse = np.unique(u_eval, return_inverse=True)
        logs = log_w_path(sset, u_sorted)[inverse.ravel()]
        out[mask] = base + (logs[1 : 1 + len(pts)] - logs[0]) / piece.slope
        base = base + (logs[1 + len(pts)] - logs[0]) / piece.slope
    return out


def _log_integral_general(sset: ScaleSet, spec: DrawdownSpec, x: float, s_grid: np.ndarray, cfg: QuadratureConfig):
    inner = QuadratureConfig(
        rel_tol=cfg.rel_tol / 10.0, abs_tol=cfg.abs_tol, max_subdivisions=cfg.max_subdivisions
    )
    out = np.zeros(s_grid.shape, dtype=complex if sset.is_complex else float)

    def rate(z: float):
        return log_derivative(sset, float(varsigma_bar(spec, z)))

    cum, prev = 0.0, x
    for idx in np.argsort(s_grid):
        s = float(s_grid[idx])
        if s > prev:
            cum = cum + _quad_any(rate, prev, s, inner, breakpoints(spec), is_complex=sset.is_complex)
            prev = s
        out[idx] = cum
    return out


def _survival(sset, spec, x, s, *, constrained=False, cfg=None):
    value = np.exp(-_log_integral(sset, spec, x, [s], constrained=constrained, cfg=cfg)[0])
    return complex(value) if sset.is_complex else float(value)


def exit_prob_drawdown(model: LevyModel, spec: DrawdownSpec, q, x: float, s: float, *, constrained: bool = False, cfg: QuadratureConfig | None = None):
    """E_x(exp(-q tau_s+); tau_s+ < tau): reach level s before the drawdown."""
    if x <= 0.0:
        raise DomainError(f"initial surplus must be positive, got x={x}")
    if s <= x:
        raise DomainError(f"exit level s={s} must exceed x={x}")
    return _survival(build_scale_set(model, q), spec, x, s, constrained=constrained, cfg=cfg)


def _drawdown_after(sset0: ScaleSet, spec: DrawdownSpec, s: float) -> float:
    """Bound on P(drawdown ever | running max s just attained), from the q = 0 survival limit."""
    w_inf = w_infinity(sset0)
    if not np.isfinite(w_inf):
        return 1.0
    pieces = affine_pieces(spec, s, max([s, *breakpoints(spec)]) + 1.0)
    total = 0.0
    for piece in pieces[:-1]:
        if piece.slope == 0.0:
            total += (piece.end - piece.start) * log_derivative(sset0, piece.intercept)
        else:
            total += (log_w(sset0, piece(piece.end)) - log_w(sset0, piece(piece.start))) / piece.slope
    last = pieces[-1]
    if last.slope == 0.0:
        return 1.0
    total += (np.log(w_inf) - log_w(sset0, last(last.start))) / last.slope
    return float(-np.expm1(-total))


def drawdown_probability_limit(model: LevyModel, spec: DrawdownSpec, x: float) -> float:
    """P_x(tau < inf) as 1 - lim_{s -> inf} exit_prob_drawdown at q = 0."""
    if x <= 0.0:
        raise DomainError(f"initial surplus must be positive, got x={x}")
    return _drawdown_after(build_scale_set(model, 0.0), spec, x)


def survival_tail_bound(model: LevyModel, spec: DrawdownSpec, q, x: float, s: float) -> float:
    """Bound on the omega = 1 mass of the s-integral beyond s.

    Reaching s before the drawdown (at rate Re q) times the chance of a
    drawdown at all once the running max is s.
    """
    if s <= x:
        return 1.0
    sset_q = build_scale_set(model, float(np.real(q)))
    return _survival(sset_q, spec, x, s) * _drawdown_after(build_scale_set(model, 0.0), spec, s)


def choose_s_max(model: LevyModel, spec: DrawdownSpec, q, x: float, cfg: QuadratureConfig, *, bound: float = 1.0) -> float:
    """Smallest x + 2^k beyond which the s-integrand carries less than s_max_prob mass."""
    target = cfg.s_max_prob / bound
    tail = 1.0
    for k in range(_S_GRID_DOUBLINGS):
        s = x + _S_GRID_START * 2.0**k
        tail = survival_tail_bound(model, spec, q, x, s)
        if tail < target:
            logger.debug("s-integral truncated at %.6g (tail bound %.3e)", s, tail)
            return s
    raise QuadratureError("no s-truncation point found", estimate=float("nan"), error_bound=tail)


# ----------------------------------------------------------------------
# omega = 1 kernels
# ----------------------------------------------------------------------


def _jump_kernel(model: LevyModel, sset: ScaleSet, gap, floor_gap):
    """W(0+) nu_bar(U) + int_0^V (W'(u) - k W(u)) nu_bar(U - u) du, k = W'/W(V).

    ``gap`` is U = xi_bar(s) and ``floor_gap`` is V = varsigma_bar(s) <= U.
    The bracket vanishes at u = V and is nonnegative on (0, V]; pre-drawdown
    levels below varsigma(s) are excluded by the constraint.
    """
    U = np.atleast_1d(np.asarray(gap, dtype=float))
    V = np.atleast_1d(np.asarray(floor_gap, dtype=float))
    if jump_rate(model) == 0.0:
        return np.zeros(U.shape, dtype=complex if sset.is_complex else float)
    theta, coef = sset.exponents, sset.coefficients
    n = len(theta)
    lead = theta[sset.dominant]
    scaled = (np.exp(np.multiply.outer(V, theta - lead)) * coef).sum(axis=-1)
    grows = theta.real >= 0.0
    offset = np.maximum(U - V, 0.0)[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        direct = levy_tail_transform(model, theta[None, :], V[:, None], offset=offset)
        shifted = levy_tail_transform(model, theta[None, :], V[:, None], scaled=True, offset=offset)
    factor = np.where(grows[None, :], shifted, direct)
    expo = (theta - lead)[None, :, None] * V[:, None, None] + np.where(grows, theta, 0.0)[None, None, :] * V[:, None, None]
    expo = np.where(np.eye(n, dtype=bool)[None], 0.0, expo)
    pair = coef[:, None] * coef[None, :] * (theta[None, :] - theta[:, None])
    conv = (pair[None] * np.exp(expo) * factor[:, None, :]).sum(axis=(1, 2)) / scaled
    out = sset.w0_plus * levy_tail(model, U) + conv
    return out if sset.is_complex else out.real


def _creep_kernel(model: LevyModel, sset: ScaleSet, gap):
    sigma = gaussian_coeff(model)
    U = np.atleast_1d(np.asarray(gap, dtype=float))
    if sigma == 0.0:
        return np.zeros(U.shape, dtype=complex if sset.is_complex else float)
    return 0.5 * sigma**2 * np.asarray(creeping_kernel(sset, U))


def _unit_integrand(model, spec, sset_q, sset_lam, x, s, cfg=None):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    gap = np.asarray(xi_bar(spec, s))
    if spec.constrained:
        floor_gap = np.asarray(varsigma_bar(spec, s))
        surv = np.exp(-_log_integral(sset_q, spec, x, s, constrained=True, cfg=cfg))
        return surv * _jump_kernel(model, sset_lam, gap, floor_gap)
    surv = np.exp(-_log_integral(sset_q, spec, x, s, constrained=False))
    return surv * (_jump_kernel(model, sset_lam, gap, gap) + _creep_kernel(model, sset_lam, gap))


def _unit_penalty(model, spec, q, lam, x, cfg):
    sset_q = build_scale_set(model, q)
    sset_lam = build_scale_set(model, lam)
    s_max = choose_s_max(model, spec, q, x, cfg)
    is_complex = sset_q.is_complex or sset_lam.is_complex
    return _quad_any(
        lambda s: _unit_integrand(model, spec, sset_q, sset_lam, x, s, cfg)[0],
        x,
        s_max,
        cfg,
        breakpoints(spec),
        is_complex=is_complex,
    )


# ----------------------------------------------------------------------
# pointwise densities
# ----------------------------------------------------------------------


def _check_s(x: float, s: float) -> None:
    if x <= 0.0:
        raise DomainError(f"initial surplus must be positive, got x={x}")
    if s <= x:
        raise DomainError(f"running maximum s={s} must exceed x={x}")


def creeping_density(model: LevyModel, spec: DrawdownSpec, q, lam, x: float, s: float):
    """Density in s of {X(tau) = xi(s), running max s}, discounted."""
    _check_s(x, s)
    if gaussian_coeff(model) == 0.0:
        return 0.0
    sset_lam = build_scale_set(model, lam)
    surv = _survival(build_scale_set(model, q), spec, x, s)
    return surv * _creep_kernel(model, sset_lam, float(xi_bar(spec, s)))[0]


def jump_density_continuous(model: LevyModel, spec: DrawdownSpec, q, lam, x: float, s: float, y: float, z: float):
    """Density in (s, y, z) of running max s, X(tau-) = y < s and -X(tau) = z."""
    _check_s(x, s)
    if y >= s:
        return 0.0
    level = float(xi(spec, s))
    if y < level or z <= -level:
        raise DomainError(f"(y={y}, z={z}) outside the jump domain at s={s}")
    floor_gap = float(varsigma_bar(spec, s))
    if s - y > floor_gap:
        return 0.0
    sset_lam = build_scale_set(model, lam)
    surv = _survival(build_scale_set(model, q), spec, x, s, constrained=spec.constrained)
    bracket = w1(sset_lam, s - y) - w(sset_lam, s - y) * log_derivative(sset_lam, floor_gap)
    return surv * bracket * float(levy_density(model, y + z))


def jump_density_atom(model: LevyModel, spec: DrawdownSpec, q, lam, x: float, s: float, z: float):
    """Density in (s, z) of a claim taking X from its running max s to -z."""
    _check_s(x, s)
    if z <= -float(xi(spec, s)):
        raise DomainError(f"z={z} outside the jump domain at s={s}")
    sset_lam = build_scale_set(model, lam)
    if sset_lam.w0_plus == 0.0:
        return 0.0
    surv = _survival(build_scale_set(model, q), spec, x, s, constrained=spec.constrained)
    return surv * sset_lam.w0_plus * float(levy_density(model, s + z))


def density_point(model, spec, q, lam, x, s, y=None, z=None) -> DensityPoint:
    """Tagged density at one point: creeping when y and z are omitted, atom when y == s."""
    if y is None or z is None:
        return DensityPoint(s, float(xi(spec, s)), -float(xi(spec, s)), creeping_density(model, spec, q, lam, x, s), "creeping")
    if y == s:
        return DensityPoint(s, y, z, jump_density_atom(model, spec, q, lam, x, s, z), "atom")
    return DensityPoint(s, y, z, jump_density_continuous(model, spec, q, lam, x, s, y, z), "continuous")


def jump_density_yz(model: LevyModel, spec: DrawdownSpec, q, lam, x: float, y: float, z: float, cfg: QuadratureConfig | None = None) -> float:
    """Density in (y, z) of (X(tau-), -X(tau)) on jumps, the running max integrated out."""
    cfg = cfg or QuadratureConfig()

    def integrand(s: float) -> float:
        if s - y > float(varsigma_bar(spec, s)):
            return 0.0
        return jump_density_continuous(model, spec, q, lam, x, s, y, z)

    s_max = choose_s_max(model, spec, q, x, cfg)
    lo = max(x, y)
    total = _quad(integrand, lo, max(s_max, lo), cfg, breakpoints(spec))[0]
    if y > x:
        total += jump_density_atom(model, spec, q, lam, x, y, z)
    return total


# ----------------------------------------------------------------------
# penalty functionals
# ----------------------------------------------------------------------


def _general_penalty(model: LevyModel, spec: DrawdownSpec, pen: PenaltySpec, x: float, cfg: QuadratureConfig) -> float:
    sset_q = build_scale_set(model, pen.q)
    sset_lam = build_scale_set(model, pen.lam)
    s_max = choose_s_max(model, spec, pen.q, x, cfg, bound=pen.bound)
    z_cap = tail_quantile(model, cfg.z_max_tail / pen.bound)
    sigma = gaussian_coeff(model)
    has_jumps = jump_rate(model) > 0.0

    def claim_part(y: float, level: float) -> float:
        # int over claims J > y - xi(s) of omega(y, y - J) nu(J) dJ
        lo = max(y - level, 0.0)
        return _quad(lambda size: pen.value(y, y - size) * float(levy_density(model, size)), lo, lo + z_cap, cfg)[0]

    def outer(s: float) -> float:
        level = float(xi(spec, s))
        gap = float(xi_bar(spec, s))
        total = 0.0
        if has_jumps:
            surv = _survival(sset_q, spec, x, s, constrained=spec.constrained, cfg=cfg)
            floor_gap = float(varsigma_bar(spec, s))
            k = log_derivative(sset_lam, floor_gap)
            atom = sset_lam.w0_plus * claim_part(s, level) if sset_lam.w0_plus else 0.0
            body = _quad(
                lambda y: (w1(sset_lam, s - y) - k * w(sset_lam, s - y)) * claim_part(y, level),
                s - floor_gap,
                s,
                cfg,
            )[0]
            total += surv * (atom + body)
        if sigma > 0.0 and not spec.constrained:
            surv = _survival(sset_q, spec, x, s)
            total += surv * _creep_kernel(model, sset_lam, gap)[0] * pen.value(level, level)
        return total

    return _quad(outer, x, s_max, cfg, breakpoints(spec))[0]


def penalty_at_drawdown(model: LevyModel, spec: DrawdownSpec, pen: PenaltySpec, x: float, cfg: QuadratureConfig | None = None) -> float:
    """E_x(exp(-q ell - lam (tau - ell)) omega(X(tau-), X(tau)); tau < inf [, constraint])."""
    cfg = cfg or QuadratureConfig()
    cfg.validate()
    if x <= 0.0:
        raise DomainError(f"initial surplus must be positive, got x={x}")
    if pen.is_unit:
        return _unit_penalty(model, spec, pen.q, pen.lam, x, cfg)
    return _general_penalty(model, spec, pen, x, cfg)


def drawdown_probability(model: LevyModel, spec: DrawdownSpec, x: float, cfg: QuadratureConfig | None = None) -> float:
    cfg = cfg or QuadratureConfig()
    value = penalty_at_drawdown(model, spec, PenaltySpec(), x, cfg)
    if value > 1.0 + cfg.rel_tol or value < 0.0:
        logger.warning("drawdown probability %.12g outside [0, 1] for x=%g; clamping", value, x)
    return min(max(value, 0.0), 1.0 + cfg.rel_tol)


def joint_laplace(model: LevyModel, spec: DrawdownSpec, q, lam, x: float, cfg: QuadratureConfig | None = None):
    """E_x(exp(-q ell - lam (tau - ell)); tau < inf); q and lam may be complex."""
    cfg = cfg or QuadratureConfig()
    cfg.validate()
    if np.real(q) < 0.0 or np.real(lam) < 0.0:
        raise DomainError("joint_laplace needs nonnegative real parts")
    if x <= 0.0:
        raise DomainError(f"initial surplus must be positive, got x={x}")
    return _unit_penalty(model, spec, q, lam, x, cfg)


def joint_laplace_batch(model: LevyModel, spec: DrawdownSpec, q, lambdas, x: float, cfg: QuadratureConfig | None = None) -> np.ndarray:
    """joint_laplace at one q and many lam, on a shared Gauss-Legendre rule in s."""
    cfg = cfg or QuadratureConfig()
    s_max = choose_s_max(model, spec, q, x, cfg)
    nodes, weights = _composite_rule(x, s_max, breakpoints(spec), cfg)
    gap = np.asarray(xi_bar(spec, nodes))
    sset_q = build_scale_set(model, q)
    constrained = spec.constrained
    floor_gap = np.asarray(varsigma_bar(spec, nodes)) if constrained else gap
    surv = np.exp(-_log_integral(sset_q, spec, x, nodes, constrained=constrained, cfg=cfg))
    out = np.empty(len(lambdas), dtype=complex)
    for m, lam in enumerate(lambdas):
        sset_lam = build_scale_set(model, lam)
        values = _jump_kernel(model, sset_lam, gap, floor_gap)
        if not constrained:
            values = values + _creep_kernel(model, sset_lam, gap)
        out[m] = np.dot(weights, surv * values)
    return out


# ----------------------------------------------------------------------
# classical ruin reductions
# ----------------------------------------------------------------------


def ruin_jump_density(model: LevyModel, q: float, x: float, s: float, y: float, z: float) -> float:
    sset = build_scale_set(model, q)
    if y >= s:
        return 0.0
    ratio = w(sset, x) / w(sset, s)
    return ratio * (w1(sset, s - y) - w(sset, s - y) * w1(sset, s) / w(sset, s)) * float(levy_density(model, y + z))


def ruin_atom_density(model: LevyModel, q: float, x: float, s: float, z: float) -> float:
    sset = build_scale_set(model, q)
    return w(sset, x) / w(sset, s) * sset.w0_plus * float(levy_density(model, s + z))


def ruin_creeping_density(model: LevyModel, q: float, x: float, s: float) -> float:
    sigma = gaussian_coeff(model)
    if sigma == 0.0:
        return 0.0
    sset = build_scale_set(model, q)
    ws = w(sset, s)
    return 0.5 * sigma**2 * w(sset, x) / ws * (w1(sset, s) ** 2 / ws - w2(sset, s))


def finite_barrier_reduction(model: LevyModel, q: float, x: float, b: float, y: float, z: float) -> float:
    """Density of (X(tau_0-), -X(tau_0)) on {ruin before reaching b}, no Gaussian part."""
    if not isinstance(model, CramerLundbergExp):
        raise DomainError("finite_barrier_reduction needs a model without Gaussian part")
    if not 0.0 < x < b:
        raise DomainError(f"require 0 < x < b, got x={x}, b={b}")
    sset = build_scale_set(model, q)
    wx = w(sset, x)
    return wx * float(levy_density(model, y + z)) * (w(sset, b - y) / w(sset, b) - w(sset, x - y) / wx)


def last_minimum_density(model: LevyModel, q: float, x: float, v: float, y: float, z: float) -> float:
    """Density in (v, y, z) of (last minimum before ruin, X(tau_0-), -X(tau_0))."""
    if not 0.0 < v <= min(x, y):
        return 0.0
    sset = build_scale_set(model, q)
    phi = phi_q(model, q)
    return float(np.exp(-phi * (y - v)) * (w1(sset, x - v) - phi * w(sset, x - v)) * levy_density(model, y + z))


def last_minimum_survival(model: LevyModel, q: float, x: float, v: float, y: float, z: float) -> float:
    """Density in (y, z) of (X(tau_0-), -X(tau_0)) on {last minimum before ruin >= v}."""
    if not 0.0 < v <= min(x, y):
        return 0.0
    sset = build_scale_set(model, q)
    phi = phi_q(model, q)
    head = np.exp(phi * (v - y)) * w(sset, x - v)
    if y < x:
        head -= w(sset, x - y)
    return float(head * levy_density(model, y + z))


# ----------------------------------------------------------------------
# loss-carry-forward tax
# ----------------------------------------------------------------------


def _tax_factor(model: LevyModel, gamma, q, x: float, s: float) -> float:
    """Jacobian times survival at the untaxed running max behind taxed level s."""
    rate = gamma if isinstance(gamma, TaxRate) else TaxRate.constant(gamma)
    spec = tax_spec(rate, x)
    if s < x:
        raise DomainError(f"taxed running max s={s} below x={x}")
    s_bar = xi_bar_inverse_tax(spec, s)
    g = float(gamma_at(spec, s_bar))
    if 1.0 - g <= _BARRIER_TOL:
        raise SingularJacobianError(f"tax rate equals 1 at running max {s_bar}")
    surv = _survival(build_scale_set(model, q), spec, x, s_bar) if s_bar > x else 1.0
    return surv / (1.0 - g)


def gs_tax_density(model: LevyModel, gamma, q, lam, x: float, s: float, y: float, z: float) -> float:
    """Taxed surplus: density of (running max s, pre-ruin surplus y < s, deficit z)."""
    factor = _tax_factor(model, gamma, q, x, s)
    if y >= s:
        return 0.0
    sset = build_scale_set(model, lam)
    bracket = w1(sset, s - y) - w1(sset, s) / w(sset, s) * w(sset, s - y)
    return factor * bracket * float(levy_density(model, y + z))


def gs_tax_atom(model: LevyModel, gamma, q, lam, x: float, s: float, z: float) -> float:
    factor = _tax_factor(model, gamma, q, x, s)
    sset = build_scale_set(model, lam)
    return factor * sset.w0_plus * float(levy_density(model, s + z))


def gs_tax_creeping(model: LevyModel, gamma, q, lam, x: float, s: float) -> float:
    sigma = gaussian_coeff(model)
    if sigma == 0.0:
        return 0.0
    factor = _tax_factor(model, gamma, q, x, s)
    sset = build_scale_set(model, lam)
    ws = w(sset, s)
    return factor * 0.5 * sigma**2 * (w1(sset, s) ** 2 / ws - w2(sset, s))


def tax_running_max_density(model: LevyModel, gamma, q, lam, x: float, s: float) -> tuple[float, float]:
    """Density in s of the taxed running max at ruin, split into (jump, creeping)."""
    factor = _tax_factor(model, gamma, q, x, s)
    sset = build_scale_set(model, lam)
    jump = factor * float(_jump_kernel(model, sset, s, s)[0]) if s > 0.0 else 0.0
    creep = factor * float(_creep_kernel(model, sset, s)[0])
    return jump, creep


def tax_ruin_probability(model: LevyModel, gamma, x: float, cfg: QuadratureConfig | None = None) -> float:
    """Ruin probability of the taxed surplus, integrated in taxed coordinates."""
    cfg = cfg or QuadratureConfig()
    rate = gamma if isinstance(gamma, TaxRate) else TaxRate.constant(gamma)
    spec = tax_spec(rate, x)
    upper = float(xi_bar(spec, choose_s_max(model, spec, 0.0, x, cfg)))
    cuts = [float(xi_bar(spec, p)) for p in breakpoints(spec) if p > x]
    return _quad(lambda s: sum(tax_running_max_density(model, rate, 0.0, 0.0, x, s)), x, upper, cfg, cuts)[0]


# ----------------------------------------------------------------------
# dividend barrier
# ----------------------------------------------------------------------


def _check_dividend(x: float, b: float, s: float) -> bool:
    """Validate coordinates; True when s sits on the barrier."""
    if not 0.0 < x < b:
        raise DomainError(f"dividend barrier needs 0 < x < b, got x={x}, b={b}")
    if s < x or s > b + _BARRIER_TOL:
        raise DomainError(f"running max s={s} outside [x, b]")
    return s >= b - _BARRIER_TOL


def barrier_survival_mass(model: LevyModel, b: float, q: float, x: float, cfg: QuadratureConfig | None = None) -> float:
    """int_b^inf of the survival factor under xi_b: the weight of the s = b atom."""
    cfg = cfg or QuadratureConfig()
    spec = dividend_spec(b)
    sset = build_scale_set(model, q)
    s_max = choose_s_max(model, spec, q, x, cfg)
    if s_max <= b:
        return 0.0
    return _quad(lambda s: _survival(sset, spec, x, s), b, s_max, cfg)[0]


def _dividend_weight(model, b, q, x, s, cfg) -> float:
    if _check_dividend(x, b, s):
        return barrier_survival_mass(model, b, q, x, cfg)
    sset = build_scale_set(model, q)
    return w(sset, x) / w(sset, s)


def gs_dividend_density(model: LevyModel, b: float, q, lam, x: float, s: float, y: float, z: float, cfg: QuadratureConfig | None = None) -> float:
    """Reflected surplus: density in (s, y, z) for s < b, and the s = b atom density in (y, z)."""
    weight = _dividend_weight(model, b, q, x, s, cfg)
    s = min(s, b)
    if y >= s:
        return 0.0
    sset = build_scale_set(model, lam)
    bracket = w1(sset, s - y) - w1(sset, s) / w(sset, s) * w(sset, s - y)
    return weight * bracket * float(levy_density(model, y + z))


def gs_dividend_atom(model: LevyModel, b: float, q, lam, x: float, s: float, z: float, cfg: QuadratureConfig | None = None) -> float:
    weight = _dividend_weight(model, b, q, x, s, cfg)
    sset = build_scale_set(model, lam)
    return weight * sset.w0_plus * float(levy_density(model, min(s, b) + z))


def gs_dividend_creeping(model: LevyModel, b: float, q, lam, x: float, s: float, cfg: QuadratureConfig | None = None) -> float:
    """Creeping density for s < b; at s = b the mass of the creeping atom."""
    sigma = gaussian_coeff(model)
    if sigma == 0.0:
        _check_dividend(x, b, s)
        return 0.0
    weight = _dividend_weight(model, b, q, x, s, cfg)
    sset = build_scale_set(model, lam)
    s = min(s, b)
    ws = w(sset, s)
    return weight * 0.5 * sigma**2 * (w1(sset, s) ** 2 / ws - w2(sset, s))


def dividend_running_max_profile(model: LevyModel, b: float, q, lam, x: float, s: float, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """(jump, creeping) density in s below b; at s = b the two atom masses."""
    weight = _dividend_weight(model, b, q, x, s, cfg)
    sset = build_scale_set(model, lam)
    s = min(s, b)
    return (
        weight * float(_jump_kernel(model, sset, s, s)[0]),
        weight * float(_creep_kernel(model, sset, s)[0]),
    )


def dividend_ruin_probability(model: LevyModel, b: float, x: float, cfg: QuadratureConfig | None = None, *, q: float = 0.0) -> float:
    """Ruin probability of the reflected surplus: the s < b density plus both atoms at b.

    With q > 0 the ruin time is discounted, giving E_x(exp(-q tau); tau < inf).
    """
    cfg = cfg or QuadratureConfig()
    if q < 0.0:
        raise ParameterError(f"q must be nonnegative, got {q}")
    below = _quad(lambda s: sum(dividend_running_max_profile(model, b, q, q, x, s, cfg)), x, b, cfg)[0]
    return below + sum(dividend_running_max_profile(model, b, q, q, x, b, cfg))
