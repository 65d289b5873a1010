"""Fourier-series inversion of Laplace transforms with Euler summation.

For a target time t and period P (default 2t) the Bromwich integral is
discretised on the nodes p_k = (A + 2 pi i k) / P:

    f(t) ~ (2 / P) e^{A t / P} [ F(p_0) / 2 + sum_k Re(F(p_k) e^{2 pi i k t / P}) ]

With P = 2t the series alternates, and its tail is summed by binomial
averaging of the last ``euler_terms`` partial sums. Two-variable transforms
are inverted iteratively: first in lam at each complex q node, then in q.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np
from scipy import special

from .config import InversionConfig, QuadratureConfig
from .drawdown import DrawdownSpec
from .errors import DomainError, InversionError
from .gerber_shiu import joint_laplace_batch
from .levy_models import LevyModel

logger = logging.getLogger(__name__)

NEGATIVE_NOISE_FACTOR = 10.0


def euler_weights(n: int, m: int) -> np.ndarray:
    """Weights of terms 0..n+m: ones up to n, then binomial tail sums over m."""
    if n < 0 or m < 0:
        raise DomainError("euler_weights needs n, m >= 0")
    tail = np.cumsum(special.comb(m, np.arange(m, 0, -1)))[::-1] / 2.0**m
    return np.concatenate((np.ones(n + 1), tail))


def _nodes(t: float, cfg: InversionConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """Nodes p_0..p_N, their phases e^{2 pi i k t / P} and the prefactor (2/P) e^{A t/P}."""
    period = cfg.period(t)
    k = np.arange(cfg.n_terms + 1)
    nodes = (cfg.abscissa_shift + 2j * np.pi * k) / period
    phases = np.exp(2j * np.pi * k * t / period)
    return nodes, phases, 2.0 / period * np.exp(cfg.abscissa_shift * t / period)


def _accelerate(terms: np.ndarray, cfg: InversionConfig) -> tuple[float | complex, float]:
    """Euler sum of the terms, plus the change from dropping the last plain term."""
    m = cfg.euler_terms
    n = cfg.n_terms - m
    value = euler_weights(n, m) @ terms
    if n == 0:
        return value, float(abs(terms[-1]))
    coarse = euler_weights(n - 1, m) @ terms[:-1]
    return value, float(abs(value - coarse))


def _check_finite(values: np.ndarray, nodes: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        node = complex(np.asarray(nodes)[np.argmax(bad)])
        raise InversionError(f"transform is not finite at p={node}", node=node)


def _one_sided(values: np.ndarray, t: float, cfg: InversionConfig) -> tuple[float, float]:
    nodes, phases, scale = _nodes(t, cfg)
    terms = np.real(values * phases)
    terms[0] = 0.5 * np.real(values[0])
    value, noise = _accelerate(terms, cfg)
    return float(scale * value), float(scale * noise + np.exp(-cfg.abscissa_shift) * abs(scale * value))


def _two_sided(upper: np.ndarray, lower: np.ndarray, t: float, cfg: InversionConfig) -> complex:
    """Series for a complex-valued target: nodes p_k in ``upper``, conj(p_k) in ``lower``."""
    nodes, phases, scale = _nodes(t, cfg)
    terms = 0.5 * (upper * phases + np.concatenate(([upper[0]], lower)) * np.conj(phases))
    terms[0] = 0.5 * upper[0]
    value, _ = _accelerate(terms, cfg)
    return complex(scale * value)


def invert_1d(transform: Callable, t: float, cfg: InversionConfig | None = None, *, vectorized: bool = False) -> float:
    """f(t) from its Laplace transform F, evaluated at complex arguments."""
    cfg = cfg or InversionConfig()
    cfg.validate()
    if t <= 0.0:
        raise DomainError(f"inversion time must be positive, got t={t}")
    nodes, _, _ = _nodes(t, cfg)
    if vectorized:
        values = np.asarray(transform(nodes), dtype=complex)
    else:
        values = np.array([transform(complex(p)) for p in nodes], dtype=complex)
    _check_finite(values, nodes)
    return _one_sided(values, t, cfg)[0]


def _lam_nodes(u: float, cfg: InversionConfig) -> np.ndarray:
    upper, _, _ = _nodes(u, cfg)
    return np.concatenate((upper, np.conj(upper[1:])))


def _invert_rows(rows: np.ndarray, t1: float, t2: float, cfg: InversionConfig) -> tuple[float, float]:
    """Inner two-sided inversion of every q-row at u = t1 - t2, then the outer one at t2."""
    u = t1 - t2
    n = cfg.n_terms + 1
    inner = np.array([_two_sided(row[:n], row[n:], u, cfg) for row in rows])
    return _one_sided(inner, t2, cfg)


def invert_2d(transform: Callable, t1: float, t2: float, cfg: InversionConfig | None = None, *, vectorized: bool = False) -> float:
    """Density of (T, L) at (t1, t2) from F(q, lam) = E exp(-q L - lam (T - L)).

    Zero off the support t1 > t2.
    """
    cfg = cfg or InversionConfig()
    cfg.validate()
    if t2 <= 0.0:
        raise DomainError(f"t2 must be positive, got {t2}")
    if t1 <= t2:
        return 0.0
    q_nodes, _, _ = _nodes(t2, cfg)
    lam_nodes = _lam_nodes(t1 - t2, cfg)
    grid_q, grid_lam = np.meshgrid(q_nodes, lam_nodes, indexing="ij")
    if vectorized:
        values = np.asarray(transform(grid_q, grid_lam), dtype=complex)
    else:
        values = np.vectorize(transform, otypes=[complex])(grid_q, grid_lam)
    _check_finite(values, grid_q)
    return _invert_rows(values, t1, t2, cfg)[0]


def invert_2d_joint_density(
    model: LevyModel,
    spec: DrawdownSpec,
    x: float,
    t1: float,
    t2: float,
    cfg: InversionConfig | None = None,
    quad_cfg: QuadratureConfig | None = None,
) -> float:
    """Joint density of (tau, ell) at tau = t1, ell = t2 for a drawdown spec."""
    cfg = cfg or InversionConfig()
    cfg.validate()
    if t2 <= 0.0:
        raise DomainError(f"t2 must be positive, got {t2}")
    if t1 <= t2:
        return 0.0
    quad_cfg = quad_cfg or QuadratureConfig()
    q_nodes, _, _ = _nodes(t2, cfg)
    lam_nodes = _lam_nodes(t1 - t2, cfg)
    rows = np.empty((len(q_nodes), len(lam_nodes)), dtype=complex)
    for k, q in enumerate(q_nodes):
        rows[k] = joint_laplace_batch(model, spec, complex(q), lam_nodes, x, quad_cfg)
        if not np.all(np.isfinite(rows[k])):
            raise InversionError(f"joint transform not finite at q={complex(q)}", node=complex(q))
    value, noise = _invert_rows(rows, t1, t2, cfg)
    if value < -NEGATIVE_NOISE_FACTOR * noise:
        logger.warning("negative joint density %.3e at (t1=%g, t2=%g), noise %.3e", value, t1, t2, noise)
    return value


def _grid_cell(model, spec, x, cfg, quad_cfg, cell: tuple[float, float]) -> float:
    return invert_2d_joint_density(model, spec, x, cell[0], cell[1], cfg, quad_cfg)


def joint_density_grid(
    model: LevyModel,
    spec: DrawdownSpec,
    x: float,
    t1_values,
    t2_values,
    cfg: InversionConfig | None = None,
    quad_cfg: QuadratureConfig | None = None,
    *,
    workers: int = 1,
) -> np.ndarray:
    """f(t1_i, t2_j) on a grid; cells with t1 <= t2 are 0 without inversion."""
    t1_values = np.asarray(t1_values, dtype=float)
    t2_values = np.asarray(t2_values, dtype=float)
    out = np.zeros((len(t1_values), len(t2_values)))
    cells = [(i, j) for i in range(len(t1_values)) for j in range(len(t2_values)) if t1_values[i] > t2_values[j]]
    task = functools.partial(_grid_cell, model, spec, x, cfg, quad_cfg)
    points = [(t1_values[i], t2_values[j]) for i, j in cells]
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(task, points))
    else:
        values = [task(p) for p in points]
    for (i, j), value in zip(cells, values):
        out[i, j] = value
    logger.info("joint density grid %dx%d done (%d cells inverted)", *out.shape, len(cells))
    return out
