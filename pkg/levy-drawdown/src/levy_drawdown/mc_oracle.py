"""Monte Carlo oracle for drawdown times of the supported Levy models.

Paths are simulated in vectorised chunks. One pass over a chunk can carry
several stopping rules at once (``_Watcher`` per drawdown spec, ``_Shadow``
per taxed or reflected surplus) so that they all see the same random
numbers.

* Cramer-Lundberg paths are event driven: linear drift between claims, and
  a drawdown can only happen at a claim.
* Brownian and jump-diffusion paths use Gaussian steps between claims; the
  maximum inside a step is drawn from the Brownian bridge, and crossings
  of the (locally linear) boundary between grid points are detected with
  the bridge crossing probability.

Chunks use child seeds of ``SeedSequence(cfg.seed)``, so results do not
depend on the number of workers.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

from .config import SimConfig
from .drawdown import DrawdownSpec, TaxRate, dividend_spec, tax_spec, varsigma, xi, xi_bar
from .errors import DomainError
from .levy_models import CramerLundbergExp, LevyModel, drift, gaussian_coeff, jump_rate, sample_jumps

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("hit", "tau", "ell", "y_before", "w_at", "s_max", "constraint_ok", "creeping")
_TIME_SLACK = 1e-12


@dataclass(frozen=True, slots=True)
class SimRecord:
    hit: bool
    tau: float
    ell: float
    y_before: float
    w_at: float
    s_max: float
    constraint_ok: bool
    creeping: bool


@dataclass(slots=True)
class SimBatch:
    """Columnar simulation output; ``extras`` holds companion columns."""

    hit: np.ndarray
    tau: np.ndarray
    ell: np.ndarray
    y_before: np.ndarray
    w_at: np.ndarray
    s_max: np.ndarray
    constraint_ok: np.ndarray
    creeping: np.ndarray
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def empty(cls, n: int) -> "SimBatch":
        nan = np.full(n, np.nan)
        return cls(
            hit=np.zeros(n, dtype=bool),
            tau=nan.copy(),
            ell=nan.copy(),
            y_before=nan.copy(),
            w_at=nan.copy(),
            s_max=nan.copy(),
            constraint_ok=np.ones(n, dtype=bool),
            creeping=np.zeros(n, dtype=bool),
        )

    @classmethod
    def concat(cls, batches: Sequence["SimBatch"]) -> "SimBatch":
        columns = {name: np.concatenate([getattr(b, name) for b in batches]) for name in CSV_COLUMNS}
        keys = batches[0].extras.keys() if batches else ()
        extras = {key: np.concatenate([b.extras[key] for b in batches]) for key in keys}
        return cls(**columns, extras=extras)

    def __len__(self) -> int:
        return len(self.hit)

    def records(self) -> Iterator[SimRecord]:
        for row in zip(*(getattr(self, name) for name in CSV_COLUMNS)):
            hit, tau, ell, y_before, w_at, s_max, ok, creeping = row
            yield SimRecord(bool(hit), float(tau), float(ell), float(y_before), float(w_at), float(s_max), bool(ok), bool(creeping))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({name: getattr(self, name) for name in CSV_COLUMNS})
        for key, values in self.extras.items():
            frame[key] = values
        return frame


@dataclass(frozen=True, slots=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    def within(self, value: float, n_sigma: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.mean - value) <= n_sigma * self.stderr + floor


def summarize(values) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = len(values)
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(values.mean()), stderr, n)


def hit_indicator(record: SimRecord) -> float:
    return 1.0 if record.hit else 0.0


def discounted_hit(
    q: float,
    lam: float,
    *,
    constrained: bool = False,
    omega: Callable[[float, float], float] | None = None,
) -> Callable[[SimRecord], float]:
    """exp(-q ell - lam (tau - ell)) omega(X(tau-), X(tau)) on {hit}.

    ``omega=None`` is the unit penalty; with ``constrained`` the event also
    requires {constraint_ok}.
    """

    def functional(record: SimRecord) -> float:
        if not record.hit or (constrained and not record.constraint_ok):
            return 0.0
        weight = 1.0 if omega is None else float(omega(record.y_before, record.w_at))
        return weight * float(np.exp(-q * record.ell - lam * (record.tau - record.ell)))

    return functional



def estimate_batch(batch: SimBatch, functional: Callable[[SimRecord], float]) -> Estimate:
    return summarize(np.fromiter((functional(r) for r in batch.records()), dtype=float, count=len(batch)))


# ----------------------------------------------------------------------
# stopping rules
# ----------------------------------------------------------------------


class _Watcher:
    """xi-drawdown of the simulated surplus, with the theta constraint."""

    def __init__(self, spec: DrawdownSpec, n: int) -> None:
        self.spec = spec
        self.alive = np.ones(n, dtype=bool)
        self.batch = SimBatch.empty(n)

    def distance(self, idx, x, m):
        gap = x - xi(self.spec, m)
        if self.spec.constrained:
            floor_gap = x - varsigma(self.spec, m)
            gap = np.where(self.batch.constraint_ok[idx] & (floor_gap > 0.0), floor_gap, gap)
        return np.where(self.alive[idx], gap, np.inf)

    def diffuse(self, idx, x0, x1, m0, m1, t1, var, u, ell, bridge: bool) -> None:
        live = self.alive[idx]
        if not live.any():
            return
        g0 = x0 - xi(self.spec, m0)
        g1 = x1 - xi(self.spec, m1)
        cross = _crossed(g0, g1, var, u, bridge)
        if self.spec.constrained:
            floor0 = x0 - varsigma(self.spec, m0)
            floor1 = x1 - varsigma(self.spec, m1)
            breach = live & _crossed(floor0, floor1, var, u, bridge)
            self.batch.constraint_ok[idx[breach]] = False
        hit = live & cross
        if hit.any():
            rows = idx[hit]
            level = xi(self.spec, m1[hit])
            # first grid value on or below the boundary
            seen = np.minimum(x1[hit], level)
            creeping = level - seen <= _creep_tol(var[hit])
            self._record(rows, t1[hit], ell[rows], seen, seen, m1[hit], creeping=creeping)

    def jump(self, idx, x_minus, x_plus, m, t, ell, var) -> None:
        live = self.alive[idx]
        hit = live & (x_plus < xi(self.spec, m))
        if self.spec.constrained:
            breach = live & ~hit & (x_plus < varsigma(self.spec, m))
            self.batch.constraint_ok[idx[breach]] = False
        if hit.any():
            rows = idx[hit]
            creeping = xi(self.spec, m[hit]) - x_plus[hit] <= _creep_tol(var[hit])
            self._record(rows, t[hit], ell[rows], x_minus[hit], x_plus[hit], m[hit], creeping=creeping)

    def _record(self, rows, tau, ell, y_before, w_at, s_max, *, creeping) -> None:
        b = self.batch
        b.hit[rows] = True
        b.tau[rows] = tau
        b.ell[rows] = ell
        b.y_before[rows] = y_before
        b.w_at[rows] = w_at
        b.s_max[rows] = s_max
        b.creeping[rows] = creeping
        self.alive[rows] = False

    def finish(self, m: np.ndarray) -> SimBatch:
        self.batch.s_max[self.alive] = m[self.alive]
        return self.batch


class _Shadow:
    """Surplus X - xi(running max) built increment by increment; ruin at 0."""

    def __init__(self, spec: DrawdownSpec, x: float, n: int) -> None:
        self.spec = spec
        start = float(xi_bar(spec, x))
        self.value = np.full(n, start)
        self.peak = np.full(n, start)
        self.alive = np.ones(n, dtype=bool)
        self.batch = SimBatch.empty(n)

    def distance(self, idx, x, m):
        return np.where(self.alive[idx], self.value[idx], np.inf)

    def diffuse(self, idx, x0, x1, m0, m1, top, t1, var, u, ell, bridge: bool) -> None:
        u0 = self.value[idx]
        deduction = xi(self.spec, m1) - xi(self.spec, m0)
        u1 = u0 + (x1 - x0) - deduction
        self.peak[idx] = np.maximum(self.peak[idx], u0 + (top - x0) - deduction)
        self.value[idx] = u1
        hit = self.alive[idx] & _crossed(u0, u1, var, u, bridge)
        if hit.any():
            rows = idx[hit]
            seen = np.minimum(u1[hit], 0.0)
            self._record(rows, t1[hit], ell[rows], seen, seen, creeping=-seen <= _creep_tol(var[hit]))

    def drift_to(self, idx, x0, x1, m0, m1) -> None:
        """Claim-free move with nondecreasing surplus."""
        self.value[idx] += (x1 - x0) - (xi(self.spec, m1) - xi(self.spec, m0))
        self.peak[idx] = np.maximum(self.peak[idx], self.value[idx])

    def jump(self, idx, sizes, t, ell, var) -> None:
        before = self.value[idx].copy()
        self.value[idx] = before - sizes
        hit = self.alive[idx] & (self.value[idx] < 0.0)
        if hit.any():
            rows = idx[hit]
            after = self.value[rows]
            self._record(rows, t[hit], ell[rows], before[hit], after, creeping=-after <= _creep_tol(var[hit]))

    def _record(self, rows, tau, ell, y_before, w_at, *, creeping) -> None:
        b = self.batch
        b.hit[rows] = True
        b.tau[rows] = tau
        b.ell[rows] = ell
        b.y_before[rows] = y_before
        b.w_at[rows] = w_at
        b.s_max[rows] = self.peak[rows]
        b.creeping[rows] = creeping
        self.alive[rows] = False

    def finish(self) -> SimBatch:
        self.batch.s_max[self.alive] = self.peak[self.alive]
        return self.batch


def _creep_tol(var) -> np.ndarray:
    """Three grid standard deviations; zero without a Gaussian part."""
    return 3.0 * np.sqrt(var)


def _crossed(g0, g1, var, u, bridge: bool) -> np.ndarray:
    """Did a Brownian bridge from g0 to g1 with variance ``var`` dip below 0."""
    below = g1 < 0.0
    if not bridge:
        return below
    with np.errstate(over="ignore", invalid="ignore"):
        prob = np.exp(-2.0 * np.maximum(g0, 0.0) * np.maximum(g1, 0.0) / var)
    return below | (g0 < 0.0) | (u < prob)


# ----------------------------------------------------------------------
# chunk engines
# ----------------------------------------------------------------------


def _run_chunk(
    model: LevyModel,
    specs: tuple[DrawdownSpec, ...],
    shadows: tuple[DrawdownSpec, ...],
    x: float,
    cfg: SimConfig,
    job: tuple[np.random.SeedSequence, int],
) -> tuple[list[SimBatch], list[SimBatch]]:
    seed, n = job
    rng = np.random.default_rng(seed)
    watchers = [_Watcher(spec, n) for spec in specs]
    shades = [_Shadow(spec, x, n) for spec in shadows]
    if isinstance(model, CramerLundbergExp):
        running_max = _event_driven(model, watchers, shades, x, cfg, rng, n)
    else:
        running_max = _gridded(model, watchers, shades, x, cfg, rng, n)
    logger.info("simulated chunk of %d paths", n)
    return [w.finish(running_max) for w in watchers], [s.finish() for s in shades]


def _any_alive(watchers, shades, n) -> np.ndarray:
    alive = np.zeros(n, dtype=bool)
    for rule in (*watchers, *shades):
        alive |= rule.alive
    return alive


def _event_driven(model: CramerLundbergExp, watchers, shades, x, cfg, rng, n) -> np.ndarray:
    X = np.full(n, x)
    M = X.copy()
    t = np.zeros(n)
    ell = np.zeros(n)
    active = np.ones(n, dtype=bool)
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        wait = rng.exponential(1.0 / model.lambda0, idx.size)
        room = cfg.horizon - t[idx]
        claims = wait < room
        wait = np.minimum(wait, room)
        x0, m0 = X[idx], M[idx]
        x_minus = x0 + model.c * wait
        m1 = np.maximum(m0, x_minus)
        t1 = t[idx] + wait
        ell[idx] = np.where(x_minus > m0, t1, ell[idx])
        for shade in shades:
            shade.drift_to(idx, x0, x_minus, m0, m1)
        X[idx], M[idx], t[idx] = x_minus, m1, t1
        jumping = idx[claims]
        if jumping.size:
            sizes = sample_jumps(model, rng, jumping.size)
            x_plus = X[jumping] - sizes
            no_var = np.zeros(jumping.size)
            for watcher in watchers:
                watcher.jump(jumping, X[jumping], x_plus, M[jumping], t[jumping], ell, no_var)
            for shade in shades:
                shade.jump(jumping, sizes, t[jumping], ell, no_var)
            X[jumping] = x_plus
        active = _any_alive(watchers, shades, n) & (t < cfg.horizon - _TIME_SLACK)
    return M


def _gridded(model: LevyModel, watchers, shades, x, cfg, rng, n) -> np.ndarray:
    sigma = gaussian_coeff(model)
    mu = drift(model)
    rate = jump_rate(model)
    X = np.full(n, x)
    M = X.copy()
    t = np.zeros(n)
    ell = np.zeros(n)
    next_claim = rng.exponential(1.0 / rate, n) if rate > 0.0 else np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x0, m0, t0 = X[idx], M[idx], t[idx]
        if cfg.adaptive:
            gap = np.min([rule.distance(idx, x0, m0) for rule in (*watchers, *shades)], axis=0)
            step = np.clip((gap / (4.0 * sigma)) ** 2, cfg.dt, cfg.max_dt)
        else:
            step = np.full(idx.size, cfg.dt)
        step = np.minimum(step, cfg.horizon - t0)
        to_claim = next_claim[idx] - t0
        claim_now = to_claim <= step
        step = np.where(claim_now, to_claim, step)
        t1 = np.where(claim_now, next_claim[idx], t0 + step)

        var = sigma**2 * step
        x1 = x0 + mu * step + np.sqrt(var) * rng.standard_normal(idx.size)
        if cfg.bridge_correction:
            top = 0.5 * (x0 + x1 + np.sqrt((x1 - x0) ** 2 - 2.0 * var * np.log(rng.random(idx.size))))
        else:
            top = np.maximum(x0, x1)
        m1 = np.maximum(m0, top)
        # time of the step maximum, placed on the tent x0 -> top -> x1
        rise, fall = top - x0, top - x1
        with np.errstate(invalid="ignore", divide="ignore"):
            at_top = np.where(rise + fall > 0.0, rise / (rise + fall), 1.0)
        ell[idx] = np.where(top > m0, t0 + at_top * step, ell[idx])
        u = rng.random(idx.size)
        for watcher in watchers:
            watcher.diffuse(idx, x0, x1, m0, m1, t1, var, u, ell, cfg.bridge_correction)
        for shade in shades:
            shade.diffuse(idx, x0, x1, m0, m1, top, t1, var, u, ell, cfg.bridge_correction)
        X[idx], M[idx], t[idx] = x1, m1, t1

        jumping = idx[claim_now]
        if jumping.size:
            sizes = sample_jumps(model, rng, jumping.size)
            x_plus = X[jumping] - sizes
            step_var = var[claim_now]
            for watcher in watchers:
                watcher.jump(jumping, X[jumping], x_plus, M[jumping], t[jumping], ell, step_var)
            for shade in shades:
                shade.jump(jumping, sizes, t[jumping], ell, step_var)
            X[jumping] = x_plus
            next_claim[jumping] += rng.exponential(1.0 / rate, jumping.size)
        active = _any_alive(watchers, shades, n) & (t < cfg.horizon - _TIME_SLACK)
    return M


def _simulate(model, specs, shadows, x, cfg: SimConfig) -> tuple[list[SimBatch], list[SimBatch]]:
    cfg.validate()
    if x <= 0.0:
        raise DomainError(f"initial surplus must be positive, got x={x}")
    sizes = [cfg.chunk_size] * (cfg.n_paths // cfg.chunk_size)
    if cfg.n_paths % cfg.chunk_size:
        sizes.append(cfg.n_paths % cfg.chunk_size)
    jobs = list(zip(np.random.SeedSequence(cfg.seed).spawn(len(sizes)), sizes))
    task = functools.partial(_run_chunk, model, tuple(specs), tuple(shadows), x, cfg)
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(task, jobs))
    else:
        results = [task(job) for job in jobs]
    drawdowns = [SimBatch.concat([r[0][k] for r in results]) for k in range(len(specs))]
    ruins = [SimBatch.concat([r[1][k] for r in results]) for k in range(len(shadows))]
    return drawdowns, ruins


def simulate_drawdown(model: LevyModel, spec: DrawdownSpec, x: float, cfg: SimConfig | None = None) -> SimBatch:
    return _simulate(model, [spec], [], x, cfg or SimConfig())[0][0]


def simulate_drawdown_many(model: LevyModel, specs: Sequence[DrawdownSpec], x: float, cfg: SimConfig | None = None) -> list[SimBatch]:
    """Several drawdown rules on common random numbers, one batch per spec."""
    return _simulate(model, list(specs), [], x, cfg or SimConfig())[0]


def estimate(model: LevyModel, spec: DrawdownSpec, x: float, cfg: SimConfig | None, functional: Callable[[SimRecord], float]) -> Estimate:
    return estimate_batch(simulate_drawdown(model, spec, x, cfg), functional)


def _with_companion(ruin: SimBatch, drawdown: SimBatch) -> SimBatch:
    for name in ("hit", "tau", "y_before", "w_at", "s_max"):
        ruin.extras[f"drawdown_{name}"] = getattr(drawdown, name)
    return ruin


def simulate_tax(model: LevyModel, gamma: float | TaxRate, x: float, cfg: SimConfig | None = None) -> SimBatch:
    """Ruin of the taxed surplus, with the matching tax-drawdown of X in ``extras``."""
    spec = tax_spec(gamma, x)
    (drawdown,), (ruin,) = _simulate(model, [spec], [spec], x, cfg or SimConfig())
    return _with_companion(ruin, drawdown)


def simulate_dividend(model: LevyModel, b: float, x: float, cfg: SimConfig | None = None) -> SimBatch:
    """Ruin of the surplus reflected at b, with the barrier drawdown of X in ``extras``."""
    if not 0.0 < x < b:
        raise DomainError(f"dividend barrier needs 0 < x < b, got x={x}, b={b}")
    spec = dividend_spec(b)
    (drawdown,), (ruin,) = _simulate(model, [spec], [spec], x, cfg or SimConfig())
    return _with_companion(ruin, drawdown)


def _observation_gaps(batch: SimBatch, spec: DrawdownSpec) -> dict[str, float]:
    extras = batch.extras
    both = batch.hit & extras["drawdown_hit"]
    level = np.asarray(xi(spec, extras["drawdown_s_max"][both])) if both.any() else np.zeros(0)

    def worst(values) -> float:
        return float(np.max(np.abs(values))) if np.size(values) else 0.0

    return {
        "hit_mismatch": float(np.count_nonzero(batch.hit != extras["drawdown_hit"])),
        "ruin_time": worst(batch.tau[both] - extras["drawdown_tau"][both]),
        "running_max": worst(batch.s_max[both] - (extras["drawdown_s_max"][both] - level)),
        "surplus_before": worst(batch.y_before[both] - (extras["drawdown_y_before"][both] - level)),
        "surplus_at": worst(batch.w_at[both] - (extras["drawdown_w_at"][both] - level)),
    }


def check_tax_observations(batch: SimBatch, gamma: float | TaxRate, x: float) -> dict[str, float]:
    """Largest pathwise deviations between the taxed ruin and the tax drawdown of X."""
    return _observation_gaps(batch, tax_spec(gamma, x))


def check_dividend_observations(batch: SimBatch, b: float) -> dict[str, float]:
    """Largest pathwise deviations between the reflected ruin and the barrier drawdown of X.

    ``running_max`` compares the reflected running max with min(running max of X, b).
    """
    return _observation_gaps(batch, dividend_spec(b))


def write_records_csv(batch: SimBatch, path: str | Path, metadata: Mapping[str, object] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for key, value in (metadata or {}).items():
            handle.write(f"# {key}={value}\n")
        batch.to_frame().to_csv(handle, index=False, lineterminator="\n")
    return path
