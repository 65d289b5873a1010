"""Drawdown probability sweeps over the initial surplus or a model parameter.

With ``experiment.omega = "american_put"`` (or nonzero discount rates) the
columns hold the Gerber-Shiu value of that penalty instead of the plain
probability.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor

import pandas as pd

from levy_drawdown.cli.models import ExperimentBlock, GridBlock, RunConfig
from levy_drawdown.config import QuadratureConfig, SimConfig
from levy_drawdown.drawdown import DrawdownSpec
from levy_drawdown.gerber_shiu import PenaltySpec, american_put_penalty, drawdown_probability, penalty_at_drawdown
from levy_drawdown.levy_models import LevyModel
from levy_drawdown.mc_oracle import discounted_hit, estimate_batch, simulate_drawdown_many

logger = logging.getLogger(__name__)

DEFAULT_X_GRID = GridBlock(start=1.0, stop=10.0, step=0.5)


def penalty_for(experiment: ExperimentBlock) -> PenaltySpec | None:
    """Penalty named by the experiment; None means the undiscounted probability."""
    if experiment.omega == "american_put":
        return american_put_penalty(experiment.strike, experiment.log_price_shift, q=experiment.q)
    if experiment.q > 0.0 or experiment.lam > 0.0:
        return PenaltySpec(q=experiment.q, lam=experiment.lam)
    return None


def _case_values(
    quad_cfg: QuadratureConfig,
    penalty: PenaltySpec | None,
    job: tuple[LevyModel, dict[str, DrawdownSpec], float],
) -> dict[str, float]:
    model, specs, x = job
    if penalty is None:
        return {name: drawdown_probability(model, spec, x, quad_cfg) for name, spec in specs.items()}
    return {name: penalty_at_drawdown(model, spec, penalty, x, quad_cfg) for name, spec in specs.items()}


class ProbabilityService:
    def __init__(self, quad_cfg: QuadratureConfig, sim_cfg: SimConfig | None = None, *, workers: int = 1) -> None:
        self.quad_cfg = quad_cfg
        self.sim_cfg = sim_cfg
        self.workers = workers

    def sweep(self, run: RunConfig) -> tuple[pd.DataFrame, dict[str, float]]:
        """One row per grid value, one column per drawdown case (plus MC columns)."""
        experiment = run.experiment
        grid = experiment.grid or (DEFAULT_X_GRID if experiment.sweep == "x" else GridBlock(start=1.0, stop=1.0, step=1.0))
        cases = run.case_blocks()
        penalty = penalty_for(experiment)
        values = [float(v) for v in grid.values()]
        jobs = []
        for value in values:
            if experiment.sweep == "x":
                model, x = run.model.build(), value
            else:
                model, x = run.model.with_param(experiment.sweep, value).build(), experiment.x
            jobs.append((model, {name: block.build(x) for name, block in cases.items()}, x))

        task = functools.partial(_case_values, self.quad_cfg, penalty)
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                analytic = list(pool.map(task, jobs))
        else:
            analytic = [task(job) for job in jobs]

        rows = []
        for value, (model, specs, x), row_values in zip(values, jobs, analytic):
            row: dict[str, float] = {experiment.sweep: value, **row_values}
            if self.sim_cfg is not None:
                row.update(self._simulated(model, specs, x, penalty))
            logger.info("%s=%g done", experiment.sweep, value)
            rows.append(row)
        frame = pd.DataFrame(rows)
        return frame, self._summary(frame, list(cases))

    def _simulated(self, model, specs: dict[str, DrawdownSpec], x: float, penalty: PenaltySpec | None) -> dict[str, float]:
        pen = penalty or PenaltySpec()
        out: dict[str, float] = {}
        batches = simulate_drawdown_many(model, list(specs.values()), x, self.sim_cfg)
        for (name, spec), batch in zip(specs.items(), batches):
            functional = discounted_hit(pen.q, pen.lam, constrained=spec.constrained, omega=pen.omega)
            est = estimate_batch(batch, functional)
            out[f"{name}_mc"] = est.mean
            out[f"{name}_mc_stderr"] = est.stderr
        return out

    @staticmethod
    def _summary(frame: pd.DataFrame, names: list[str]) -> dict[str, float]:
        """Largest MC discrepancy in standard errors, when MC columns are present."""
        if f"{names[0]}_mc" not in frame:
            return {}
        worst = 0.0
        for name in names:
            stderr = frame[f"{name}_mc_stderr"].clip(lower=1e-300)
            worst = max(worst, float(((frame[name] - frame[f"{name}_mc"]).abs() / stderr).max()))
        return {"max_mc_z": worst}
