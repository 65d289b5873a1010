"""Raw Monte Carlo records for one drawdown rule."""

from __future__ import annotations

import pandas as pd

from levy_drawdown.cli.models import RunConfig
from levy_drawdown.config import SimConfig
from levy_drawdown.mc_oracle import discounted_hit, estimate_batch, simulate_drawdown


class SimulationService:
    def __init__(self, sim_cfg: SimConfig) -> None:
        self.sim_cfg = sim_cfg

    def simulate(self, run: RunConfig) -> tuple[pd.DataFrame, dict[str, float]]:
        experiment = run.experiment
        model = run.model.build()
        spec = run.drawdown.build(experiment.x)
        batch = simulate_drawdown(model, spec, experiment.x, self.sim_cfg)
        hit = estimate_batch(batch, discounted_hit(0.0, 0.0, constrained=spec.constrained))
        summary = {"n_paths": len(batch), "drawdown_probability": hit.mean, "drawdown_probability_stderr": hit.stderr}
        if experiment.q or experiment.lam:
            laplace = estimate_batch(batch, discounted_hit(experiment.q, experiment.lam, constrained=spec.constrained))
            summary["joint_laplace"] = laplace.mean
            summary["joint_laplace_stderr"] = laplace.stderr
        return batch.to_frame(), summary
