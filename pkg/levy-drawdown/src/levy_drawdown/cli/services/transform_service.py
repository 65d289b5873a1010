"""Exit transforms and the tax and dividend running-maximum profiles."""

from __future__ import annotations

import numpy as np
import pandas as pd

from levy_drawdown.cli.models import GridBlock, RunConfig
from levy_drawdown.config import QuadratureConfig, SimConfig
from levy_drawdown.errors import ParameterError
from levy_drawdown.gerber_shiu import (
    dividend_ruin_probability,
    dividend_running_max_profile,
    exit_prob_drawdown,
    tax_ruin_probability,
    tax_running_max_density,
)
from levy_drawdown.mc_oracle import (
    check_dividend_observations,
    check_tax_observations,
    estimate_batch,
    hit_indicator,
    simulate_dividend,
    simulate_tax,
)
from levy_drawdown.scale_functions import build_scale_set, w


def _s_values(grid: GridBlock | None, x: float, stop: float) -> np.ndarray:
    grid = grid or GridBlock(start=x, stop=stop, step=0.5)
    return grid.values()


def _mc_summary(batch, gaps: dict[str, float]) -> dict[str, float]:
    est = estimate_batch(batch, hit_indicator)
    summary = {"mc_ruin_probability": est.mean, "mc_ruin_probability_stderr": est.stderr}
    summary.update({f"pathwise_{key}": value for key, value in gaps.items()})
    return summary


class TransformService:
    def __init__(self, quad_cfg: QuadratureConfig, sim_cfg: SimConfig | None = None) -> None:
        self.quad_cfg = quad_cfg
        self.sim_cfg = sim_cfg

    def exit(self, run: RunConfig) -> tuple[pd.DataFrame, dict[str, float]]:
        """exit_prob_drawdown over s > x, next to the ruin reference W_q(x)/W_q(s)."""
        experiment = run.experiment
        x, q = experiment.x, experiment.q
        model = run.model.build()
        spec = run.drawdown.build(x)
        sset = build_scale_set(model, q)
        s_values = [s for s in _s_values(experiment.s_grid, x + 0.5, 10.0) if s > x]
        frame = pd.DataFrame(
            {
                "s": s_values,
                "exit_prob": [exit_prob_drawdown(model, spec, q, x, float(s), cfg=self.quad_cfg) for s in s_values],
                "scale_ratio": [w(sset, x) / w(sset, float(s)) for s in s_values],
            }
        )
        return frame, {}

    def tax(self, run: RunConfig) -> tuple[pd.DataFrame, dict[str, float]]:
        """Running-max density of the taxed surplus at ruin, in taxed coordinates."""
        experiment = run.experiment
        x, q, lam = experiment.x, experiment.q, experiment.lam
        model = run.model.build()
        rate = run.drawdown.tax_rate()
        rows = []
        for s in _s_values(experiment.s_grid, x, x + 9.0):
            if s < x:
                continue
            jump, creep = tax_running_max_density(model, rate, q, lam, x, float(s))
            rows.append({"s": float(s), "jump": jump, "creeping": creep, "total": jump + creep})
        summary: dict[str, float] = {"ruin_probability": tax_ruin_probability(model, rate, x, self.quad_cfg)}
        if self.sim_cfg is not None:
            batch = simulate_tax(model, rate, x, self.sim_cfg)
            summary.update(_mc_summary(batch, check_tax_observations(batch, rate, x)))
        return pd.DataFrame(rows), summary

    def dividend(self, run: RunConfig) -> tuple[pd.DataFrame, dict[str, float]]:
        """Running-max profile of the reflected surplus; the last row holds the atoms at b."""
        experiment = run.experiment
        x, q, lam = experiment.x, experiment.q, experiment.lam
        b = run.drawdown.barrier
        if b is None:
            raise ParameterError("dividend runs need drawdown.barrier")
        model = run.model.build()
        rows = []
        for s in _s_values(experiment.s_grid, x, b):
            if x <= s < b:
                jump, creep = dividend_running_max_profile(model, b, q, lam, x, float(s), self.quad_cfg)
                rows.append({"s": float(s), "part": "density", "jump": jump, "creeping": creep})
        jump, creep = dividend_running_max_profile(model, b, q, lam, x, b, self.quad_cfg)
        rows.append({"s": b, "part": "atom", "jump": jump, "creeping": creep})
        summary: dict[str, float] = {"ruin_probability": dividend_ruin_probability(model, b, x, self.quad_cfg)}
        if self.sim_cfg is not None:
            batch = simulate_dividend(model, b, x, self.sim_cfg)
            summary.update(_mc_summary(batch, check_dividend_observations(batch, b)))
        return pd.DataFrame(rows), summary
