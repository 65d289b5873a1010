"""Joint density of (tau, ell) on a (t1, t2) grid."""

from __future__ import annotations

import numpy as np
import pandas as pd
from scipy import integrate

from levy_drawdown.cli.models import GridBlock, RunConfig
from levy_drawdown.config import InversionConfig, QuadratureConfig, SimConfig
from levy_drawdown.laplace_inversion import joint_density_grid
from levy_drawdown.mc_oracle import simulate_drawdown, summarize

DEFAULT_T_GRID = GridBlock(start=0.25, stop=4.0, step=0.25)


def density_summary(t1: np.ndarray, t2: np.ndarray, values: np.ndarray) -> dict[str, float]:
    """Peak location, box mass and the mass beyond the upper quartile of t1."""
    peak = np.unravel_index(int(np.argmax(values)), values.shape)
    box = float(integrate.trapezoid(integrate.trapezoid(values, t2, axis=1), t1))
    cut = float(np.quantile(t1, 0.75))
    upper = t1 >= cut
    tail = float(integrate.trapezoid(integrate.trapezoid(values[upper], t2, axis=1), t1[upper])) if upper.sum() > 1 else 0.0
    return {
        "max_density": float(values[peak]),
        "peak_t1": float(t1[peak[0]]),
        "peak_t2": float(t2[peak[1]]),
        "box_mass": box,
        "upper_quartile_mass": tail,
    }


class DensityService:
    def __init__(
        self,
        quad_cfg: QuadratureConfig,
        inv_cfg: InversionConfig,
        sim_cfg: SimConfig | None = None,
        *,
        workers: int = 1,
    ) -> None:
        self.quad_cfg = quad_cfg
        self.inv_cfg = inv_cfg
        self.sim_cfg = sim_cfg
        self.workers = workers

    def grid(self, run: RunConfig) -> tuple[pd.DataFrame, dict[str, float]]:
        experiment = run.experiment
        t1 = (experiment.t1_grid or DEFAULT_T_GRID).values()
        t2 = (experiment.t2_grid or DEFAULT_T_GRID).values()
        model = run.model.build()
        spec = run.drawdown.build(experiment.x)
        values = joint_density_grid(model, spec, experiment.x, t1, t2, self.inv_cfg, self.quad_cfg, workers=self.workers)
        t1_mesh, t2_mesh = np.meshgrid(t1, t2, indexing="ij")
        frame = pd.DataFrame({"t1": t1_mesh.ravel(), "t2": t2_mesh.ravel(), "density": values.ravel()})
        summary = density_summary(t1, t2, values)
        if self.sim_cfg is not None:
            batch = simulate_drawdown(model, spec, experiment.x, self.sim_cfg)
            tau, ell = batch.tau, batch.ell
            inside = batch.hit & (tau >= t1[0]) & (tau <= t1[-1]) & (ell >= t2[0]) & (ell <= t2[-1])
            est = summarize(inside.astype(float))
            summary["mc_box_mass"] = est.mean
            summary["mc_box_mass_stderr"] = est.stderr
        return frame, summary
