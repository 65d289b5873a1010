"""Pydantic models for run configurations and result documents."""

from __future__ import annotations

from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from levy_drawdown.config import InversionConfig, QuadratureConfig, SimConfig
from levy_drawdown.drawdown import Barrier, ConstantFloor, DrawdownSpec, Linear, Tax, TaxRate, Zero
from levy_drawdown.errors import ParameterError
from levy_drawdown.levy_models import BrownianDrift, CramerLundbergExp, JumpDiffusionErlang2, LevyModel

Command = Literal["prob", "joint-density", "exit", "tax", "dividend", "simulate"]

_FAMILY_PARAMS = {
    "cramer_lundberg": ("c", "lambda0", "mu_claim"),
    "brownian": ("mu", "sigma"),
    "jump_diffusion": ("c", "sigma", "lambda0", "alpha"),
}


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelBlock(_Block):
    family: Literal["cramer_lundberg", "brownian", "jump_diffusion"]
    c: float | None = None
    lambda0: float | None = None
    mu_claim: float | None = None
    mu: float | None = None
    sigma: float | None = None
    alpha: float | None = None

    @model_validator(mode="after")
    def _check_params(self) -> "ModelBlock":
        needed = _FAMILY_PARAMS[self.family]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.family} model needs {', '.join(missing)}")
        extra = [name for name in ("c", "lambda0", "mu_claim", "mu", "sigma", "alpha") if name not in needed and getattr(self, name) is not None]
        if extra:
            raise ValueError(f"{self.family} model does not take {', '.join(extra)}")
        return self

    def build(self) -> LevyModel:
        params = {name: getattr(self, name) for name in _FAMILY_PARAMS[self.family]}
        match self.family:
            case "cramer_lundberg":
                return CramerLundbergExp(**params)
            case "brownian":
                return BrownianDrift(**params)
        return JumpDiffusionErlang2(**params)

    def with_param(self, name: str, value: float) -> "ModelBlock":
        if name not in _FAMILY_PARAMS[self.family]:
            raise ParameterError(f"cannot sweep {name!r} for a {self.family} model")
        return self.model_copy(update={name: float(value)})


class DrawdownBlock(_Block):
    variant: Literal["zero", "linear", "tax", "barrier"] = "zero"
    a: float = 0.0
    b: float = 0.0
    gamma: list[float] = Field(default_factory=lambda: [0.0])
    gamma_breakpoints: list[float] = Field(default_factory=list)
    barrier: float | None = None
    theta: float | None = None

    def tax_rate(self) -> TaxRate:
        return TaxRate(tuple(self.gamma), tuple(self.gamma_breakpoints))

    def build(self, x: float) -> DrawdownSpec:
        floor = ConstantFloor(self.theta) if self.theta else None
        match self.variant:
            case "linear":
                xi = Linear(self.a, self.b)
            case "tax":
                xi = Tax(self.tax_rate(), x0=x)
            case "barrier":
                if self.barrier is None:
                    raise ParameterError("barrier variant needs 'barrier'")
                xi = Barrier(self.barrier)
            case _:
                xi = Zero()
        return DrawdownSpec(xi, floor)


TABLE_ONE_CASES: dict[str, DrawdownBlock] = {
    "case_I": DrawdownBlock(),
    "case_II": DrawdownBlock(variant="linear", a=0.3, b=0.5),
    "case_III": DrawdownBlock(variant="linear", a=0.5, b=0.5),
    "case_IV": DrawdownBlock(variant="linear", a=0.6, b=0.5),
}


class GridBlock(_Block):
    start: float
    stop: float
    step: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "GridBlock":
        if self.stop < self.start:
            raise ValueError("grid stop must be >= start")
        return self

    def values(self) -> np.ndarray:
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 12)


class ExperimentBlock(_Block):
    x: float = Field(default=1.0, gt=0.0)
    sweep: Literal["x", "c", "mu", "sigma", "lambda0", "alpha", "mu_claim"] = "x"
    grid: GridBlock | None = None
    s_grid: GridBlock | None = None
    t1_grid: GridBlock | None = None
    t2_grid: GridBlock | None = None
    q: float = Field(default=0.0, ge=0.0)
    lam: float = Field(default=0.0, ge=0.0)
    omega: Literal["unit", "american_put"] = "unit"
    strike: float = Field(default=1.0, gt=0.0)
    log_price_shift: float = 0.0


class QuadratureBlock(_Block):
    rel_tol: float = 1e-7
    abs_tol: float = 1e-12
    s_max_prob: float = 1e-10
    z_max_tail: float = 1e-12
    max_subdivisions: int = 200
    panel_nodes: int = 16
    first_panel: float = 0.01

    def to_config(self) -> QuadratureConfig:
        cfg = QuadratureConfig(**self.model_dump())
        cfg.validate()
        return cfg


class InversionBlock(_Block):
    abscissa_shift: float = 18.4
    n_terms: int = 2000
    euler_terms: int = 30
    t_scale: float | None = None

    def to_config(self) -> InversionConfig:
        cfg = InversionConfig(**self.model_dump())
        cfg.validate()
        return cfg


class SimBlock(_Block):
    n_paths: int = 100_000
    horizon: float = 200.0
    dt: float = 1e-3
    seed: int = 20240101
    bridge_correction: bool = True
    adaptive: bool = True
    max_dt: float = 0.05
    chunk_size: int = 10_000

    def to_config(self, *, seed: int | None = None, workers: int = 1) -> SimConfig:
        params = self.model_dump()
        if seed is not None:
            params["seed"] = seed
        cfg = SimConfig(**params, workers=workers)
        cfg.validate()
        return cfg


class OutputBlock(_Block):
    path: str | None = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Block):
    """One CLI run: model, drawdown rule(s), experiment grid and numerics."""

    command: Command | None = None
    model: ModelBlock
    drawdown: DrawdownBlock = Field(default_factory=DrawdownBlock)
    cases: dict[str, DrawdownBlock] = Field(default_factory=dict)
    experiment: ExperimentBlock = Field(default_factory=ExperimentBlock)
    quadrature: QuadratureBlock = Field(default_factory=QuadratureBlock)
    inversion: InversionBlock = Field(default_factory=InversionBlock)
    sim: SimBlock = Field(default_factory=SimBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    def case_blocks(self) -> dict[str, DrawdownBlock]:
        return self.cases or TABLE_ONE_CASES


class ResultDocument(BaseModel):
    """JSON result of one run; published as levy-drawdown-result/v1."""

    model_config = ConfigDict(extra="forbid")

    spec: Literal["levy-drawdown-result/v1"] = "levy-drawdown-result/v1"
    command: Command
    version: str
    config_sha256: str = Field(pattern=r"^[0-9a-f]{64}$")
    seed: int | None = None
    config: dict[str, Any]
    columns: list[str]
    rows: list[list[float | bool | str | None]]
    summary: dict[str, float | int | str | None] = Field(default_factory=dict)
