from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError


@dataclass(slots=True)
class QuadratureConfig:
    """Tolerances and truncation levels for the drawdown integrals."""

    rel_tol: float = 1e-7
    abs_tol: float = 1e-12
    s_max_prob: float = 1e-10     # survival-factor cutoff for the s-integral
    z_max_tail: float = 1e-12     # Levy-tail cutoff for the z-integral
    max_subdivisions: int = 200
    # fixed composite Gauss-Legendre rule used by the batched complex evaluator
    panel_nodes: int = 16
    first_panel: float = 0.01

    def validate(self) -> None:
        for name in ("rel_tol", "s_max_prob", "z_max_tail"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1), got {value}")
        if self.abs_tol < 0.0:
            raise ParameterError("abs_tol must be nonnegative")
        if self.max_subdivisions < 1 or self.panel_nodes < 1:
            raise ParameterError("max_subdivisions and panel_nodes must be >= 1")
        if self.first_panel <= 0.0:
            raise ParameterError("first_panel must be positive")


@dataclass(slots=True)
class InversionConfig:
    """Fourier-series inversion parameters.

    ``t_scale`` is the period of the series; ``None`` means twice the target
    time, which makes the series alternate.
    """

    abscissa_shift: float = 18.4
    n_terms: int = 2000
    euler_terms: int = 30
    t_scale: float | None = None

    def validate(self) -> None:
        if self.abscissa_shift <= 0.0:
            raise ParameterError("abscissa_shift must be positive")
        if not self.n_terms >= self.euler_terms >= 1:
            raise ParameterError("require n_terms >= euler_terms >= 1")
        if self.t_scale is not None and self.t_scale <= 0.0:
            raise ParameterError("t_scale must be positive")

    def period(self, t: float) -> float:
        return self.t_scale if self.t_scale is not None else 2.0 * t


@dataclass(slots=True)
class SimConfig:
    """Monte Carlo oracle settings."""

    n_paths: int = 100_000
    horizon: float = 200.0
    dt: float = 1e-3
    seed: int = 20240101
    bridge_correction: bool = True
    adaptive: bool = True
    max_dt: float = 0.05
    chunk_size: int = 10_000
    workers: int = 1

    def validate(self) -> None:
        if self.n_paths < 1 or self.chunk_size < 1 or self.workers < 1:
            raise ParameterError("n_paths, chunk_size and workers must be >= 1")
        if self.horizon <= 0.0 or self.dt <= 0.0:
            raise ParameterError("horizon and dt must be positive")
        if self.max_dt < self.dt:
            raise ParameterError("max_dt must be >= dt")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")
