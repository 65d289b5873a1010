from .config import InversionConfig, QuadratureConfig, SimConfig
from .drawdown import Barrier, ConstantFloor, DrawdownSpec, Linear, Tax, TaxRate, Zero, dividend_spec, tax_spec
from .errors import (
    ConstraintViolation,
    DomainError,
    InversionError,
    LevyDrawdownError,
    ParameterError,
    QuadratureError,
    RootFindingError,
    SingularJacobianError,
)
from .gerber_shiu import (
    PenaltySpec,
    american_put_penalty,
    creeping_density,
    density_point,
    dividend_ruin_probability,
    drawdown_probability,
    drawdown_probability_limit,
    exit_prob_drawdown,
    joint_laplace,
    jump_density_continuous,
    penalty_at_drawdown,
    tax_ruin_probability,
)
from .laplace_inversion import invert_1d, invert_2d, invert_2d_joint_density, joint_density_grid
from .levy_models import BrownianDrift, CramerLundbergExp, JumpDiffusionErlang2, laplace_exponent, phi_q
from .mc_oracle import Estimate, SimBatch, estimate, hit_indicator, simulate_drawdown
from .scale_functions import build_scale_set

__version__ = "0.1.0"

__all__ = [
    "Barrier",
    "BrownianDrift",
    "ConstantFloor",
    "ConstraintViolation",
    "CramerLundbergExp",
    "DomainError",
    "DrawdownSpec",
    "Estimate",
    "InversionConfig",
    "InversionError",
    "JumpDiffusionErlang2",
    "LevyDrawdownError",
    "Linear",
    "ParameterError",
    "PenaltySpec",
    "QuadratureConfig",
    "QuadratureError",
    "RootFindingError",
    "SimBatch",
    "SimConfig",
    "SingularJacobianError",
    "Tax",
    "TaxRate",
    "Zero",
    "american_put_penalty",
    "build_scale_set",
    "creeping_density",
    "density_point",
    "dividend_ruin_probability",
    "dividend_spec",
    "drawdown_probability",
    "drawdown_probability_limit",
    "estimate",
    "exit_prob_drawdown",
    "hit_indicator",
    "invert_1d",
    "invert_2d",
    "invert_2d_joint_density",
    "joint_density_grid",
    "joint_laplace",
    "jump_density_continuous",
    "laplace_exponent",
    "penalty_at_drawdown",
    "phi_q",
    "simulate_drawdown",
    "tax_ruin_probability",
    "tax_spec",
]
