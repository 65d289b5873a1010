"""Exception hierarchy shared by the engine, the oracle and the CLI."""

from __future__ import annotations


class LevyDrawdownError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(LevyDrawdownError, ValueError):
    """A model, spec or config parameter is outside its admissible range."""


class DomainError(LevyDrawdownError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConstraintViolation(DomainError):
    """The minimum-capital function reaches the drawdown gap."""


class SingularJacobianError(DomainError):
    """The tax rate equals one at the transformed running maximum."""


class RootFindingError(LevyDrawdownError, ArithmeticError):
    """Root bracketing did not converge or the roots are not distinct."""


class QuadratureError(LevyDrawdownError, ArithmeticError):
    """Adaptive quadrature stopped before reaching the requested tolerance."""

    def __init__(self, message: str, *, estimate: complex | float, error_bound: float):
        super().__init__(f"{message} (estimate={estimate!r}, error_bound={error_bound:.3e})")
        self.estimate = estimate
        self.error_bound = error_bound


class InversionError(LevyDrawdownError, ArithmeticError):
    """A transform evaluation returned a non-finite value at a contour node."""

    def __init__(self, message: str, *, node: complex):
        super().__init__(f"{message} at node {node!r}")
        self.node = node
