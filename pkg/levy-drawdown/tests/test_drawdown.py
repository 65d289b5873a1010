"""Tests for drawdown functions, minimum-capital floors and their gaps."""

from __future__ import annotations

import numpy as np
import pytest

from levy_drawdown.drawdown import (
    Barrier,
    ConstantFloor,
    DrawdownSpec,
    Linear,
    Tax,
    TaxRate,
    Zero,
    affine_pieces,
    breakpoints,
    dividend_spec,
    gamma_at,
    tax_spec,
    theta_value,
    varsigma,
    varsigma_bar,
    xi,
    xi_bar,
    xi_bar_inverse_tax,
)
from levy_drawdown.errors import ConstraintViolation, DomainError, ParameterError


# ======================================================================
# parameter checks
# ======================================================================

class TestParameters:
    def test_linear_needs_a_below_one(self):
        with pytest.raises(ParameterError):
            Linear(a=1.0, b=0.5)

    def test_linear_needs_nonnegative_b(self):
        with pytest.raises(ParameterError):
            Linear(a=0.2, b=-0.1)

    def test_linear_b_zero_needs_nonpositive_a(self):
        with pytest.raises(ParameterError):
            Linear(a=0.3, b=0.0)
        Linear(a=-0.3, b=0.0)

    def test_tax_rates_in_unit_interval(self):
        with pytest.raises(ParameterError):
            TaxRate.constant(1.0)
        with pytest.raises(ParameterError):
            TaxRate((0.1, 0.2), (3.0, 4.0))

    def test_tax_breakpoints_increasing(self):
        with pytest.raises(ParameterError):
            TaxRate((0.1, 0.2, 0.3), (4.0, 3.0))

    def test_barrier_positive(self):
        with pytest.raises(ParameterError):
            Barrier(0.0)

    def test_floor_nonnegative(self):
        with pytest.raises(ParameterError):
            ConstantFloor(-0.1)


# ======================================================================
# xi and xi_bar
# ======================================================================

class TestDrawdownFunctions:
    def test_zero_is_ruin(self):
        spec = DrawdownSpec()
        assert xi(spec, 3.0) == 0.0
        assert xi_bar(spec, 3.0) == 3.0

    def test_linear(self):
        spec = DrawdownSpec(Linear(a=0.6, b=0.5))
        assert xi(spec, 2.0) == pytest.approx(0.7)
        assert xi_bar(spec, 2.0) == pytest.approx(1.3)

    def test_vectorised(self):
        spec = DrawdownSpec(Linear(a=0.3, b=0.5))
        z = np.array([1.0, 2.0, 4.0])
        np.testing.assert_allclose(xi_bar(spec, z), 0.7 * z + 0.5)

    def test_barrier(self):
        spec = dividend_spec(3.0)
        np.testing.assert_allclose(xi(spec, np.array([1.0, 3.0, 5.0])), [0.0, 0.0, 2.0])
        assert xi_bar(spec, 7.0) == pytest.approx(3.0)

    def test_constant_tax(self):
        spec = tax_spec(0.3, x0=1.0)
        assert xi(spec, 3.0) == pytest.approx(0.6)
        assert xi_bar(spec, 1.0) == pytest.approx(1.0)

    def test_piecewise_tax(self):
        rate = TaxRate((0.1, 0.4), (2.0,))
        spec = DrawdownSpec(Tax(rate, x0=1.0))
        assert xi(spec, 3.0) == pytest.approx(0.1 * 1.0 + 0.4 * 1.0)
        assert gamma_at(spec, 2.5) == pytest.approx(0.4)
        assert gamma_at(spec, 1.5) == pytest.approx(0.1)

    def test_tax_below_start_rejected(self):
        with pytest.raises(DomainError):
            xi(tax_spec(0.2, x0=2.0), 1.0)

    def test_gamma_at_needs_tax(self):
        with pytest.raises(DomainError):
            gamma_at(DrawdownSpec(), 1.0)


class TestTaxInverse:
    def test_constant_inverse(self):
        spec = tax_spec(0.25, x0=1.0)
        z = xi_bar_inverse_tax(spec, 2.5)
        assert z == pytest.approx(1.0 + 1.5 / 0.75)
        assert xi_bar(spec, z) == pytest.approx(2.5)

    def test_piecewise_inverse(self):
        spec = DrawdownSpec(Tax(TaxRate((0.1, 0.5), (2.0,)), x0=1.0))
        for s in (1.0, 1.5, 1.9, 2.4, 5.0):
            assert xi_bar(spec, xi_bar_inverse_tax(spec, s)) == pytest.approx(s, abs=1e-10)

    def test_below_start_rejected(self):
        with pytest.raises(DomainError):
            xi_bar_inverse_tax(tax_spec(0.2, x0=2.0), 1.0)

    def test_tax_from_zero_start(self):
        spec = DrawdownSpec(Tax(TaxRate.constant(0.5), 0.0))
        assert xi_bar_inverse_tax(spec, 1.0) == pytest.approx(2.0)
        assert xi_bar(spec, 2.0) == pytest.approx(1.0)
        assert xi(spec, 0.0) == pytest.approx(0.0)

    def test_negative_start_rejected(self):
        with pytest.raises(ParameterError):
            Tax(TaxRate.constant(0.5), -0.1)


# ======================================================================
# minimum capital
# ======================================================================

class TestMinimumCapital:
    def test_unconstrained_by_default(self):
        assert not DrawdownSpec().constrained
        assert not DrawdownSpec(Zero(), ConstantFloor(0.0)).constrained
        assert DrawdownSpec(Zero(), ConstantFloor(0.2)).constrained

    def test_varsigma(self):
        spec = DrawdownSpec(Linear(a=0.6, b=0.5), ConstantFloor(0.3))
        assert theta_value(spec, 2.0) == pytest.approx(0.3)
        assert varsigma(spec, 2.0) == pytest.approx(1.0)
        assert varsigma_bar(spec, 2.0) == pytest.approx(1.0)

    def test_floor_reaching_gap_is_violation(self):
        spec = DrawdownSpec(Zero(), ConstantFloor(1.0))
        with pytest.raises(ConstraintViolation):
            varsigma_bar(spec, 0.8)
        assert varsigma_bar(spec, 2.0) == pytest.approx(1.0)

    def test_violation_is_domain_error(self):
        assert issubclass(ConstraintViolation, DomainError)


# ======================================================================
# affine pieces
# ======================================================================

class TestAffinePieces:
    def test_linear_single_piece(self):
        spec = DrawdownSpec(Linear(a=0.3, b=0.5))
        (piece,) = affine_pieces(spec, 1.0, 5.0)
        assert piece.slope == pytest.approx(0.7)
        assert piece(2.0) == pytest.approx(float(xi_bar(spec, 2.0)))

    def test_barrier_splits_at_b(self):
        spec = dividend_spec(3.0)
        assert breakpoints(spec) == [3.0]
        below, above = affine_pieces(spec, 1.0, 6.0)
        assert (below.slope, above.slope) == (1.0, 0.0)
        assert above(5.0) == pytest.approx(3.0)

    def test_tax_pieces_follow_rates(self):
        spec = DrawdownSpec(Tax(TaxRate((0.1, 0.5), (2.0,)), x0=1.0))
        pieces = affine_pieces(spec, 1.0, 4.0)
        assert [p.slope for p in pieces] == pytest.approx([0.9, 0.5])
        for p in pieces:
            mid = 0.5 * (p.start + p.end)
            assert p(mid) == pytest.approx(float(xi_bar(spec, mid)))

    def test_constant_floor_shifts_intercept(self):
        spec = DrawdownSpec(Zero(), ConstantFloor(0.4))
        (piece,) = affine_pieces(spec, 1.0, 3.0, constrained=True)
        assert piece(2.0) == pytest.approx(1.6)

    def test_general_floor_has_no_pieces(self):
        spec = DrawdownSpec(Zero(), lambda z: 0.1 * np.ones_like(z))
        assert affine_pieces(spec, 1.0, 3.0, constrained=True) is None
