"""Bessel core: series / closed forms / continued-fraction ratio.

High-precision reference values frozen from a 40-digit mpmath evaluation;
mpmath itself is also used live as the independent oracle where a grid is
swept.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinlab.specfun import (
    OVERFLOW_GUARD,
    BesselOrder,
    b_constant,
    bessel_i,
    bessel_ratio,
    bessel_ratio_deriv,
    scaled_bessel_log,
    sphere_area,
    tangent_second_moment,
)

mpmath.mp.dps = 30

# frozen 40-digit references
I_HALF_AT_1 = 0.9376748882454876467172628843913933678318
I0_AT_1 = 1.266065877752008335598244625214717537608
I1_AT_1 = 0.5651591039924850272076960276098633073289
RATIO_2_AT_1 = 0.4463899658965345070476817951926426697762


def mp_i(nu: float, x: float) -> float:
    return float(mpmath.besseli(mpmath.mpf(nu), mpmath.mpf(x)))


class TestBesselI:
    def test_zero_argument(self):
        assert bessel_i(BesselOrder(0), 0.0) == 1.0
        assert bessel_i(BesselOrder(2), 0.0) == 0.0
        assert bessel_i(1.0, 0.0) == 0.0

    def test_half_order_closed_form(self):
        # I_{1/2}(x) = sqrt(2/(pi x)) sinh(x), cross-checked against the
        # 30-term power series route inside bessel_i
        got = bessel_i(0.5, 1.0)
        assert got == pytest.approx(I_HALF_AT_1, rel=1e-14)
        assert got == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)

    def test_integer_order_spot_values(self):
        assert bessel_i(0.0, 1.0) == pytest.approx(I0_AT_1, rel=1e-14)
        assert bessel_i(1.0, 1.0) == pytest.approx(I1_AT_1, rel=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bessel_i(0.0, -1.0)
        with pytest.raises(ValueError):
            bessel_i(0.0, OVERFLOW_GUARD + 1.0)
        with pytest.raises(ValueError):
            BesselOrder(-1)
        with pytest.raises(ValueError):
            BesselOrder.of(0.3)

    @pytest.mark.parametrize("twice", [0, 1, 2, 3, 4, 5, 7, 9, 12, 20])
    def test_against_mpmath_grid(self, twice):
        nu = twice / 2
        for x in [0.0, 1e-6, 0.03, 0.5, 2.0, 9.9, 10.0, 10.1, 37.0, 120.0, 700.0]:
            ref = mp_i(nu, x)
            got = bessel_i(BesselOrder(twice), x)
            if ref == 0.0:
                assert got == 0.0
            else:
                assert got == pytest.approx(ref, rel=1e-12), (nu, x)

    def test_closed_form_boundary_cross_validation(self):
        # the hyperbolic forms and the series must agree across the seam
        for twice in (1, 3, 5, 7, 9):
            for x in np.linspace(9.5, 10.5, 11):
                ref = mp_i(twice / 2, float(x))
                assert bessel_i(BesselOrder(twice), float(x)) == pytest.approx(ref, rel=1e-13)

    @settings(max_examples=150, deadline=None)
    @given(
        twice=st.integers(min_value=2, max_value=20),
        x=st.floats(min_value=1e-3, max_value=50.0),
    )
    def test_three_term_recurrence(self, twice, x):
        # I_{nu+1}(x) = I_{nu-1}(x) - (2 nu / x) I_nu(x), residual relative to
        # the largest participating magnitude
        nu = twice / 2
        lower = bessel_i(BesselOrder(twice - 2), x)
        mid = bessel_i(BesselOrder(twice), x)
        upper = bessel_i(BesselOrder(twice + 2), x)
        resid = abs(upper - (lower - (2 * nu / x) * mid))
        scale = max(abs(lower), abs(2 * nu / x * mid), abs(upper))
        assert resid <= 1e-10 * scale


class TestBesselRatio:
    def test_at_zero(self):
        assert bessel_ratio(2, 0.0) == 0.0
        assert bessel_ratio(7, 0.0) == 0.0

    def test_direct_quotient_oracle(self):
        # value recorded from the series quotient before the continued
        # fraction was built
        assert bessel_ratio(2, 1.0) == pytest.approx(RATIO_2_AT_1, rel=1e-14)

    def test_agrees_with_quotient_where_representable(self):
        for dim in (2, 3, 4, 5, 8, 13, 20):
            for kappa in (1e-8, 1e-3, 0.2, 1.0, 7.7, 49.0, 300.0, 699.0):
                quotient = bessel_i(dim / 2, kappa) / bessel_i(dim / 2 - 1, kappa)
                assert bessel_ratio(dim, kappa) == pytest.approx(quotient, rel=1e-12)

    def test_stable_past_overflow_guard(self):
        # the quotient route overflows here; the ratio must not
        val = bessel_ratio(3, 5000.0)
        assert 0.99 < val < 1.0

    def test_range_and_monotone(self):
        grid = np.linspace(1e-4, 80.0, 400)
        for dim in (2, 3, 4, 6):
            vals = np.array([bessel_ratio(dim, k) for k in grid])
            assert np.all(vals > 0.0) and np.all(vals < 1.0)
            assert np.all(np.diff(vals) > 0.0)

    def test_small_kappa_expansion(self):
        # cubic model error < 1e-9 at k = 0.01; the k^5 coefficient of the
        # expansion is positive, so the remainder sits just above the cubic
        for dim in (2, 3, 4):
            k = 0.01
            cubic = k / dim - k**3 / (dim**2 * (dim + 2))
            err = bessel_ratio(dim, k) - cubic
            assert 0.0 <= err < 1e-9

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            bessel_ratio(1, 1.0)
        with pytest.raises(ValueError):
            bessel_ratio(3, -0.5)


class TestRatioDerivative:
    @pytest.mark.parametrize("dim", [2, 3, 4, 6])
    @pytest.mark.parametrize("kappa", [1e-4, 0.1, 1.0, 3.7, 20.0])
    def test_against_central_differences(self, dim, kappa):
        h = 1e-6 * max(1.0, kappa)
        fd = (bessel_ratio(dim, kappa + h) - bessel_ratio(dim, kappa - h)) / (2 * h)
        assert bessel_ratio_deriv(dim, kappa) == pytest.approx(fd, abs=1e-8)

    def test_limit_at_zero(self):
        for dim in (2, 3, 5):
            assert bessel_ratio_deriv(dim, 0.0) == pytest.approx(1.0 / dim, rel=1e-12)


class TestTangentSecondMoment:
    @pytest.mark.parametrize("dim", [2, 3, 4, 6])
    @pytest.mark.parametrize("kappa", [1e-6, 0.5, 2.0, 15.0])
    def test_matches_bessel_expression(self, dim, kappa):
        # (I_{N/2} + k I_{N/2+1}) / (k I_{N/2-1}) evaluated directly
        num = bessel_i(dim / 2, kappa) + kappa * bessel_i(dim / 2 + 1, kappa)
        den = kappa * bessel_i(dim / 2 - 1, kappa)
        assert tangent_second_moment(dim, kappa) == pytest.approx(num / den, rel=1e-11)

    def test_uniform_limit(self):
        for dim in (2, 3, 7):
            assert tangent_second_moment(dim, 0.0) == pytest.approx(1.0 / dim, rel=1e-12)


class TestScaledBesselLog:
    def test_zero(self):
        assert scaled_bessel_log(3, 0.0) == 0.0

    @pytest.mark.parametrize("dim", [2, 3, 4, 7])
    def test_matches_direct_log(self, dim):
        nu = dim / 2 - 1
        for r in (0.5, 2.0, 10.0, 60.0):
            direct = math.log(
                mp_i(nu, r) * math.gamma(dim / 2) * (2.0 / r) ** nu
            )
            assert scaled_bessel_log(dim, r) == pytest.approx(direct, rel=1e-12, abs=1e-13)

    def test_tiny_argument_stability(self):
        # near zero the value is ~ r^2 / (2N); the naive log difference would
        # lose every digit here
        dim = 4
        r = 1e-6
        assert scaled_bessel_log(dim, r) == pytest.approx(r * r / (2 * dim), rel=1e-6)


class TestSphereConstants:
    def test_sphere_area(self):
        assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
        assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)
        # Gamma(2) = 1 makes the 3-sphere area 2 pi^2
        assert sphere_area(4) == pytest.approx(2 * math.pi**2, rel=1e-15)

    def test_b_constant_small_dims(self):
        assert b_constant(2) == 1.0
        assert b_constant(3) == 1.0
        assert b_constant(4) == 1.0  # |-1| * |1|
        assert b_constant(6) == 3.0
        assert b_constant(5) == 2.0  # 2^1 * (1)_1

    def test_even_b_constant_normalizes_weight_integral(self):
        # for even N the polar weight integral is B_N pi I_{N/2-1}(b) / b^(N/2-1)
        from conftest import polar_quad

        for dim in (2, 4, 6):
            b = 1.3
            lhs = polar_quad(dim, lambda x: 1.0, b)
            rhs = b_constant(dim) * math.pi * bessel_i(dim / 2 - 1, b) / b ** (dim / 2 - 1)
            assert lhs == pytest.approx(rhs, rel=1e-12)
