"""Thermodynamics: fixed point, free energy, rate function, tilted densities.

The independent oracle throughout is pure quadrature of the tilted-family
functional (conftest.tilt_functional_quad), which never touches the Bessel
code path.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import optimize

from conftest import polar_quad, tilt_functional_quad
from spinlab.specfun import bessel_i, bessel_ratio, bessel_ratio_deriv
from spinlab.thermo import (
    free_energy,
    magnetization,
    phase_point,
    phi,
    phi_deriv,
    phi_second_deriv,
    rate_function,
    solve_fixed_point,
    supercritical_variance,
    tilted_density,
)

# 40-digit mpmath references
B_2_3 = 2.172476152879058582173095996225863820601
VAR_2_3 = 1.893033470824171404342237608369520852327
VAR_3_5 = 0.8745206621786702043173723030785963200006
VAR_4_6 = 1.323533820682462245014589815682125982724
PHI_2_3_AT_B = -0.1600640015646777826417409583928335077321


def bisection_fixed_point(dim: int, beta: float) -> float:
    """Independent oracle: bisection on b - beta I_{N/2}(b)/I_{N/2-1}(b)."""

    def g(b: float) -> float:
        return b - beta * bessel_i(dim / 2, b) / bessel_i(dim / 2 - 1, b)

    lo, hi = 1e-8, beta
    assert g(lo) < 0 < g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestPhi:
    def test_zero_limit(self):
        for dim in (2, 3, 4, 7):
            for beta in (0.0, 1.0, float(dim), 2.5 * dim):
                assert phi(dim, beta, 0.0) == 0.0
                assert abs(phi(dim, beta, 1e-8)) < 1e-15

    def test_quadrature_reconstruction(self):
        # the closed form must equal the entropy-minus-interaction functional
        # of the tilted density, evaluated by quadrature only
        assert phi(2, 1.0, 1.0) == pytest.approx(tilt_functional_quad(2, 1.0, 1.0), abs=1e-10)
        for dim, beta, r in [(2, 3.0, 2.2), (3, 1.5, 0.7), (4, 6.0, 3.9), (5, 2.0, 1.0)]:
            assert phi(dim, beta, r) == pytest.approx(
                tilt_functional_quad(dim, beta, r), abs=1e-9)

    def test_derivative_vanishes_at_fixed_point(self):
        for dim, beta in [(2, 3.0), (3, 5.0), (4, 6.0)]:
            b = solve_fixed_point(dim, beta)
            h = 1e-5
            central = (phi(dim, beta, b + h) - phi(dim, beta, b - h)) / (2 * h)
            assert abs(central) < 1e-8
            assert phi_deriv(dim, beta, b) == pytest.approx(0.0, abs=1e-13)

    def test_shape_above_transition(self):
        # decreasing left of b, increasing right of it, no other interior minima
        for dim, beta in [(2, 3.0), (3, 4.5)]:
            b = solve_fixed_point(dim, beta)
            left = np.linspace(b * 1e-3, b * 0.999, 60)
            right = np.linspace(b * 1.001, 3 * b, 60)
            phis_left = [phi(dim, beta, r) for r in left]
            phis_right = [phi(dim, beta, r) for r in right]
            assert np.all(np.diff(phis_left) < 0)
            assert np.all(np.diff(phis_right) > 0)

    def test_second_derivative(self):
        for dim, beta in [(2, 3.0), (3, 5.0), (4, 6.0), (2, 2.2), (5, 9.0)]:
            b = solve_fixed_point(dim, beta)
            h = 1e-4 * max(1.0, b)
            fd = (phi(dim, beta, b + h) - 2 * phi(dim, beta, b) + phi(dim, beta, b - h)) / h**2
            assert phi_second_deriv(dim, beta, b) == pytest.approx(fd, rel=1e-5)
            assert phi_second_deriv(dim, beta, b) > 0.0


class TestFixedPoint:
    def test_subcritical_is_zero(self):
        assert solve_fixed_point(3, 2.0) == 0.0
        assert solve_fixed_point(2, 2.0) == 0.0  # criticality included

    def test_bisection_oracle(self):
        got = solve_fixed_point(2, 3.0)
        assert got == pytest.approx(bisection_fixed_point(2, 3.0), abs=1e-10)
        assert got == pytest.approx(B_2_3, rel=1e-13)
        for dim, beta in [(3, 3.7), (4, 9.0), (6, 6.5)]:
            assert solve_fixed_point(dim, beta) == pytest.approx(
                bisection_fixed_point(dim, beta), abs=1e-10)

    def test_residual_tolerance(self):
        for dim, beta in [(2, 2.05), (2, 3.0), (3, 3.01), (4, 20.0), (10, 10.5)]:
            b = solve_fixed_point(dim, beta)
            assert abs(b - beta * bessel_ratio(dim, b)) <= 1e-12

    def test_vanishes_at_criticality_from_above(self):
        for dim in (2, 3, 4):
            values = [solve_fixed_point(dim, dim + eps) for eps in (1.0, 0.1, 0.01)]
            assert values[0] > values[1] > values[2] > 0.0
            assert values[2] == pytest.approx(math.sqrt((dim + 2) * 0.01), rel=0.05)


class TestFreeEnergy:
    def test_subcritical_branch(self):
        assert free_energy(4, 3.0) == 0.0
        assert free_energy(2, 2.0) == 0.0  # continuity at criticality

    def test_supercritical_value_and_sign(self):
        val = free_energy(2, 3.0)
        assert val == pytest.approx(PHI_2_3_AT_B, rel=1e-12)
        assert val < 0.0

    def test_variational_consistency(self):
        # matches the quadrature minimum of the tilted functional
        for dim, beta in [(2, 3.0), (3, 2.0), (4, 5.0)]:
            res = optimize.minimize_scalar(
                lambda b: tilt_functional_quad(dim, beta, b),
                bounds=(0.0, 2 * beta), method="bounded",
                options={"xatol": 1e-10},
            )
            assert free_energy(dim, beta) == pytest.approx(min(res.fun, 0.0), abs=1e-6)

    def test_continuity_at_transition(self):
        # phi and its central-difference derivative are continuous at beta = N
        for dim in (2, 3):
            eps = 1e-4
            assert abs(free_energy(dim, dim + eps)) < 1e-6
            deriv_above = (free_energy(dim, dim + 2 * eps) - free_energy(dim, dim + eps)) / eps
            assert abs(deriv_above) < 1e-3  # subcritical derivative is exactly 0


class TestRateFunction:
    def test_zero_at_minimizer(self):
        assert rate_function(2, 1.0, 0.0) == 0.0
        b = solve_fixed_point(2, 3.0)
        assert rate_function(2, 3.0, b) == pytest.approx(0.0, abs=1e-12)

    def test_nonnegative_on_grid(self):
        for dim, beta in [(2, 1.0), (2, 3.0), (3, 3.0), (4, 2.0)]:
            for r in np.linspace(0.0, 2 * max(beta, 1.0), 50):
                assert rate_function(dim, beta, float(r)) >= 0.0

    def test_small_r_quadratic_coefficient(self):
        # I_beta(eps) ~ (1 - beta/N) eps^2 / (2N): fitted coefficient within 10%
        dim, beta = 2, 1.0
        eps = np.linspace(1e-4, 5e-3, 20)
        vals = np.array([rate_function(dim, beta, e) for e in eps])
        coeff = np.polyfit(eps, vals / eps**2, 0)[0]
        expected = (1 - beta / dim) / (2 * dim)
        assert coeff == pytest.approx(expected, rel=0.10)


class TestTiltedDensity:
    def test_flat_case_normalizes_weight(self):
        for dim in (2, 3, 5):
            density = tilted_density(dim, 0.0)
            flat_integral = polar_quad(dim, lambda x: 1.0, 0.0)
            assert density.normalizer == pytest.approx(1.0 / flat_integral, rel=1e-12)

    @pytest.mark.parametrize("dim,b", [(2, 1.0), (3, 2.0), (4, 0.3), (5, 6.0)])
    def test_invariants_by_quadrature(self, dim, b):
        density = tilted_density(dim, b)
        total = density.normalizer * polar_quad(dim, lambda x: 1.0, b)
        mean = density.normalizer * polar_quad(dim, lambda x: x, b)
        assert total == pytest.approx(1.0, abs=1e-10)
        assert mean == pytest.approx(bessel_ratio(dim, b), abs=1e-10)
        assert mean == pytest.approx(density.mean, abs=1e-10)

    def test_mean_constraint_example(self):
        density = tilted_density(2, 1.0)
        assert density.mean == pytest.approx(
            bessel_i(1.0, 1.0) / bessel_i(0.0, 1.0), rel=1e-12)


class TestSupercriticalVariance:
    def test_reference_values(self):
        assert supercritical_variance(2, 3.0) == pytest.approx(VAR_2_3, rel=1e-12)
        assert supercritical_variance(3, 5.0) == pytest.approx(VAR_3_5, rel=1e-12)
        assert supercritical_variance(4, 6.0) == pytest.approx(VAR_4_6, rel=1e-12)

    def test_positive_and_slope_below_one(self):
        for dim, beta in [(2, 3.0), (3, 5.0), (4, 6.0), (2, 2.01), (6, 14.0)]:
            b = solve_fixed_point(dim, beta)
            assert beta * bessel_ratio_deriv(dim, b) < 1.0
            assert supercritical_variance(dim, beta) > 0.0

    def test_bracket_positive_and_equals_derivative(self):
        # 1 - (N-1) f(b)/b - f(b)^2 > 0, and it coincides with f'(b)
        for dim, beta in [(2, 3.0), (3, 5.0), (4, 6.0)]:
            b = solve_fixed_point(dim, beta)
            f = bessel_ratio(dim, b)
            bracket = 1 - (dim - 1) * f / b - f * f
            assert bracket > 0.0
            assert bracket == pytest.approx(bessel_ratio_deriv(dim, b), rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            supercritical_variance(3, 3.0)


class TestPhasePoint:
    def test_invariants(self):
        for dim, beta in [(2, 1.0), (3, 3.0), (3, 4.0)]:
            point = phase_point(dim, beta)
            assert point.magnetization == pytest.approx(bessel_ratio(dim, point.b), rel=1e-14)
            if beta <= dim:
                assert point.b == 0.0
                assert point.regime == ("critical" if beta == dim else "subcritical")
            else:
                assert point.regime == "supercritical"
                assert point.b == pytest.approx(beta * point.magnetization, abs=1e-12)
        assert magnetization(3, 1.0) == 0.0
