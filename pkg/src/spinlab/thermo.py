"""Exact thermodynamics of the mean-field O(N) model.

The scalar functional

    Phi_beta(r) = r f(r) - (beta/2) f(r)^2
                  + log[ r^(N/2-1) / (2^(N/2-1) Gamma(N/2) I_{N/2-1}(r)) ]

with f the Bessel ratio drives everything: its minimizer over r >= 0 is the
free energy, the minimizing r is the spontaneous-magnetization fixed point
b = beta f(b), and Phi_beta - inf Phi_beta is the large-deviations rate
function of the (beta-scaled) average spin.  The log term is evaluated
through :func:`spinlab.specfun.scaled_bessel_log`, which makes
Phi_beta(0+) = 0 hold exactly instead of by cancellation.

The derivative identities used throughout:

    Phi'  = f'(r) (r - beta f(r))
    Phi'' = f''(r)(r - beta f(r)) + f'(r)(1 - beta f'(r))
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specfun import (
    bessel_ratio,
    bessel_ratio_deriv,
    scaled_bessel_log,
)

__all__ = [
    "PhasePoint",
    "TiltedDensity",
    "phi",
    "phi_deriv",
    "phi_second_deriv",
    "solve_fixed_point",
    "free_energy",
    "rate_function",
    "magnetization",
    "phase_point",
    "tilted_density",
    "supercritical_variance",
    "FIXED_POINT_TOL",
]

FIXED_POINT_TOL = 1e-13


def phi(dim: int, beta: float, r: float) -> float:
    """The scalar free-energy functional Phi_beta(r); Phi_beta(0) = 0 by limit."""
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r}")
    if r == 0.0:
        return 0.0
    f = bessel_ratio(dim, r)
    return r * f - 0.5 * beta * f * f - scaled_bessel_log(dim, r)


def phi_deriv(dim: int, beta: float, r: float) -> float:
    """d/dr Phi_beta(r) = f'(r) (r - beta f(r))."""
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r}")
    if r == 0.0:
        return 0.0
    return bessel_ratio_deriv(dim, r) * (r - beta * bessel_ratio(dim, r))


def _ratio_second_deriv(dim: int, r: float) -> float:
    n = float(dim)
    if r < 1e-5:
        return -6.0 * r / (n * n * (n + 2.0))
    f = bessel_ratio(dim, r)
    fp = bessel_ratio_deriv(dim, r)
    return -fp * ((n - 1.0) / r + 2.0 * f) + f * (n - 1.0) / (r * r)


def _quartic_coefficient(dim: int, beta: float) -> float:
    n = float(dim)
    return (-1.0 / (n * n * (n + 2.0)) - 1.0 / (8.0 * n * (n + 2.0))
            + 1.0 / (8.0 * n * n) + beta / (n**3 * (n + 2.0)))


def phi_second_deriv(dim: int, beta: float, r: float) -> float:
    """Second derivative of Phi_beta; small-r branch via the Taylor coefficients."""
    n = float(dim)
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r}")
    if r < 1e-3:
        return (1.0 - beta / n) / n + 12.0 * _quartic_coefficient(dim, beta) * r * r
    f = bessel_ratio(dim, r)
    fp = bessel_ratio_deriv(dim, r)
    return _ratio_second_deriv(dim, r) * (r - beta * f) + fp * (1.0 - beta * fp)


def solve_fixed_point(dim: int, beta: float) -> float:
    """Spontaneous-magnetization fixed point: the root of b = beta f(b).

    Returns 0 for beta <= dim; for beta > dim, the unique positive root of
    g(b) = b - beta f(b), found by bracketed Newton with bisection fallback,
    to |g(b)| <= 1e-13.  Continuous in beta with b -> 0 as beta -> dim+.
    """
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    n = float(dim)
    if beta <= n:
        return 0.0

    def g(b: float) -> float:
        return b - beta * bessel_ratio(dim, b)

    lo, hi = 1e-12, beta          # f < 1 forces the root below beta
    # near criticality b ~ sqrt((N+2)(beta-N)); far above, b ~ beta - (N-1)/2
    b = min(max(math.sqrt((n + 2.0) * (beta - n)), lo), hi)
    for _ in range(200):
        res = g(b)
        if abs(res) <= FIXED_POINT_TOL:
            return b
        if res > 0.0:
            hi = b
        else:
            lo = b
        slope = 1.0 - beta * bessel_ratio_deriv(dim, b)
        step_ok = slope != 0.0
        if step_ok:
            nxt = b - res / slope
            step_ok = lo < nxt < hi
        b = nxt if step_ok else 0.5 * (lo + hi)
    raise RuntimeError(f"fixed point iteration failed to converge at dim={dim}, beta={beta}")


def free_energy(dim: int, beta: float) -> float:
    """Free energy: 0 below the critical point beta = dim, Phi_beta(b) above it."""
    if beta <= dim:
        return 0.0
    return phi(dim, beta, solve_fixed_point(dim, beta))


def rate_function(dim: int, beta: float, r: float) -> float:
    """Large-deviations rate Phi_beta(r) - inf Phi_beta, on the tilt scale.

    The argument r lives on the beta-scaled average-spin axis, where the
    minimizer sits at the fixed point b (or 0 when beta <= dim) and the
    small-r quadratic coefficient is (1 - beta/dim) / (2 dim).
    """
    if r < 0.0:
        raise ValueError(f"r must be >= 0, got {r}")
    value = phi(dim, beta, r) - free_energy(dim, beta)
    if value < -1e-10:
        raise RuntimeError(f"rate function came out negative ({value}) at r={r}")
    return max(value, 0.0)


def magnetization(dim: int, beta: float) -> float:
    """Spontaneous magnetization f(b); zero up to the critical point."""
    return bessel_ratio(dim, solve_fixed_point(dim, beta))


@dataclass(frozen=True)
class PhasePoint:
    """Solved thermodynamic state at one (dim, beta)."""

    dim: int
    beta: float
    b: float
    magnetization: float
    free_energy: float
    regime: str


def phase_point(dim: int, beta: float) -> PhasePoint:
    b = solve_fixed_point(dim, beta)
    if beta < dim:
        regime = "subcritical"
    elif beta == dim:
        regime = "critical"
    else:
        regime = "supercritical"
    return PhasePoint(
        dim=dim,
        beta=beta,
        b=b,
        magnetization=bessel_ratio(dim, b),
        free_energy=free_energy(dim, beta),
        regime=regime,
    )


@dataclass(frozen=True)
class TiltedDensity:
    """Exponentially tilted polar density a * exp(b x) (1-x^2)^((dim-3)/2) on [-1, 1].

    This is the one-dimensional family the entropy minimization reduces to;
    a is fixed so the weighted integral is exactly 1, and the weighted mean
    equals the Bessel ratio f(b).
    """

    dim: int
    tilt: float
    normalizer: float

    def log_unnormalized(self, x: float) -> float:
        # weight (1-x^2)^((dim-3)/2) diverges at the endpoints for dim = 2;
        # quadrature against this density should substitute x = cos(theta)
        return self.tilt * x + 0.5 * (self.dim - 3.0) * math.log1p(-x * x)

    def pdf(self, x: float) -> float:
        if not -1.0 < x < 1.0:
            return 0.0
        return self.normalizer * math.exp(self.log_unnormalized(x))

    @property
    def mean(self) -> float:
        return bessel_ratio(self.dim, self.tilt)


def tilted_density(dim: int, b: float) -> TiltedDensity:
    """Tilted density with parameter b >= 0; b = 0 is the uniform polar law.

    The closed form for the normalizer,

        a = b^(N/2-1) / (sqrt(pi) Gamma((N-1)/2) 2^(N/2-1) I_{N/2-1}(b)),

    is evaluated through the scaled Bessel series so the b -> 0 limit
    Gamma(N/2) / (sqrt(pi) Gamma((N-1)/2)) comes out exactly.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if b < 0.0:
        raise ValueError(f"b must be >= 0, got {b}")
    flat = math.gamma(0.5 * dim) / (math.sqrt(math.pi) * math.gamma(0.5 * (dim - 1.0)))
    a = flat * math.exp(-scaled_bessel_log(dim, b))
    return TiltedDensity(dim=dim, tilt=b, normalizer=a)


def supercritical_variance(dim: int, beta: float) -> float:
    """Asymptotic variance of the squared-length fluctuation statistic.

        Var = 4 beta^2 / ((1 - beta f'(b)) b^2) * [1 - (N-1) f(b)/b - f(b)^2]

    The bracket equals f'(b) by the derivative identity, so it is strictly
    positive, and beta f'(b) < 1 at the fixed point keeps the prefactor
    finite; both facts are asserted.
    """
    if beta <= dim:
        raise ValueError(f"supercritical variance needs beta > dim, got beta={beta}, dim={dim}")
    b = solve_fixed_point(dim, beta)
    f = bessel_ratio(dim, b)
    bracket = 1.0 - (dim - 1.0) * f / b - f * f
    slope = beta * bessel_ratio_deriv(dim, b)
    if bracket <= 0.0 or slope >= 1.0:
        raise RuntimeError(
            f"degenerate supercritical variance at dim={dim}, beta={beta}: "
            f"bracket={bracket}, beta*f'(b)={slope}"
        )
    return 4.0 * beta**2 * bracket / ((1.0 - slope) * b**2)
