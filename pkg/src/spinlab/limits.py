"""The three total-spin statistics, their limit laws, and the Stein machinery.

Away from criticality the limits are Gaussian: a standard normal vector for
the scaled total spin below the transition, and a scalar normal with the
supercritical variance for the squared-length fluctuation above it.  At the
critical point the squared length, scaled by n^(3/2), converges to the
distribution with density

    p(t) = (1/z) t^((N-2)/2) exp(-k t^2),    k = 1 / (4 N^2 (N+2)),

whose characterizing Stein operator is
[T_p f](x) = x f'(x) + (N/2 - 2 k x^2) f(x).

The scale constant attached to the critical statistic is treated as an
empirical calibration (reciprocal sample mean), and all distributional
comparisons in the critical regime are made on mean-standardized variables,
which the scale family makes parameter-free.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammainc, gammaln

from .model import ModelParams, SpinConfiguration

__all__ = [
    "LimitLaw",
    "CriticalDensity",
    "PairPrediction",
    "pair_prediction",
    "QuadratureError",
    "SteinSolution",
    "critical_k_tilde",
    "critical_density",
    "critical_pdf",
    "critical_cdf",
    "w_subcritical",
    "w_supercritical",
    "w_critical",
    "stein_operator",
    "stein_solve",
    "calibrate_c_n",
]


class QuadratureError(RuntimeError):
    """Raised when independent integral routes disagree beyond tolerance."""


@dataclass(frozen=True)
class PairPrediction:
    """Predicted exchangeable-pair regression coefficients for one regime.

    drift: for the Gaussian regimes the linear coefficient lam in
    E[W' - W | W] = -lam W; at criticality the coefficients (alpha, c) in
    E[W' - W | W] = alpha (1 - c W^2).

    quadratic_variation: the constant E[(W' - W)^2 | W] = qv in the
    supercritical regime, or the slope in E[(W' - W)^2 | W] = qv * W at
    criticality (2 lam per component below the transition).

    The quadratic statistics are built on |S_n|^2, and one resample moves
    |S_n|^2 by 2 <leave-one-out sum, spin change>; that factor of two makes
    the critical drift coefficient 2 N k and the critical quadratic
    variation slope 8 k for k = c_N / (N n^(3/2)), which is also the unique
    choice consistent with the stationary critical density.
    """

    regime: str
    drift: dict
    quadratic_variation: dict


def critical_k_tilde(dim: int) -> float:
    """Gaussian-tail constant of the critical density: 1 / (4 N^2 (N+2))."""
    return 1.0 / (4.0 * dim * dim * (dim + 2.0))


@dataclass(frozen=True)
class CriticalDensity:
    """Density p(t) = (1/z) t^((N-2)/2) exp(-k_tilde t^2) on t >= 0."""

    dim: int
    k_tilde: float
    z: float

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        pos = t > 0.0
        out[pos] = np.exp(
            0.5 * (self.dim - 2.0) * np.log(t[pos]) - self.k_tilde * t[pos] ** 2
        ) / self.z
        if self.dim == 2:
            out[t == 0.0] = 1.0 / self.z
        return out if out.ndim else float(out)

    def cdf(self, t):
        """P(X <= t) = regularized lower incomplete gamma at (N/4, k t^2)."""
        t = np.asarray(t, dtype=np.float64)
        out = np.where(t > 0.0, gammainc(self.dim / 4.0, self.k_tilde * np.maximum(t, 0.0) ** 2), 0.0)
        return out if out.ndim else float(out)

    def moment(self, m: int) -> float:
        """E X^m = k^(-m/2) Gamma(N/4 + m/2) / Gamma(N/4), closed form."""
        q = self.dim / 4.0
        return self.k_tilde ** (-0.5 * m) * math.exp(gammaln(q + 0.5 * m) - gammaln(q))

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def second_moment(self) -> float:
        return self.moment(2)

    def standardized_cdf(self, u):
        """CDF of X / E[X]; free of k_tilde because the family is a scale family."""
        g = math.exp(gammaln((self.dim + 2.0) / 4.0) - gammaln(self.dim / 4.0))
        u = np.asarray(u, dtype=np.float64)
        out = np.where(u > 0.0, gammainc(self.dim / 4.0, (g * np.maximum(u, 0.0)) ** 2), 0.0)
        return out if out.ndim else float(out)


def critical_density(dim: int) -> CriticalDensity:
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    k = critical_k_tilde(dim)
    z = 0.5 * k ** (-dim / 4.0) * math.gamma(dim / 4.0)
    return CriticalDensity(dim=dim, k_tilde=k, z=z)


def critical_pdf(dim: int, t: float) -> float:
    """p(t) for t >= 0, 0 for t < 0, with the closed-form normalizer."""
    return critical_density(dim).pdf(t)


def critical_cdf(dim: int, t: float) -> float:
    return critical_density(dim).cdf(t)


@dataclass(frozen=True)
class LimitLaw:
    """Tagged theoretical limit: gaussian_vector | gaussian_scalar | critical."""

    kind: str
    dim: int = 0
    variance: float = 1.0

    @classmethod
    def gaussian_vector(cls, dim: int) -> "LimitLaw":
        return cls(kind="gaussian_vector", dim=dim)

    @classmethod
    def gaussian_scalar(cls, variance: float) -> "LimitLaw":
        if variance <= 0.0:
            raise ValueError(f"variance must be positive, got {variance}")
        return cls(kind="gaussian_scalar", variance=variance)

    @classmethod
    def critical(cls, dim: int) -> "LimitLaw":
        return cls(kind="critical", dim=dim)

    def describe(self) -> str:
        if self.kind == "gaussian_vector":
            return f"standard Gaussian vector in R^{self.dim}"
        if self.kind == "gaussian_scalar":
            return f"centered Gaussian, variance {self.variance:.6g}"
        k = critical_k_tilde(self.dim)
        return f"mean-standardized critical law, dim {self.dim} (k_tilde={k:.6g})"


# -- W statistics -----------------------------------------------------------


def w_subcritical(config: SpinConfiguration, params: ModelParams) -> np.ndarray:
    """Vector statistic sqrt((N - beta)/n) * S_n; requires beta < N."""
    if params.beta >= params.dim:
        raise ValueError(f"subcritical statistic needs beta < {params.dim}, got {params.beta}")
    return math.sqrt((params.dim - params.beta) / params.n_sites) * config.total_spin


def w_supercritical(config: SpinConfiguration, params: ModelParams, b: float) -> float:
    """Scalar statistic sqrt(n) (beta^2 |S_n|^2 / (n^2 b^2) - 1); requires beta > N."""
    if params.beta <= params.dim:
        raise ValueError(f"supercritical statistic needs beta > {params.dim}, got {params.beta}")
    n = params.n_sites
    s2 = float(config.total_spin @ config.total_spin)
    return math.sqrt(n) * (params.beta**2 * s2 / (n * n * b * b) - 1.0)


def w_critical(config: SpinConfiguration, c_n: float) -> float:
    """Scalar statistic c_N |S_n|^2 / n^(3/2) for the critical point beta = N."""
    if c_n <= 0.0:
        raise ValueError(f"c_n must be positive, got {c_n}")
    n = config.n_sites
    s2 = float(config.total_spin @ config.total_spin)
    return c_n * s2 / n**1.5


def calibrate_c_n(samples: np.ndarray) -> float:
    """Scale constant making the empirical mean of the critical statistic 1.

    ``samples`` are equilibrium values of |S_n|^2 / n^(3/2); at least 10^3 of
    them, with a strictly positive mean.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < 1000:
        raise ValueError(f"need >= 1000 equilibrium samples, got {samples.size}")
    mean = float(samples.mean())
    if mean <= 0.0:
        raise ValueError(f"degenerate samples: mean {mean} is not positive")
    return 1.0 / mean


def pair_prediction(params: ModelParams, c_n: float | None = None) -> PairPrediction:
    """Theoretical drift / quadratic-variation coefficients for the regime of ``params``.

    Subcritical:    lam = (1 - beta/N) / n,        qv = 2 lam (per component).
    Supercritical:  lam = (1 - beta f'(b)) / n,    qv = 2 lam Var.
    Critical:       alpha = 2 N k, c = N / ((N+2) c_N^2), qv slope = 8 k,
                    with k = c_N / (N n^(3/2)); requires the calibrated c_N.
    """
    from .specfun import bessel_ratio_deriv
    from .thermo import solve_fixed_point, supercritical_variance

    n = params.n_sites
    dim = params.dim
    if params.regime == "subcritical":
        lam = (1.0 - params.beta / dim) / n
        return PairPrediction(
            regime="subcritical",
            drift={"lam": lam},
            quadratic_variation={"const": 2.0 * lam},
        )
    if params.regime == "supercritical":
        b = solve_fixed_point(dim, params.beta)
        lam = (1.0 - params.beta * bessel_ratio_deriv(dim, b)) / n
        return PairPrediction(
            regime="supercritical",
            drift={"lam": lam},
            quadratic_variation={"const": 2.0 * lam * supercritical_variance(dim, params.beta)},
        )
    if c_n is None or c_n <= 0.0:
        raise ValueError("critical predictions need the calibrated positive c_N")
    k = c_n / (dim * n**1.5)
    return PairPrediction(
        regime="critical",
        drift={"alpha": 2.0 * dim * k, "c": dim / ((dim + 2.0) * c_n**2)},
        quadratic_variation={"slope": 8.0 * k},
    )


# -- Stein operator and equation -------------------------------------------


def stein_operator(
    dim: int,
    f: Callable[[float], float],
    x: float,
    f_prime: Callable[[float], float] | None = None,
) -> float:
    """Characterizing operator [T_p f](x) = x f'(x) + (N/2 - 2 k x^2) f(x).

    If ``f_prime`` is omitted the derivative is taken by central differences,
    which is enough for smooth test functions but slower and less accurate.
    """
    if x <= 0.0:
        raise ValueError(f"operator is defined on x > 0, got {x}")
    k = critical_k_tilde(dim)
    if f_prime is not None:
        df = f_prime(x)
    else:
        h = 1e-6 * max(1.0, abs(x))
        df = (f(x + h) - f(x - h)) / (2.0 * h)
    return x * df + (0.5 * dim - 2.0 * k * x * x) * f(x)


@dataclass(frozen=True)
class SteinSolution:
    """Numerical solution f_h of the Stein equation T_p f = h - E h(X).

    ``grid``/``values`` hold the solution on a geometric grid; ``evaluate``
    recomputes it anywhere from the integral representation (left of the
    split point from 0, right of it from infinity, for stability where the
    density is tiny).
    """

    dim: int
    grid: np.ndarray
    values: np.ndarray
    split: float
    expectation: float
    _left: Callable[[float], float]
    _right: Callable[[float], float]

    def evaluate(self, t: float) -> float:
        if t <= 0.0:
            raise ValueError(f"solution is defined on t > 0, got {t}")
        return self._left(t) if t <= self.split else self._right(t)

    def __call__(self, t: float) -> float:
        return self.evaluate(t)


def stein_solve(
    dim: int,
    h: Callable[[float], float],
    grid_size: int = 64,
    agreement_tol: float = 1e-6,
) -> SteinSolution:
    """Solve T_p f = h - E h(X) for the critical law of dimension ``dim``.

    f_h(t) = (1/(t p(t))) * integral_0^t (h - Eh) p ds, equivalently
    -(1/(t p(t))) * integral_t^inf of the same integrand.  Both forms are
    evaluated on the grid; disagreement beyond ``agreement_tol`` raises
    :class:`QuadratureError`.  The grid is geometric on (0, t_max] with
    t_max = mode + 8 standard deviations of p.
    """
    density = critical_density(dim)
    k = density.k_tilde
    sd = math.sqrt(density.second_moment - density.mean**2)
    mode = math.sqrt(max(0.0, (dim - 2.0) / (4.0 * k)))
    t_max = mode + 8.0 * sd
    upper = t_max + 6.0 * sd
    # switch between the two integral representations where t p(t) peaks,
    # which keeps both branches away from the vanishing tails
    split = math.sqrt(dim / (4.0 * k))
    # declared breakpoints force adaptive subdivision everywhere, so kinks or
    # jumps in h at unknown positions cannot be silently stepped over
    breaks = np.geomspace(upper * 1e-4, upper * 0.999, 80)

    def _quad(f, lo: float, hi: float) -> float:
        inner = [b for b in breaks if lo < b < hi]
        # the representation-agreement check below is the accuracy arbiter, so
        # roundoff-level convergence complaints from quad are not interesting
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(f, lo, hi, points=inner,
                                  limit=max(50, 2 * len(inner)),
                                  epsabs=1e-13, epsrel=1e-11)[0]

    expectation = _quad(lambda s: h(s) * density.pdf(s), 0.0, upper)

    def centered(s: float) -> float:
        return (h(s) - expectation) * density.pdf(s)

    def left(t: float) -> float:
        return _quad(centered, 0.0, t) / (t * density.pdf(t))

    def right(t: float) -> float:
        return -_quad(centered, t, upper) / (t * density.pdf(t))

    grid = np.geomspace(t_max * 1e-3, t_max, grid_size)
    values = np.empty(grid_size)
    for i, t in enumerate(grid):
        lv, rv = left(t), right(t)
        if abs(lv - rv) > agreement_tol * max(1.0, abs(lv), abs(rv)):
            raise QuadratureError(
                f"integral representations disagree at t={t}: {lv} vs {rv}"
            )
        values[i] = lv if t <= split else rv
    return SteinSolution(
        dim=dim, grid=grid, values=values, split=split,
        expectation=expectation, _left=left, _right=right,
    )
