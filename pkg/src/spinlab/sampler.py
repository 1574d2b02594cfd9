"""Glauber dynamics targeting the Gibbs measure, and exchangeable pairs.

Chains are independent units of work: each owns its configuration and its
RNG stream, derived from a 64-bit master seed by a documented splitting rule
(:func:`chain_rng`), so runs are reproducible regardless of scheduling.  The
hot loops live in :mod:`spinlab._kernels`; this module provides the typed
surface used by experiments and tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import ModelParams, SpinConfiguration

__all__ = [
    "ChainState",
    "ExchangeablePairSample",
    "PairBatch",
    "WStatistic",
    "chain_rng",
    "uniform_sphere",
    "vmf_sample",
    "glauber_step",
    "gibbs_sweep",
    "make_pair",
    "run_chain",
    "collect_pairs",
    "DEFAULT_BURN_IN_SWEEPS",
    "DEFAULT_THIN_SWEEPS",
]

# Pilot autocorrelation studies; both are configurable everywhere they appear.
DEFAULT_BURN_IN_SWEEPS = 200
DEFAULT_THIN_SWEEPS = 1


def chain_rng(master_seed: int, chain_index: int) -> np.random.Generator:
    """Stream for chain ``chain_index``: PCG64 seeded by SeedSequence((seed, index))."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((master_seed, chain_index))))


@dataclass(frozen=True)
class WStatistic:
    """Selector for the recorded statistic: kernel code plus its constant.

    regime is one of subcritical / supercritical / critical / norm_sq; width
    is dim for the vector statistic and 1 otherwise.
    """

    regime: str
    code: int
    const: float
    width: int

    @classmethod
    def subcritical(cls, params: ModelParams) -> "WStatistic":
        if params.beta >= params.dim:
            raise ValueError(f"subcritical statistic requires beta < {params.dim}")
        pref = np.sqrt((params.dim - params.beta) / params.n_sites)
        return cls("subcritical", _kernels.STAT_SUBCRITICAL, pref, params.dim)

    @classmethod
    def supercritical(cls, params: ModelParams, b: float) -> "WStatistic":
        if params.beta <= params.dim:
            raise ValueError(f"supercritical statistic requires beta > {params.dim}")
        if b <= 0:
            raise ValueError("supercritical statistic requires the positive fixed point b")
        pre = params.beta**2 / (params.n_sites**2 * b**2)
        return cls("supercritical", _kernels.STAT_SUPERCRITICAL, pre, 1)

    @classmethod
    def critical(cls, params: ModelParams, c_n: float = 1.0) -> "WStatistic":
        if params.beta != params.dim:
            raise ValueError(f"critical statistic requires beta == {params.dim}")
        return cls("critical", _kernels.STAT_CRITICAL, c_n, 1)

    @classmethod
    def norm_sq(cls, params: ModelParams) -> "WStatistic":
        return cls("norm_sq", _kernels.STAT_NORM_SQ, 1.0, 1)


@dataclass
class ChainState:
    """One chain: configuration + private RNG stream + sweep counter."""

    config: SpinConfiguration
    params: ModelParams
    rng: np.random.Generator
    sweep_count: int = 0
    # accepted draws, proposals, replacements-since-refresh
    counters: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.int64))

    @classmethod
    def from_seed(cls, params: ModelParams, master_seed: int, chain_index: int = 0) -> "ChainState":
        rng = chain_rng(master_seed, chain_index)
        config = SpinConfiguration.random(params.n_sites, params.dim, rng)
        return cls(config=config, params=params, rng=rng)

    @property
    def acceptance_rate(self) -> float:
        if self.counters[1] == 0:
            return float("nan")
        return float(self.counters[0]) / float(self.counters[1])


@dataclass(frozen=True)
class ExchangeablePairSample:
    """Statistic evaluated before/after one single-site resample of the same configuration."""

    w_before: np.ndarray | float
    w_after: np.ndarray | float
    regime: str


@dataclass(frozen=True)
class PairBatch:
    """Column-stacked exchangeable pairs, the bulk form used by regressions."""

    w_before: np.ndarray  # (n_pairs, width)
    w_after: np.ndarray
    regime: str

    def __len__(self) -> int:
        return self.w_before.shape[0]

    def __iter__(self):
        for wb, wa in zip(self.w_before, self.w_after):
            yield ExchangeablePairSample(wb, wa, self.regime)


def uniform_sphere(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) on the unit sphere S^{dim-1}."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    out = np.empty((size or 1, dim))
    _kernels._uniform_batch(rng, out)
    return out[0] if size is None else out


def vmf_sample(
    mu: np.ndarray,
    kappa: float,
    rng: np.random.Generator,
    size: int | None = None,
    counters: np.ndarray | None = None,
) -> np.ndarray:
    """von Mises-Fisher draw(s) with density prop. to exp(kappa <theta, mu>).

    Tangent-normal decomposition: the polar component t along mu follows
    exp(kappa t)(1-t^2)^((dim-3)/2) and is drawn by Ulrich-Wood envelope
    rejection; the tangential part is uniform on the equator sphere.
    kappa = 0 reduces exactly to the uniform distribution.
    """
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
        raise ValueError("mu must be a unit vector")
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if counters is None:
        counters = np.zeros(3, dtype=np.int64)
    out = np.empty((size or 1, mu.shape[0]))
    _kernels._vmf_batch(rng, mu, float(kappa), out, counters)
    return out[0] if size is None else out


def glauber_step(state: ChainState) -> ChainState:
    """Resample one uniformly random site from its conditional law."""
    _kernels.random_scan_steps(
        state.rng, state.config.spins, state.config.total_spin,
        state.params.beta, 1, state.counters,
    )
    return state


def gibbs_sweep(state: ChainState, n_sweeps: int = 1) -> ChainState:
    """n_sweeps systematic site-order sweeps (n single-site updates each)."""
    _kernels.sweep(
        state.rng, state.config.spins, state.config.total_spin,
        state.params.beta, n_sweeps, state.counters,
    )
    state.sweep_count += n_sweeps
    return state


def _evaluate(stat: WStatistic, config: SpinConfiguration, n_sites: int):
    row = np.empty(stat.width)
    _kernels._write_statistic(config.total_spin, n_sites, stat.code, stat.const, row)
    return row.copy() if stat.width > 1 else float(row[0])


def make_pair(state: ChainState, statistic: WStatistic) -> ExchangeablePairSample:
    """Evaluate the statistic before/after one Glauber step on a copy.

    The original configuration is untouched; the state's RNG advances.  The
    caller is responsible for having equilibrated the chain first.
    """
    n = state.params.n_sites
    w_before = _evaluate(statistic, state.config, n)
    scratch = state.config.copy()
    _kernels.random_scan_steps(
        state.rng, scratch.spins, scratch.total_spin,
        state.params.beta, 1, state.counters,
    )
    w_after = _evaluate(statistic, scratch, n)
    return ExchangeablePairSample(w_before, w_after, statistic.regime)


def run_chain(
    state: ChainState,
    statistic: WStatistic,
    n_samples: int,
    burn_in_sweeps: int = DEFAULT_BURN_IN_SWEEPS,
    thin_sweeps: int = DEFAULT_THIN_SWEEPS,
) -> np.ndarray:
    """Burn in, then record ``n_samples`` values of the statistic.

    Returns an (n_samples, width) array; one row is written after every
    ``thin_sweeps`` systematic sweeps.
    """
    if n_samples < 1 or thin_sweeps < 1 or burn_in_sweeps < 0:
        raise ValueError("n_samples and thin_sweeps must be >= 1, burn_in_sweeps >= 0")
    out = np.empty((n_samples, statistic.width))
    _kernels.run_chain(
        state.rng, state.config.spins, state.config.total_spin, state.params.beta,
        burn_in_sweeps, thin_sweeps, statistic.code, statistic.const, out, state.counters,
    )
    state.sweep_count += burn_in_sweeps + n_samples * thin_sweeps
    return out


def collect_pairs(
    state: ChainState,
    statistic: WStatistic,
    n_pairs: int,
    steps_between: int,
) -> PairBatch:
    """Record exchangeable pairs along the random-scan chain at equilibrium.

    Every recorded update is kept, so the chain advances under the same
    dynamics whose pairs it reports; steps_between extra updates between
    records decorrelate consecutive pairs.
    """
    if n_pairs < 1 or steps_between < 0:
        raise ValueError("n_pairs must be >= 1 and steps_between >= 0")
    w_before = np.empty((n_pairs, statistic.width))
    w_after = np.empty((n_pairs, statistic.width))
    _kernels.collect_pairs(
        state.rng, state.config.spins, state.config.total_spin, state.params.beta,
        steps_between, statistic.code, statistic.const, w_before, w_after, state.counters,
    )
    return PairBatch(w_before, w_after, statistic.regime)
