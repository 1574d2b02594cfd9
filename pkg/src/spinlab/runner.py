"""Experiment orchestration: manifests, parallel chains, reports.

A RunManifest pins everything that determines an experiment's output
byte-for-byte: master seed, model parameters, chain count, sweep schedule and
the recorded statistic.  Chains are fully independent (chain c draws from the
stream seeded by (master_seed, c)), so scheduling never affects results and
outputs are merged in chain order.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaincinv, gammaln, ndtri

from . import stats as mcstats
from .limits import LimitLaw, critical_density, pair_prediction
from .model import ModelParams
from .sampler import ChainState, WStatistic, collect_pairs, run_chain
from .stats import DistanceReport, EmpiricalSummary
from .thermo import solve_fixed_point, supercritical_variance

__all__ = [
    "RunManifest",
    "ExperimentResult",
    "LimitCheckReport",
    "SteinReport",
    "STATISTICS",
    "run_manifest",
    "write_samples_csv",
    "load_samples_csv",
    "write_summary_json",
    "limit_check",
    "stein_diagnostics",
    "worker_count",
]

STATISTICS = ("subcritical", "supercritical", "critical", "norm_sq")

# Default pass thresholds for limit-check, per regime.
THRESHOLDS = {
    "subcritical": {"ks": 0.02, "moment_rel": 0.05},
    "supercritical": {"ks": 0.05, "variance_rel": 0.15},
    "critical": {"ks": 0.05},
}


@dataclass(frozen=True)
class RunManifest:
    master_seed: int
    dim: int
    beta: float
    n_sites: int
    chains: int
    burn_in_sweeps: int
    thin_sweeps: int
    samples_per_chain: int
    statistic: str
    artifact_version: str = "1"

    def __post_init__(self) -> None:
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}; choose from {STATISTICS}")
        for name in ("chains", "thin_sweeps", "samples_per_chain"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        # regime guard: reject mismatches before any work happens
        params = self.params  # validates dim/beta/n_sites
        if self.statistic == "subcritical" and params.beta >= params.dim:
            raise ValueError("subcritical statistic requires beta < dim")
        if self.statistic == "supercritical" and params.beta <= params.dim:
            raise ValueError("supercritical statistic requires beta > dim")
        if self.statistic == "critical" and params.beta != params.dim:
            raise ValueError("critical statistic requires beta == dim")

    @property
    def params(self) -> ModelParams:
        return ModelParams(dim=self.dim, beta=self.beta, n_sites=self.n_sites)

    def build_statistic(self) -> WStatistic:
        params = self.params
        if self.statistic == "subcritical":
            return WStatistic.subcritical(params)
        if self.statistic == "supercritical":
            return WStatistic.supercritical(params, solve_fixed_point(self.dim, self.beta))
        if self.statistic == "critical":
            # recorded with c_N = 1, i.e. raw |S_n|^2 / n^(3/2); the scale
            # constant is calibrated downstream and cancels in the
            # mean-standardized distributional checks
            return WStatistic.critical(params, 1.0)
        return WStatistic.norm_sq(params)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")


@dataclass
class ExperimentResult:
    manifest: RunManifest
    samples: np.ndarray          # (chains * samples_per_chain, width)
    chain_ids: np.ndarray        # (rows,)
    acceptance_rate: float
    summary: EmpiricalSummary = field(init=False)

    def __post_init__(self) -> None:
        # summary of the first component (the scalar itself for width 1)
        self.summary = mcstats.summarize(self.samples[:, 0])


def _run_single_chain(manifest_dict: dict, chain_index: int):
    manifest = RunManifest(**manifest_dict)
    state = ChainState.from_seed(manifest.params, manifest.master_seed, chain_index)
    stat = manifest.build_statistic()
    samples = run_chain(
        state, stat, manifest.samples_per_chain,
        burn_in_sweeps=manifest.burn_in_sweeps, thin_sweeps=manifest.thin_sweeps,
    )
    return samples, int(state.counters[0]), int(state.counters[1])


def worker_count(requested: int | None, chains: int) -> int:
    """Worker pool size: flag > SPINLAB_WORKERS > available parallelism, capped by chains."""
    if requested is None:
        env = os.environ.get("SPINLAB_WORKERS")
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(requested, chains))


def run_manifest(manifest: RunManifest, workers: int | None = None) -> ExperimentResult:
    """Run all chains of the manifest and merge their samples in chain order."""
    n_workers = worker_count(workers, manifest.chains)
    mdict = asdict(manifest)
    if n_workers == 1:
        results = [_run_single_chain(mdict, c) for c in range(manifest.chains)]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_single_chain, [mdict] * manifest.chains,
                                    range(manifest.chains)))
    samples = np.concatenate([r[0] for r in results], axis=0)
    chain_ids = np.repeat(np.arange(manifest.chains), manifest.samples_per_chain)
    accepted = sum(r[1] for r in results)
    proposed = sum(r[2] for r in results)
    rate = accepted / proposed if proposed else float("nan")
    return ExperimentResult(manifest=manifest, samples=samples, chain_ids=chain_ids,
                            acceptance_rate=rate)


# -- sample file format ------------------------------------------------------


def write_samples_csv(path, result: ExperimentResult) -> None:
    """One row per recorded sample: chain,index,w (or w1..wN for the vector statistic)."""
    width = result.samples.shape[1]
    cols = "w" if width == 1 else ",".join(f"w{j + 1}" for j in range(width))
    per_chain = result.manifest.samples_per_chain
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"chain,index,{cols}\n")
        for k, (row, chain) in enumerate(zip(result.samples, result.chain_ids)):
            vals = ",".join(repr(float(v)) for v in row)
            fh.write(f"{chain},{k % per_chain},{vals}\n")


def load_samples_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (samples (rows, width), chain ids)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["chain", "index"]:
            raise ValueError(f"bad sample header {header}")
        width = len(header) - 2
        rows, chains = [], []
        for line in fh:
            parts = line.strip().split(",")
            chains.append(int(parts[0]))
            rows.append([float(v) for v in parts[2:]])
    samples = np.asarray(rows, dtype=np.float64).reshape(-1, width)
    return samples, np.asarray(chains, dtype=np.int64)


def write_summary_json(path, result: ExperimentResult) -> None:
    payload = {
        "manifest": asdict(result.manifest),
        "summary": asdict(result.summary),
        "acceptance_rate": result.acceptance_rate,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- limit-check -------------------------------------------------------------


@dataclass(frozen=True)
class LimitCheckReport:
    regime: str
    distance: DistanceReport
    checks: dict
    passed: bool

    def to_json(self) -> str:
        return json.dumps(
            {"regime": self.regime, "distance": asdict(self.distance),
             "checks": self.checks, "passed": self.passed},
            indent=2, sort_keys=True)


def limit_check(samples: np.ndarray, manifest: RunManifest,
                thresholds: dict | None = None) -> LimitCheckReport:
    """Compare recorded samples against the theoretical limit law of their regime."""
    regime = manifest.statistic
    if regime not in THRESHOLDS:
        raise ValueError(f"no limit law for statistic {regime!r}")
    tol = dict(THRESHOLDS[regime])
    if thresholds:
        tol.update(thresholds)
    checks: dict = {}

    if regime == "subcritical":
        law = LimitLaw.gaussian_vector(manifest.dim)
        comp = samples[:, 0]
        ks = mcstats.ks_distance(comp, lambda x: _norm_cdf(x, 1.0))
        w1 = mcstats.wasserstein1(comp, lambda p: ndtri(p))
        norm_sq = float((samples**2).sum(axis=1).mean())
        checks["ks_component"] = _check(ks, tol["ks"])
        checks["mean_norm_sq"] = _check(abs(norm_sq / manifest.dim - 1.0), tol["moment_rel"],
                                        measured=norm_sq, target=float(manifest.dim))
    elif regime == "supercritical":
        var = supercritical_variance(manifest.dim, manifest.beta)
        law = LimitLaw.gaussian_scalar(var)
        sd = math.sqrt(var)
        w = samples[:, 0]
        ks = mcstats.ks_distance(w, lambda x: _norm_cdf(x, sd))
        w1 = mcstats.wasserstein1(w, lambda p: sd * ndtri(p))
        sample_var = float(w.var(ddof=1))
        checks["ks"] = _check(ks, tol["ks"])
        checks["variance"] = _check(abs(sample_var / var - 1.0), tol["variance_rel"],
                                    measured=sample_var, target=var)
    else:  # critical
        law = LimitLaw.critical(manifest.dim)
        w = samples[:, 0]
        mean = float(w.mean())
        if mean <= 0:
            raise ValueError("critical samples have non-positive mean")
        u = w / mean
        density = critical_density(manifest.dim)
        ks = mcstats.ks_distance(u, density.standardized_cdf)
        g = math.exp(gammaln((manifest.dim + 2.0) / 4.0) - gammaln(manifest.dim / 4.0))
        w1 = mcstats.wasserstein1(u, lambda p: np.sqrt(gammaincinv(manifest.dim / 4.0, p)) / g)
        checks["ks_standardized"] = _check(ks, tol["ks"])

    distance = DistanceReport(ks=ks, wasserstein1=w1,
                              sample_count=samples.shape[0], reference=law.describe())
    passed = all(c["passed"] for c in checks.values())
    return LimitCheckReport(regime=regime, distance=distance, checks=checks, passed=passed)


def _norm_cdf(x, sd: float):
    from scipy.special import ndtr

    x = np.asarray(x, dtype=np.float64)
    out = ndtr(x / sd)
    return out if out.ndim else float(out)


def _check(deviation: float, threshold: float, **extra) -> dict:
    entry = {"value": float(deviation), "threshold": float(threshold),
             "passed": bool(deviation <= threshold)}
    entry.update({k: float(v) for k, v in extra.items()})
    return entry


# -- stein-diagnostics --------------------------------------------------------


@dataclass(frozen=True)
class SteinReport:
    regime: str
    drift: dict
    quadratic_variation: dict
    passed: bool

    def to_json(self) -> str:
        return json.dumps(
            {"regime": self.regime, "drift": self.drift,
             "quadratic_variation": self.quadratic_variation, "passed": self.passed},
            indent=2, sort_keys=True)


def stein_diagnostics(
    params: ModelParams,
    master_seed: int,
    n_pairs: int = 50_000,
    burn_in_sweeps: int = 300,
    thin_steps: int | None = None,
    drift_se_band: float = 3.0,
    ratio_tol: float = 0.15,
) -> SteinReport:
    """Exchangeable-pair drift and quadratic-variation regressions vs theory.

    The Gaussian regimes test the fitted linear drift coefficient against its
    prediction inside a ``drift_se_band``-standard-error band, plus (above
    the transition) the fitted constant quadratic variation within
    ``ratio_tol`` relatively.  At criticality both the quadratic drift and
    the linear quadratic variation are ratio checks within ``ratio_tol``.
    """
    regime = params.regime
    state = ChainState.from_seed(params, master_seed, 0)
    if thin_steps is None:
        # aim past the slowest relaxation: ~2 sweeps off criticality,
        # ~sqrt(n)/2 sweeps at it
        sweeps = 2 if regime != "critical" else max(2, int(math.sqrt(params.n_sites) / 2))
        thin_steps = sweeps * params.n_sites

    from .sampler import gibbs_sweep  # local import to keep module load light

    gibbs_sweep(state, burn_in_sweeps)

    if regime == "critical":
        raw = run_chain(state, WStatistic.critical(params, 1.0), 4000,
                        burn_in_sweeps=0, thin_sweeps=max(1, thin_steps // params.n_sites))
        from .limits import calibrate_c_n
        c_n = calibrate_c_n(raw[:, 0])
        stat = WStatistic.critical(params, c_n)
        pred = pair_prediction(params, c_n=c_n)
    elif regime == "supercritical":
        stat = WStatistic.supercritical(params, solve_fixed_point(params.dim, params.beta))
        pred = pair_prediction(params)
    else:
        stat = WStatistic.subcritical(params)
        pred = pair_prediction(params)

    pairs = collect_pairs(state, stat, n_pairs, thin_steps)

    if regime == "critical":
        fit = mcstats.drift_regression(pairs, model="quadratic")
        alpha_ratio = fit.coefficients["alpha"] / pred.drift["alpha"]
        c_ratio = fit.coefficients["c"] / pred.drift["c"]
        drift = {
            "fit": fit.coefficients, "stderr": fit.stderr,
            "predicted": pred.drift,
            "alpha_ratio": alpha_ratio, "c_ratio": c_ratio,
            "passed": bool(abs(alpha_ratio - 1.0) <= ratio_tol),
        }
        qv_fit = mcstats.quadratic_variation_regression(pairs, "critical")
        qv_ratio = qv_fit.coefficients["k"] / pred.quadratic_variation["slope"]
        qv = {
            "fit": qv_fit.coefficients, "stderr": qv_fit.stderr,
            "predicted": pred.quadratic_variation, "ratio": qv_ratio,
            "passed": bool(abs(qv_ratio - 1.0) <= ratio_tol),
        }
    else:
        fit = mcstats.drift_regression(pairs, model="linear")
        lam_hat, se = fit.coefficients["lam"], fit.stderr["lam"]
        lam = pred.drift["lam"]
        z = (lam_hat - lam) / se if se > 0 else float("inf")
        drift = {
            "fit": fit.coefficients, "stderr": fit.stderr,
            "predicted": pred.drift, "z": z,
            "passed": bool(abs(z) <= drift_se_band),
        }
        if regime == "supercritical":
            qv_fit = mcstats.quadratic_variation_regression(pairs, "supercritical")
            qv_ratio = qv_fit.coefficients["const"] / pred.quadratic_variation["const"]
            qv = {
                "fit": qv_fit.coefficients, "stderr": qv_fit.stderr,
                "predicted": pred.quadratic_variation, "ratio": qv_ratio,
                "passed": bool(abs(qv_ratio - 1.0) <= ratio_tol),
            }
        else:
            qv = {"predicted": pred.quadratic_variation, "passed": True}

    passed = drift["passed"] and qv["passed"]
    return SteinReport(regime=regime, drift=drift, quadratic_variation=qv, passed=passed)
