"""Distributional distances, Monte Carlo error control, and pair regressions.

These turn the limit theorems into pass/fail numbers: one-sample KS and
quantile-coupled Wasserstein-1 against a reference law (W1 upper-bounds the
bounded-Lipschitz distance the theory is stated in), integrated
autocorrelation time and batch means for honest error bars, and least-squares
regressions of the exchangeable-pair drift and quadratic variation against
their predicted coefficients.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "EmpiricalSummary",
    "DistanceReport",
    "RegressionResult",
    "IllConditionedError",
    "ks_distance",
    "wasserstein1",
    "drift_regression",
    "quadratic_variation_regression",
    "autocorrelation_time",
    "effective_sample_size",
    "batch_means_stderr",
    "binned_means",
    "summarize",
]

_BOOTSTRAP_DEFAULT = 200


class IllConditionedError(RuntimeError):
    """Regression design too degenerate to fit."""


@dataclass(frozen=True)
class EmpiricalSummary:
    sample_count: int
    mean: float
    variance: float
    skewness: float
    autocorr_time: float
    effective_sample_size: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass(frozen=True)
class DistanceReport:
    ks: float
    wasserstein1: float
    sample_count: int
    reference: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.ks <= 1.0:
            raise ValueError(f"ks distance {self.ks} outside [0, 1]")
        if self.wasserstein1 < 0.0:
            raise ValueError(f"wasserstein1 {self.wasserstein1} negative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _apply(fn, xs: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fn(xs), dtype=np.float64)
        if out.shape == xs.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.asarray([fn(float(x)) for x in xs], dtype=np.float64)


def ks_distance(samples: np.ndarray, cdf) -> float:
    """sup over the sample points of |empirical CDF - reference CDF|.

    The empirical CDF is evaluated right-continuously at the order
    statistics, F_hat(x_(i)) = i/n; the convention makes a point mass match
    its own CDF step exactly.
    """
    xs = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if xs.size < 2:
        raise ValueError(f"need >= 2 samples, got {xs.size}")
    ref = _apply(cdf, xs)
    if np.any(np.diff(ref) < -1e-12):
        raise ValueError("reference cdf is not monotone on the sample points")
    # right-continuous empirical CDF; searchsorted handles tied samples
    emp = np.searchsorted(xs, xs, side="right") / xs.size
    return float(np.abs(emp - ref).max())


def wasserstein1(samples: np.ndarray, quantile) -> float:
    """W1 by quantile coupling: mean_k |x_(k) - Q((k - 1/2)/n)|."""
    xs = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if xs.size < 1:
        raise ValueError("need >= 1 sample")
    probs = (np.arange(xs.size) + 0.5) / xs.size
    ref = _apply(quantile, probs)
    return float(np.abs(xs - ref).mean())


# -- exchangeable-pair regressions ------------------------------------------


def _pair_arrays(pairs):
    """Accept a PairBatch, an iterable of pair samples, or a (w, w') tuple."""
    if hasattr(pairs, "w_before"):
        wb, wa = np.asarray(pairs.w_before), np.asarray(pairs.w_after)
    elif isinstance(pairs, tuple) and len(pairs) == 2:
        wb, wa = np.asarray(pairs[0]), np.asarray(pairs[1])
    else:
        items = list(pairs)
        wb = np.asarray([np.atleast_1d(p.w_before) for p in items])
        wa = np.asarray([np.atleast_1d(p.w_after) for p in items])
    wb = wb.reshape(wb.shape[0], -1).astype(np.float64)
    wa = wa.reshape(wa.shape[0], -1).astype(np.float64)
    if wb.shape != wa.shape:
        raise ValueError(f"mismatched pair shapes {wb.shape} vs {wa.shape}")
    return wb, wa


@dataclass(frozen=True)
class RegressionResult:
    model: str
    coefficients: dict
    stderr: dict
    residual_tstat: float
    sample_count: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _bootstrap_se(fit, n_pairs: int, rng: np.random.Generator, n_boot: int):
    reps = []
    for _ in range(n_boot):
        idx = rng.integers(0, n_pairs, size=n_pairs)
        reps.append(fit(idx))
    reps = np.asarray(reps, dtype=np.float64)
    return reps.std(axis=0, ddof=1)


def drift_regression(
    pairs,
    model: str = "linear",
    n_boot: int = _BOOTSTRAP_DEFAULT,
    seed: int = 0,
) -> RegressionResult:
    """Least squares for the conditional drift E[W' - W | W].

    linear:    fit -lambda * W through the origin (components pooled for the
               vector statistic); coefficient key "lam".
    quadratic: fit alpha * (1 - c W^2), i.e. ordinary least squares on
               (1, W^2); coefficient keys "alpha" and "c".

    Standard errors are bootstrap over pairs, so pairs should be roughly
    decorrelated (thin the recording chain accordingly).
    """
    wb, wa = _pair_arrays(pairs)
    dw = wa - wb
    m = wb.shape[0]
    if m < 10:
        raise ValueError(f"need more pairs for a regression, got {m}")
    rng = np.random.default_rng(seed)

    if model == "linear":
        denom = float((wb * wb).sum())
        if denom <= 0.0 or not np.isfinite(denom):
            raise IllConditionedError("W has no variation to regress on")

        def fit(idx):
            b, d = wb[idx], dw[idx]
            return -float((b * d).sum()) / float((b * b).sum())

        lam = -float((wb * dw).sum()) / denom
        se = _bootstrap_se(fit, m, rng, n_boot)
        resid = (dw + lam * wb).ravel()
        tstat = float(resid.mean() / (resid.std(ddof=1) / np.sqrt(resid.size)))
        return RegressionResult(
            model="linear",
            coefficients={"lam": lam},
            stderr={"lam": float(se)},
            residual_tstat=tstat,
            sample_count=m,
        )

    if model == "quadratic":
        if wb.shape[1] != 1:
            raise ValueError("quadratic drift model expects a scalar statistic")
        w = wb[:, 0]
        y = dw[:, 0]
        design = np.column_stack([np.ones(m), w * w])

        def solve(idx):
            d, yy = design[idx], y[idx]
            gram = d.T @ d
            if np.linalg.cond(gram) > 1e12:
                raise IllConditionedError("quadratic design is ill conditioned")
            p, q = np.linalg.solve(gram, d.T @ yy)
            if p == 0.0:
                raise IllConditionedError("degenerate quadratic fit: alpha = 0")
            return np.array([p, -q / p])

        alpha, c = solve(np.arange(m))
        se = _bootstrap_se(solve, m, rng, n_boot)
        resid = y - alpha * (1.0 - c * w * w)
        tstat = float(resid.mean() / (resid.std(ddof=1) / np.sqrt(m)))
        return RegressionResult(
            model="quadratic",
            coefficients={"alpha": float(alpha), "c": float(c)},
            stderr={"alpha": float(se[0]), "c": float(se[1])},
            residual_tstat=tstat,
            sample_count=m,
        )

    raise ValueError(f"unknown drift model {model!r}")


def quadratic_variation_regression(
    pairs,
    regime: str,
    n_boot: int = _BOOTSTRAP_DEFAULT,
    seed: int = 0,
) -> RegressionResult:
    """Least squares for E[(W' - W)^2 | W].

    critical:      fit k * W through the origin; coefficient key "k".
    supercritical: fit a constant; coefficient key "const".
    """
    wb, wa = _pair_arrays(pairs)
    if wb.shape[1] != 1:
        raise ValueError("quadratic variation regression expects a scalar statistic")
    w = wb[:, 0]
    y = (wa[:, 0] - w) ** 2
    m = w.size
    if m < 10:
        raise ValueError(f"need more pairs for a regression, got {m}")
    rng = np.random.default_rng(seed)

    if regime == "critical":
        denom = float((w * w).sum())
        if denom <= 0.0:
            raise IllConditionedError("W has no variation to regress on")

        def fit(idx):
            return float((w[idx] * y[idx]).sum()) / float((w[idx] * w[idx]).sum())

        k = fit(np.arange(m))
        se = _bootstrap_se(fit, m, rng, n_boot)
        resid = y - k * w
        tstat = float(resid.mean() / (resid.std(ddof=1) / np.sqrt(m)))
        return RegressionResult(
            model="qv_critical",
            coefficients={"k": k},
            stderr={"k": float(se)},
            residual_tstat=tstat,
            sample_count=m,
        )

    if regime == "supercritical":
        const = float(y.mean())

        def fit(idx):
            return float(y[idx].mean())

        se = _bootstrap_se(fit, m, rng, n_boot)
        resid = y - const
        tstat = 0.0
        return RegressionResult(
            model="qv_supercritical",
            coefficients={"const": const},
            stderr={"const": float(se)},
            residual_tstat=tstat,
            sample_count=m,
        )

    raise ValueError(f"unknown regime {regime!r} for quadratic variation")


# -- autocorrelation and error bars -----------------------------------------


def _autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = x.size
    xc = x - x.mean()
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1].real / n
    return acov


def autocorrelation_time(series: np.ndarray, window_factor: float = 5.0) -> float:
    """Integrated autocorrelation time tau = 1/2 + sum_t rho(t).

    The sum is truncated by the standard self-consistent window: the smallest
    M with M >= window_factor * tau_hat(M).  Returns nan (with a warning) for
    a constant series; warns and returns the best available estimate when the
    series is too short for the window rule to trigger.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < 8:
        raise ValueError(f"series too short for an autocorrelation estimate: {x.size}")
    max_lag = x.size // 3
    acov = _autocovariance(x, max_lag)
    if acov[0] <= 0.0:
        warnings.warn("constant series: autocorrelation time is undefined", RuntimeWarning)
        return float("nan")
    rho = acov / acov[0]
    tau = 0.5
    for m in range(1, max_lag + 1):
        tau += rho[m]
        if m >= window_factor * tau:
            return float(max(tau, 0.5))
    warnings.warn(
        f"window rule not satisfied within {max_lag} lags; series may be too short",
        RuntimeWarning,
    )
    return float(max(tau, 0.5))


def effective_sample_size(series: np.ndarray) -> float:
    x = np.asarray(series, dtype=np.float64).ravel()
    tau = autocorrelation_time(x)
    return x.size / (2.0 * tau)


def batch_means_stderr(series: np.ndarray, batch_len: int | None = None) -> float:
    """Standard error of the mean by batch means; default batch length 10 tau."""
    x = np.asarray(series, dtype=np.float64).ravel()
    if batch_len is None:
        tau = autocorrelation_time(x)
        if not np.isfinite(tau):
            return 0.0
        batch_len = max(1, int(np.ceil(10.0 * tau)))
    n_batches = x.size // batch_len
    if n_batches < 2:
        raise ValueError(
            f"series of {x.size} points gives {n_batches} batches of length {batch_len}"
        )
    means = x[: n_batches * batch_len].reshape(n_batches, batch_len).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def binned_means(x: np.ndarray, y: np.ndarray, bins: int = 50):
    """Equal-count bin means of y against x; the regressions' visual cross-check."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError("x and y must have matching lengths")
    order = np.argsort(x, kind="stable")
    edges = np.linspace(0, x.size, bins + 1).astype(int)
    centers = np.empty(bins)
    means = np.empty(bins)
    for i in range(bins):
        sel = order[edges[i]: edges[i + 1]]
        centers[i] = x[sel].mean()
        means[i] = y[sel].mean()
    return centers, means


def summarize(series: np.ndarray) -> EmpiricalSummary:
    """Moments plus autocorrelation diagnostics for one scalar sample stream."""
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("need >= 2 samples to summarize")
    mean = float(x.mean())
    var = float(x.var(ddof=1))
    if var > 0.0:
        skew = float(((x - mean) ** 3).mean() / var ** 1.5)
    else:
        skew = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        tau = autocorrelation_time(x) if x.size >= 8 else float("nan")
    ess = x.size / (2.0 * tau) if np.isfinite(tau) and tau > 0 else float("nan")
    return EmpiricalSummary(
        sample_count=x.size,
        mean=mean,
        variance=var,
        skewness=skew,
        autocorr_time=tau,
        effective_sample_size=ess,
    )
