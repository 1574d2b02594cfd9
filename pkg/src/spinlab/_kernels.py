"""JIT-compiled Monte Carlo kernels.

Single-site Glauber updates dominate the runtime of every experiment, so the
sweep loops, the von Mises-Fisher polar sampler (Ulrich-Wood envelope
rejection) and the W-statistic recorders live here as numba kernels operating
directly on the (n_sites, dim) spin buffer and the cached total spin.

All randomness flows through the numpy Generator passed in, so streams stay
reproducible and are shared consistently with Python-side code.  Spins are
renormalized to unit length after every resample; the cached total is rebuilt
from scratch every REFRESH_INTERVAL replacements to cap drift.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .model import REFRESH_INTERVAL

# Statistic codes shared with sampler.py / limits.py.
STAT_SUBCRITICAL = 0   # vector sqrt((N-beta)/n) * S_n, width = dim
STAT_SUPERCRITICAL = 1  # sqrt(n) * (beta^2 |S_n|^2 / (n^2 b^2) - 1)
STAT_CRITICAL = 2       # c_N |S_n|^2 / n^(3/2)
STAT_NORM_SQ = 3        # raw |S_n|^2


@njit(cache=True)
def _gamma_draw(rng, a):
    """Marsaglia-Tsang gamma(a) sampler; shape boost for a < 1."""
    boost = 1.0
    if a < 1.0:
        boost = rng.random() ** (1.0 / a)
        a += 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = rng.standard_normal()
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.random()
        if u < 1.0 - 0.0331 * x * x * x * x:
            return boost * d * v
        if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return boost * d * v


@njit(cache=True)
def _beta_sym_draw(rng, a):
    if a == 0.5:
        # arcsine law
        s = math.sin(0.5 * math.pi * rng.random())
        return s * s
    if a == 1.0:
        return rng.random()
    g1 = _gamma_draw(rng, a)
    g2 = _gamma_draw(rng, a)
    return g1 / (g1 + g2)


@njit(cache=True)
def _polar_draw(rng, kappa, dim, counters):
    """Polar component t ~ exp(kappa t) (1-t^2)^((dim-3)/2) on [-1, 1].

    Ulrich-Wood envelope rejection; counters[0] += accepted, counters[1] +=
    proposals.  At kappa = 0 the proposal is exact and every try accepts.
    """
    d = dim - 1.0
    b = d / (math.sqrt(4.0 * kappa * kappa + d * d) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + d * math.log1p(-x0 * x0)
    while True:
        counters[1] += 1
        z = _beta_sym_draw(rng, 0.5 * d)
        t = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random()
        if kappa * t + d * math.log1p(-x0 * t) - c >= math.log(u):
            counters[0] += 1
            return t


@njit(cache=True)
def _uniform_direction(rng, out):
    """Fill ``out`` with a uniform point on the unit sphere."""
    dim = out.shape[0]
    while True:
        s = 0.0
        for j in range(dim):
            out[j] = rng.standard_normal()
            s += out[j] * out[j]
        nrm = math.sqrt(s)
        if nrm > 1e-12:
            for j in range(dim):
                out[j] /= nrm
            return


@njit(cache=True)
def _vmf_draw(rng, mu, kappa, out, counters):
    """One vMF(mu, kappa) draw into ``out`` via tangent-normal decomposition."""
    dim = mu.shape[0]
    if kappa == 0.0:
        _uniform_direction(rng, out)
        counters[0] += 1
        counters[1] += 1
        return
    t = _polar_draw(rng, kappa, dim, counters)
    # uniform direction on the equator sphere orthogonal to mu
    while True:
        dot = 0.0
        for j in range(dim):
            out[j] = rng.standard_normal()
            dot += out[j] * mu[j]
        s = 0.0
        for j in range(dim):
            out[j] -= dot * mu[j]
            s += out[j] * out[j]
        nrm = math.sqrt(s)
        if nrm > 1e-12:
            break
    w = math.sqrt(max(0.0, 1.0 - t * t))
    s = 0.0
    for j in range(dim):
        out[j] = t * mu[j] + w * out[j] / nrm
        s += out[j] * out[j]
    # renormalize to stop norm drift
    nrm = math.sqrt(s)
    for j in range(dim):
        out[j] /= nrm


@njit(cache=True)
def _vmf_batch(rng, mu, kappa, out, counters):
    for i in range(out.shape[0]):
        _vmf_draw(rng, mu, kappa, out[i], counters)


@njit(cache=True)
def _uniform_batch(rng, out):
    for i in range(out.shape[0]):
        _uniform_direction(rng, out[i])


@njit(cache=True)
def _resample_site(rng, spins, total, beta, site, mu, theta, counters):
    """Glauber update at ``site``: draw from the single-site conditional.

    The conditional given the rest is vMF with direction along the
    leave-one-out spin and concentration beta * |leave-one-out| / n; when
    either degenerates the conditional is uniform.
    """
    n, dim = spins.shape
    loo2 = 0.0
    for j in range(dim):
        mu[j] = total[j] - spins[site, j]
        loo2 += mu[j] * mu[j]
    loo_norm = math.sqrt(loo2)
    kappa = beta * loo_norm / n
    if kappa == 0.0 or loo_norm < 1e-14:
        _uniform_direction(rng, theta)
        counters[0] += 1
        counters[1] += 1
    else:
        for j in range(dim):
            mu[j] /= loo_norm
        _vmf_draw(rng, mu, kappa, theta, counters)
    for j in range(dim):
        total[j] += theta[j] - spins[site, j]
        spins[site, j] = theta[j]


@njit(cache=True)
def _maybe_refresh(spins, total, counters):
    counters[2] += 1
    if counters[2] >= REFRESH_INTERVAL:
        n, dim = spins.shape
        for j in range(dim):
            s = 0.0
            for i in range(n):
                s += spins[i, j]
            total[j] = s
        counters[2] = 0


@njit(cache=True)
def sweep(rng, spins, total, beta, n_sweeps, counters):
    """n_sweeps systematic site-order sweeps of single-site Glauber updates."""
    n, dim = spins.shape
    mu = np.empty(dim)
    theta = np.empty(dim)
    for _ in range(n_sweeps):
        for site in range(n):
            _resample_site(rng, spins, total, beta, site, mu, theta, counters)
            _maybe_refresh(spins, total, counters)


@njit(cache=True)
def random_scan_steps(rng, spins, total, beta, n_steps, counters):
    """n_steps Glauber updates at uniformly random sites."""
    n, dim = spins.shape
    mu = np.empty(dim)
    theta = np.empty(dim)
    for _ in range(n_steps):
        site = int(rng.random() * n)
        if site == n:
            site = n - 1
        _resample_site(rng, spins, total, beta, site, mu, theta, counters)
        _maybe_refresh(spins, total, counters)


@njit(cache=True)
def _write_statistic(total, n, code, const, row):
    if code == STAT_SUBCRITICAL:
        for j in range(total.shape[0]):
            row[j] = const * total[j]
    else:
        s2 = 0.0
        for j in range(total.shape[0]):
            s2 += total[j] * total[j]
        if code == STAT_SUPERCRITICAL:
            row[0] = math.sqrt(n) * (const * s2 - 1.0)
        elif code == STAT_CRITICAL:
            row[0] = const * s2 / n**1.5
        else:
            row[0] = s2


@njit(cache=True)
def run_chain(rng, spins, total, beta, burn_in_sweeps, thin_sweeps, code, const,
              out, counters):
    """Burn in, then record the selected statistic every thin_sweeps sweeps."""
    n = spins.shape[0]
    sweep(rng, spins, total, beta, burn_in_sweeps, counters)
    for k in range(out.shape[0]):
        sweep(rng, spins, total, beta, thin_sweeps, counters)
        _write_statistic(total, n, code, const, out[k])


@njit(cache=True)
def collect_pairs(rng, spins, total, beta, steps_between, code, const,
                  w_before, w_after, counters):
    """Record exchangeable pairs (W, W') along the random-scan chain.

    Each pair is the statistic before and after one uniformly-random-site
    Glauber update; the update is kept, so the chain keeps advancing, and
    steps_between extra updates decorrelate consecutive pairs.
    """
    n, dim = spins.shape
    mu = np.empty(dim)
    theta = np.empty(dim)
    for k in range(w_before.shape[0]):
        random_scan_steps(rng, spins, total, beta, steps_between, counters)
        _write_statistic(total, n, code, const, w_before[k])
        site = int(rng.random() * n)
        if site == n:
            site = n - 1
        _resample_site(rng, spins, total, beta, site, mu, theta, counters)
        _maybe_refresh(spins, total, counters)
        _write_statistic(total, n, code, const, w_after[k])
