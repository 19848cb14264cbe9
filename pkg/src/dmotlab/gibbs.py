"""Gibbs sampling of measurement-to-track association maps.

An association map assigns each track ``i`` either 0 (missed or absent) or a
measurement index ``1..m``; no measurement is used twice. The unnormalised
weight of a map is ``prod_i eta[i, gamma_i]``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TINY = 1e-300
RESTART = 100


@njit(cache=True)
def _sweep(eta, uniforms, gamma):
    n, mp1 = eta.shape
    sweeps = uniforms.shape[0]
    out = np.empty((sweeps, n), dtype=np.int64)
    used = np.zeros(mp1, dtype=np.bool_)
    for i in range(n):
        if gamma[i] > 0:
            used[gamma[i]] = True
    cum = np.empty(mp1)
    for t in range(sweeps):
        for i in range(n):
            if gamma[i] > 0:
                used[gamma[i]] = False
            total = 0.0
            for j in range(mp1):
                if j == 0 or not used[j]:
                    total += eta[i, j]
                cum[j] = total
            u = uniforms[t, i] * total
            j = 0
            while j < mp1 - 1 and cum[j] <= u:
                j += 1
            # rounding can land on a masked or zero option at the top end
            while j > 0 and (used[j] or eta[i, j] == 0.0):
                j -= 1
            gamma[i] = j
            if j > 0:
                used[j] = True
        out[t] = gamma
    return out


def normalise_rows(log_eta: np.ndarray) -> np.ndarray:
    """Exponentiate per-track log costs after row scaling; row scaling leaves map weights proportional."""
    log_eta = np.asarray(log_eta, dtype=float)
    shifted = log_eta - np.max(log_eta, axis=1, keepdims=True)
    eta = np.exp(shifted)
    eta[:, 0] = np.maximum(eta[:, 0], TINY)
    return eta


def gibbs_sample(
    eta: np.ndarray, sweeps: int, rng: np.random.Generator, burn_in: int = 0, restart: int = RESTART
) -> np.ndarray:
    """Sample association maps and return one per retained sweep.

    The chain starts from the all-missed map and returns there every
    ``restart`` sweeps. When missed detections carry almost no weight, a
    single chain cannot move between maps that differ in two places, so it
    would keep whichever map its first sweep found.
    """
    eta = np.ascontiguousarray(eta, dtype=float)
    n = eta.shape[0]
    if n == 0 or sweeps <= 0:
        return np.zeros((max(sweeps - burn_in, 1), n), dtype=np.int64)
    uniforms = rng.random((sweeps, n))
    restart = max(1, restart)
    samples = np.concatenate([
        _sweep(eta, uniforms[a:a + restart], np.zeros(n, dtype=np.int64)) for a in range(0, sweeps, restart)
    ])
    return samples[burn_in:] if burn_in < sweeps else samples[-1:]


def map_log_weights(eta: np.ndarray, maps: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_eta = np.log(eta)
    rows = np.arange(eta.shape[0])
    return log_eta[rows[None, :], maps].sum(axis=1)


def hypotheses(
    eta: np.ndarray,
    sweeps: int,
    rng: np.random.Generator,
    burn_in: int = 0,
    max_hypotheses: int = 1000,
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct sampled maps with normalised weights, capped at ``max_hypotheses``."""
    if max_hypotheses < 1:
        raise ValueError("max_hypotheses must be at least 1")
    samples = gibbs_sample(eta, sweeps, rng, burn_in)
    maps = np.unique(samples, axis=0)
    logw = map_log_weights(eta, maps)
    keep = np.isfinite(logw)
    maps, logw = maps[keep], logw[keep]
    if maps.shape[0] == 0:
        maps = np.zeros((1, eta.shape[0]), dtype=np.int64)
        logw = np.zeros(1)
    if maps.shape[0] > max_hypotheses:
        top = np.argsort(-logw, kind="stable")[:max_hypotheses]
        maps, logw = maps[top], logw[top]
    w = np.exp(logw - logw.max())
    return maps, w / w.sum()


def association_marginals(maps: np.ndarray, weights: np.ndarray, n_meas: int) -> np.ndarray:
    """``P[i, j]``: probability that track ``i`` takes option ``j`` (0 = missed)."""
    n = maps.shape[1]
    P = np.zeros((n, n_meas + 1))
    for i in range(n):
        np.add.at(P[i], maps[:, i], weights)
    return P
