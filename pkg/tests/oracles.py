"""Brute-force reference implementations used by several test modules."""

import itertools

import numpy as np


def enumerate_marginals(eta: np.ndarray) -> np.ndarray:
    """Exact association marginals by listing every valid map (0 = missed)."""
    n, m1 = eta.shape
    P = np.zeros((n, m1))
    total = 0.0
    for gamma in itertools.product(range(m1), repeat=n):
        used = [g for g in gamma if g > 0]
        if len(used) != len(set(used)):
            continue
        w = float(np.prod([eta[i, g] for i, g in enumerate(gamma)]))
        total += w
        for i, g in enumerate(gamma):
            P[i, g] += w
    return P / total


def valid_maps(n: int, m: int) -> int:
    return sum(1 for g in itertools.product(range(m + 1), repeat=n)
               if len([x for x in g if x]) == len({x for x in g if x}))


def brute_ospa(X, Y, c, p):
    """OSPA by minimising over every injection of the smaller set into the larger."""
    X, Y = np.asarray(X, float).reshape(-1, 2), np.asarray(Y, float).reshape(-1, 2)
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    if n == 0:
        return 0.0
    best = np.inf
    for perm in itertools.permutations(range(n), m):
        s = sum(min(np.linalg.norm(X[i] - Y[j]), c) ** p for i, j in enumerate(perm))
        best = min(best, s)
    if m == 0:
        best = 0.0
    return ((best + c**p * (n - m)) / n) ** (1 / p)


def kalman_update(mean, cov, z, H, R):
    S = H @ cov @ H.T + R
    K = cov @ H.T @ np.linalg.inv(S)
    return mean + K @ (z - H @ mean), (np.eye(len(mean)) - K @ H) @ cov
