"""OSPA and OSPA-on-OSPA distances, and a wall-clock probe for the fusion step."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class MetricParams:
    c: float = 100.0
    p: float = 1.0
    window: int = 10

    def __post_init__(self):
        if self.c <= 0 or self.p < 1 or self.window < 1:
            raise ValueError("need c > 0, p >= 1 and window >= 1")


@dataclass(frozen=True)
class OSPA:
    total: float
    loc: float
    card: float

    def __iter__(self):
        return iter((self.total, self.loc, self.card))


def _ospa_from_cost(cost: np.ndarray, c: float, p: float) -> OSPA:
    """OSPA given a cut-off base-distance matrix (rows: X, cols: Y)."""
    m, n = cost.shape
    big = max(m, n)
    if big == 0:
        return OSPA(0.0, 0.0, 0.0)
    if min(m, n) == 0:
        return OSPA(float(c), 0.0, float(c))
    cp = np.minimum(cost, c) ** p
    rows, cols = linear_sum_assignment(cp)
    loc_sum = float(cp[rows, cols].sum())
    card_sum = c**p * abs(m - n)
    total = ((loc_sum + card_sum) / big) ** (1 / p)
    return OSPA(total, (loc_sum / big) ** (1 / p), (card_sum / big) ** (1 / p))


def ospa(truth, est, params: MetricParams = MetricParams()) -> OSPA:
    """OSPA between two finite sets of 2D positions."""
    X = np.asarray(truth, dtype=float).reshape(-1, 2)
    Y = np.asarray(est, dtype=float).reshape(-1, 2)
    cost = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=-1) if len(X) and len(Y) else np.zeros((len(X), len(Y)))
    return _ospa_from_cost(cost, params.c, params.p)


Tracks = Mapping[object, Mapping[int, np.ndarray]]


def _window_tracks(tracks: Tracks, steps: range) -> list[np.ndarray]:
    """Each track as a (len(steps), 2) array with NaN where the track is absent."""
    out = []
    for hist in tracks.values():
        arr = np.full((len(steps), 2), np.nan)
        present = False
        for i, t in enumerate(steps):
            pos = hist.get(t)
            if pos is not None:
                arr[i] = pos
                present = True
        if present:
            out.append(arr)
    return out


def track_distance(a: np.ndarray, b: np.ndarray, c: float, p: float) -> float:
    """Time-averaged cut-off distance between two windowed tracks."""
    ea = ~np.isnan(a[:, 0])
    eb = ~np.isnan(b[:, 0])
    either = ea | eb
    if not either.any():
        return 0.0
    both = ea & eb
    d = np.full(len(a), float(c))
    d[both] = np.minimum(np.linalg.norm(a[both] - b[both], axis=1), c)
    return float(np.mean(d[either] ** p) ** (1 / p))


def ospa2(truth_tracks: Tracks, est_tracks: Tracks, k: int, params: MetricParams = MetricParams()) -> float:
    """OSPA over track sets at step ``k`` using the window ``[k - window + 1, k]``."""
    steps = range(max(0, k - params.window + 1), k + 1)
    X = _window_tracks(truth_tracks, steps)
    Y = _window_tracks(est_tracks, steps)
    cost = np.array([[track_distance(x, y, params.c, params.p) for y in Y] for x in X]).reshape(len(X), len(Y))
    return _ospa_from_cost(cost, params.c, params.p).total


@dataclass
class Probe:
    ms: float = 0.0


@contextmanager
def timing_probe() -> Iterator[Probe]:
    """Measure the wall-clock duration of the enclosed block in milliseconds."""
    probe = Probe()
    start = time.perf_counter()
    try:
        yield probe
    finally:
        probe.ms = (time.perf_counter() - start) * 1e3
