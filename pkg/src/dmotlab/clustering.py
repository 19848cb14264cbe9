"""Cluster analysis over pooled labelled estimates.

Every clusterer returns a cluster-index vector ``D`` with values ``1..K`` and
never places two estimates from the same node in one cluster.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from dmotlab.core import LabelledEstimate

CUTOFF_PERCENTILE = 2.0


class NoCrossNodeData(ValueError):
    """All pairwise distances are infinite: every estimate came from one node."""


def build_distance(pool: Sequence[LabelledEstimate]) -> np.ndarray:
    if len(pool) == 0:
        raise ValueError("pool is empty")
    pos = np.array([e.position for e in pool])
    nodes = np.array([e.label.node for e in pool])
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    same = nodes[:, None] == nodes[None, :]
    np.fill_diagonal(same, False)
    dist[same] = np.inf
    np.fill_diagonal(dist, 0.0)
    return dist


def _finite_pairs(dist: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(dist.shape[0], k=1)
    vals = dist[iu]
    return vals[np.isfinite(vals)]


def select_cutoff(dist: np.ndarray) -> float:
    vals = _finite_pairs(dist)
    if vals.size == 0:
        raise NoCrossNodeData("no finite cross-node distances")
    return float(np.percentile(vals, CUTOFF_PERCENTILE))


def cdp_rho(dist: np.ndarray, cutoff: float) -> np.ndarray:
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    close = dist < cutoff
    np.fill_diagonal(close, False)
    return close.sum(axis=1)


def density_order(rho: np.ndarray, tiebreak=None) -> np.ndarray:
    """Rank of each point by decreasing rho; ties go to the lower ``tiebreak`` (default: pool index)."""
    tiebreak = np.arange(len(rho)) if tiebreak is None else np.asarray(tiebreak)
    order = np.lexsort((tiebreak, -np.asarray(rho)))
    rank = np.empty(len(rho), dtype=int)
    rank[order] = np.arange(len(rho))
    return rank


def cdp_delta(dist: np.ndarray, rho: np.ndarray, tiebreak=None) -> np.ndarray:
    """Distance to the nearest denser point.

    Points with no finite distance to a denser point (the densest point, or
    points whose denser peers are all same-node) take the largest finite
    pairwise distance in the pool.
    """
    n = dist.shape[0]
    rank = density_order(rho, tiebreak)
    delta = np.full(n, np.inf)
    for i in range(n):
        denser = rank < rank[i]
        if denser.any():
            delta[i] = dist[i, denser].min()
    pairs = _finite_pairs(dist)
    delta[~np.isfinite(delta)] = float(pairs.max()) if pairs.size else 0.0
    return delta


def _lloyd(pts: np.ndarray, assign: np.ndarray, max_iter: int) -> np.ndarray:
    for _ in range(max_iter):
        if assign.all() or not assign.any():
            break
        centroids = np.array([pts[~assign].mean(axis=0), pts[assign].mean(axis=0)])
        d = np.linalg.norm(pts[:, None, :] - centroids[None], axis=-1)
        new = d[:, 1] < d[:, 0]
        if np.array_equal(new, assign):
            break
        assign = new
    return assign


def _sse(pts: np.ndarray, assign: np.ndarray) -> float:
    return float(sum(((pts[g] - pts[g].mean(axis=0)) ** 2).sum() for g in (assign, ~assign) if g.any()))


def split_centers(rho, delta, max_iter: int = 100, scale: float | None = None,
                  multi_start: bool = True) -> np.ndarray:
    """Boolean center mask from 2-means on the normalised (rho, delta) plane.

    rho is scaled to a neighbour fraction (divided by ``n - 1``) and delta by
    its maximum, so both axes live in [0, 1]. With ``scale`` given, delta is
    first compressed to ``log(1 + delta / scale)``: inter-object gaps span
    an order of magnitude or more, and on a linear axis the large ones would
    push the split above the smaller ones.

    Lloyd iterations start from every threshold split of ``rho + delta`` and
    the split with the smallest within-group squared error wins, so the
    result does not hinge on one initialisation. ``multi_start=False`` runs
    the single start seeded at the min and max ``rho + delta`` points.
    """
    delta = np.asarray(delta, float)
    if scale is not None and scale > 0:
        delta = np.log1p(delta / scale)
    pts = np.column_stack([np.asarray(rho, float), delta])
    n = len(pts)
    if n == 1:
        return np.ones(1, dtype=bool)
    dmax = pts[:, 1].max()
    pts = pts / np.array([n - 1, dmax if dmax > 0 else 1.0])
    score = pts.sum(axis=1)
    if score.max() == score.min():
        return np.ones(n, dtype=bool)
    if multi_start:
        order = np.argsort(score, kind="stable")
        starts = [np.isin(np.arange(n), order[cut:]) for cut in range(1, n)
                  if score[order[cut]] != score[order[cut - 1]]]
    else:
        lo, hi = pts[np.argmin(score)], pts[np.argmax(score)]
        starts = [np.linalg.norm(pts - hi, axis=1) < np.linalg.norm(pts - lo, axis=1)]
    best, best_sse = None, np.inf
    for start in starts:
        assign = _lloyd(pts, start, max_iter)
        if assign.all() or not assign.any():
            continue
        sse = _sse(pts, assign)
        if sse < best_sse - 1e-12:
            best, best_sse = assign, sse
    if best is None:
        return np.ones(n, dtype=bool)
    upper_is_true = pts[best].sum(axis=1).mean() >= pts[~best].sum(axis=1).mean()
    return best if upper_is_true else ~best


def _assign_to_anchors(dist: np.ndarray, nodes: np.ndarray, anchors: np.ndarray, members: np.ndarray,
                       tiebreak: np.ndarray) -> np.ndarray:
    """Greedy nearest-anchor assignment, closest pairs first, one estimate per node per anchor.

    A member whose nearest anchor already holds its node moves on to the
    next-nearest feasible anchor. Returns the anchor position (0-based) for
    each member, or -1 when none is feasible.
    """
    out = np.full(len(members), -1)
    if len(anchors) == 0 or len(members) == 0:
        return out
    taken = [{int(nodes[a])} for a in anchors]
    sub = dist[np.ix_(members, anchors)]
    pairs = np.argwhere(np.isfinite(sub))
    order = np.lexsort((tiebreak[anchors[pairs[:, 1]]], tiebreak[members[pairs[:, 0]]],
                        sub[pairs[:, 0], pairs[:, 1]]))
    for mi, ai in pairs[order]:
        if out[mi] >= 0:
            continue
        node = int(nodes[members[mi]])
        if node in taken[ai]:
            continue
        out[mi] = ai
        taken[ai].add(node)
    return out


def _nodes(pool) -> np.ndarray:
    return np.array([e.label.node for e in pool])


def label_ranks(pool) -> np.ndarray:
    """Position of each estimate's label in label order; breaks ties independently of pool order."""
    order = sorted(range(len(pool)), key=lambda i: pool[i].label.sort_key())
    ranks = np.empty(len(pool), dtype=int)
    ranks[order] = np.arange(len(pool))
    return ranks


def modified_cdp(pool: Sequence[LabelledEstimate]) -> np.ndarray:
    """Density-peak clustering with automatic center selection."""
    n = len(pool)
    if n == 0:
        raise ValueError("pool is empty")
    if n == 1:
        return np.ones(1, dtype=int)
    dist = build_distance(pool)
    try:
        cutoff = select_cutoff(dist)
    except NoCrossNodeData:
        return np.arange(1, n + 1)
    pairs = _finite_pairs(dist)
    scale = cutoff if cutoff > 0 else float(pairs[pairs > 0].min()) if np.any(pairs > 0) else 1.0
    if cutoff <= 0:
        cutoff = np.nextafter(0.0, 1.0)
    ranks = label_ranks(pool)
    rho = cdp_rho(dist, cutoff)
    delta = cdp_delta(dist, rho, ranks)
    if not np.any(pairs > 0):
        # every cross-node pair coincides: grow one cluster from the
        # top-ranked point rather than one per estimate
        is_center = ranks == ranks.min()
    else:
        is_center = split_centers(rho, delta, scale=scale)
    centers = np.flatnonzero(is_center)
    D = np.zeros(n, dtype=int)
    D[centers] = np.arange(1, len(centers) + 1)
    others = np.flatnonzero(~is_center)
    nodes = _nodes(pool)
    target = _assign_to_anchors(dist, nodes, centers, others, ranks)
    next_id = len(centers) + 1
    for i, t in zip(others, target):
        if t >= 0:
            D[i] = t + 1
        else:
            D[i] = next_id
            next_id += 1
    return D


def dbscan(pool: Sequence[LabelledEstimate], epsilon: float, min_pts: int = 1) -> np.ndarray:
    """Density-reachability clustering with a cannot-link rule for same-node estimates.

    Points left as noise (possible only for ``min_pts > 1``) get singleton clusters.
    """
    if epsilon <= 0 or min_pts < 1:
        raise ValueError("need epsilon > 0 and min_pts >= 1")
    n = len(pool)
    if n == 0:
        raise ValueError("pool is empty")
    dist = build_distance(pool)
    nodes = _nodes(pool)
    neighbours = [np.flatnonzero(dist[i] <= epsilon) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbours])
    D = np.zeros(n, dtype=int)
    cid = 0
    for seed in range(n):
        if D[seed] or not core[seed]:
            continue
        cid += 1
        D[seed] = cid
        used = {int(nodes[seed])}
        frontier = [seed]
        while frontier:
            p = frontier.pop(0)
            if not core[p]:
                continue
            nb = neighbours[p]
            for q in nb[np.argsort(dist[p, nb], kind="stable")]:
                if D[q] or int(nodes[q]) in used:
                    continue
                D[q] = cid
                used.add(int(nodes[q]))
                frontier.append(q)
    for i in np.flatnonzero(D == 0):
        cid += 1
        D[i] = cid
    return D


def _shift_to_modes(pos: np.ndarray, bandwidth: float, tol: float = 1e-3, max_iter: int = 200) -> np.ndarray:
    y = pos.copy()
    active = np.ones(len(y), dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        d2 = np.sum((y[active, None, :] - pos[None, :, :]) ** 2, axis=-1)
        k = np.exp(-0.5 * d2 / bandwidth**2)
        new = (k @ pos) / k.sum(axis=1, keepdims=True)
        shift = np.linalg.norm(new - y[active], axis=1)
        y[active] = new
        idx = np.flatnonzero(active)
        active[idx[shift < tol]] = False
    return y


def mean_shift(pool: Sequence[LabelledEstimate], bandwidth: float) -> np.ndarray:
    """Gaussian-kernel mean shift on positions.

    Modes closer than ``bandwidth / 2`` are merged. If a mode collects several
    estimates of one node, the one nearest the mode stays and the rest become
    singleton clusters.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    n = len(pool)
    if n == 0:
        raise ValueError("pool is empty")
    pos = np.array([e.position for e in pool])
    converged = _shift_to_modes(pos, bandwidth)
    modes: list[np.ndarray] = []
    D = np.zeros(n, dtype=int)
    for i, y in enumerate(converged):
        for k, m in enumerate(modes):
            if np.linalg.norm(y - m) < bandwidth / 2:
                D[i] = k + 1
                break
        else:
            modes.append(y)
            D[i] = len(modes)
    nodes = _nodes(pool)
    next_id = len(modes) + 1
    for k, m in enumerate(modes, start=1):
        members = np.flatnonzero(D == k)
        for node in np.unique(nodes[members]):
            same = members[nodes[members] == node]
            if len(same) < 2:
                continue
            keep = same[np.argmin(np.linalg.norm(pos[same] - m, axis=1))]
            for i in same:
                if i != keep:
                    D[i] = next_id
                    next_id += 1
    return D


def clusterer(method: str, epsilon: float | None = None, bandwidth: float | None = None,
              min_pts: int = 1) -> Callable[[Sequence[LabelledEstimate]], np.ndarray]:
    """Resolve a method name (``cdp``, ``dbscan``, ``meanshift``) to a pool -> D function."""
    if method == "cdp":
        return modified_cdp
    if method == "dbscan":
        if epsilon is None:
            raise ValueError("dbscan needs epsilon")
        return lambda pool: dbscan(pool, epsilon, min_pts)
    if method == "meanshift":
        if bandwidth is None:
            raise ValueError("meanshift needs bandwidth")
        return lambda pool: mean_shift(pool, bandwidth)
    raise ValueError(f"unknown clustering method {method!r}")


def canonical(D) -> tuple[int, ...]:
    """Relabel clusters by first appearance so equal partitions compare equal."""
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(int(d), len(seen) + 1) for d in D)
