"""Per-node fusion step: cluster pooled estimates, update the label graph,
average each cluster's states and give each cluster a consensus label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from dmotlab.clustering import modified_cdp
from dmotlab.core import GlobalLabel, LabelledEstimate, NodeEstimateSet
from dmotlab.labelgraph import LabelGraph, consensus_label, update_graph

Clusterer = Callable[[Sequence[LabelledEstimate]], np.ndarray]


@dataclass
class FusionResult:
    global_estimates: list[LabelledEstimate]
    graph: LabelGraph
    D: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    collisions: int = 0


def fuse_kinematics(members) -> np.ndarray:
    states = [np.asarray(m, dtype=float) for m in members]
    if not states:
        raise ValueError("cannot fuse an empty cluster")
    if len({s.shape for s in states}) != 1:
        raise ValueError("cluster members have different dimensions")
    return np.mean(states, axis=0)


def _resolve_labels(
    wanted: dict[int, GlobalLabel], own: dict[int, list[GlobalLabel]]
) -> tuple[dict[int, GlobalLabel], int]:
    """Make the per-cluster labels distinct.

    Higher cluster indices claim their consensus label first. A cluster that
    loses falls back to the smallest free label among its own members; if all
    of those are held by clusters that do not own them, it takes one back and
    the displaced cluster falls back in turn.
    """
    holder: dict[GlobalLabel, int] = {}
    out: dict[int, GlobalLabel] = {}
    collisions = 0

    def place(m: int, prefs: list[GlobalLabel]) -> None:
        for lab in prefs:
            if lab not in holder:
                holder[lab] = m
                out[m] = lab
                return
        lab = own[m][0]
        other = holder[lab]
        holder[lab] = m
        out[m] = lab
        place(other, own[other])

    for m in sorted(wanted, reverse=True):
        if wanted[m] in holder:
            collisions += 1
        place(m, [wanted[m], *own[m]])
    return out, collisions


def dmot_fusion(
    pool: Sequence[NodeEstimateSet],
    graph: LabelGraph,
    clusterer: Clusterer = modified_cdp,
) -> FusionResult:
    """Fuse one time step of pooled node messages. ``graph`` is updated in place."""
    if len({s.time for s in pool}) > 1:
        raise ValueError("pooled estimate sets come from different time steps")
    flat = [e for s in pool for e in s.estimates]
    if not flat:
        return FusionResult([], graph)
    D = np.asarray(clusterer(flat), dtype=int)
    labels = [e.label for e in flat]
    update_graph(graph, D, labels)

    states: dict[int, np.ndarray] = {}
    wanted: dict[int, GlobalLabel] = {}
    own: dict[int, list[GlobalLabel]] = {}
    for m in range(1, int(D.max()) + 1):
        idx = np.flatnonzero(D == m)
        if idx.size == 0:
            continue
        states[m] = fuse_kinematics([flat[i].state for i in idx])
        own[m] = sorted(labels[i] for i in idx)
        wanted[m] = consensus_label(graph, own[m])
    final, collisions = _resolve_labels(wanted, own)
    estimates = [LabelledEstimate(states[m], final[m]) for m in sorted(states)]
    return FusionResult(estimates, graph, D, collisions)


BANDWIDTH_METHODS = ("labelled-estimates", "estimates-and-covariance", "lmb-density")


def bandwidth_bytes(method: str, n_l: int, n_d: int, n_nodes: int, n_objects: int, mu: float = 1.0) -> int:
    """Bytes shared per step by each information-sharing strategy (8-byte values)."""
    for name, v in (("n_l", n_l), ("n_d", n_d), ("n_nodes", n_nodes), ("n_objects", n_objects)):
        if v <= 0:
            raise ValueError(f"{name} must be positive")
    cov = n_d * (n_d + 1) // 2
    if method == "labelled-estimates":
        return 8 * (n_l + n_d) * n_nodes * n_objects
    if method == "estimates-and-covariance":
        return 8 * (n_l + n_d + cov) * n_nodes * n_objects
    if method == "lmb-density":
        if mu < 1:
            raise ValueError("mu must be at least 1")
        total = 8 * (1 + n_l + n_d + cov) * n_nodes * n_objects * mu
        if float(total).is_integer():
            return int(total)
        return total
    raise ValueError(f"unknown bandwidth method {method!r}")
