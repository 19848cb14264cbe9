"""Weighted label graph recording which labels have been associated, and how often.

An edge weight counts the confirmations still needed before two labels are
treated as the same object; weight 0 means merged.
"""

from __future__ import annotations

from collections import defaultdict, deque
from typing import Iterable, Sequence

from dmotlab.core import GlobalLabel


class LabelGraph:
    def __init__(self, w_max: int = 5, expiry_horizon: int | None = None):
        if w_max < 0:
            raise ValueError("w_max must be non-negative")
        self.w_max = w_max
        self.expiry_horizon = expiry_horizon
        self.vertices: set[GlobalLabel] = set()
        self.weights: dict[frozenset, int] = {}
        self._zero_adj: dict[GlobalLabel, set[GlobalLabel]] = defaultdict(set)
        self._last_seen: dict[GlobalLabel, int] = {}
        self._clock = 0

    @property
    def edges(self) -> set[frozenset]:
        return set(self.weights)

    def weight(self, a: GlobalLabel, b: GlobalLabel) -> int | None:
        return self.weights.get(frozenset((a, b)))

    def __contains__(self, label: GlobalLabel) -> bool:
        return label in self.vertices

    def _set_weight(self, edge: frozenset, w: int) -> None:
        self.weights[edge] = w
        if w == 0:
            a, b = tuple(edge)
            self._zero_adj[a].add(b)
            self._zero_adj[b].add(a)

    def copy(self) -> "LabelGraph":
        g = LabelGraph(self.w_max, self.expiry_horizon)
        g.vertices = set(self.vertices)
        g.weights = dict(self.weights)
        g._zero_adj = defaultdict(set, {k: set(v) for k, v in self._zero_adj.items()})
        g._last_seen = dict(self._last_seen)
        g._clock = self._clock
        return g

    def expire(self) -> None:
        """Drop labels unseen for ``expiry_horizon`` updates (no-op when the horizon is unset)."""
        if self.expiry_horizon is None:
            return
        stale = {v for v, t in self._last_seen.items() if self._clock - t > self.expiry_horizon}
        if not stale:
            return
        self.vertices -= stale
        for e in [e for e in self.weights if e & stale]:
            del self.weights[e]
        for v in stale:
            self._last_seen.pop(v, None)
            for u in self._zero_adj.pop(v, ()):
                self._zero_adj[u].discard(v)

    def export(self) -> str:
        """Adjacency dump, one ``s,alpha,n -- s,alpha,n : w`` line per edge."""
        lines = []
        for edge, w in self.weights.items():
            a, b = sorted(edge)
            lines.append((a.sort_key(), b.sort_key(), f"{a} -- {b} : {w}"))
        return "\n".join(line for *_, line in sorted(lines))


def update_graph(g: LabelGraph, D: Sequence[int], labels: Sequence[GlobalLabel]) -> LabelGraph:
    """Add unseen labels, then create or decrement an edge for every co-clustered pair."""
    if len(D) != len(labels):
        raise ValueError("cluster vector and label list differ in length")
    g._clock += 1
    for lab in labels:
        g.vertices.add(lab)
        g._last_seen[lab] = g._clock
    groups: dict[int, list[GlobalLabel]] = defaultdict(list)
    for d, lab in zip(D, labels):
        groups[int(d)].append(lab)
    for m in sorted(groups):
        members = groups[m]
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, b = members[i], members[j]
                if a == b:
                    continue
                edge = frozenset((a, b))
                w = g.weights.get(edge)
                g._set_weight(edge, g.w_max if w is None else max(0, w - 1))
    g.expire()
    return g


def zero_distance_set(g: LabelGraph, seed: GlobalLabel) -> set[GlobalLabel]:
    """All labels joined to ``seed`` by a path of zero-weight edges, seed included."""
    if seed not in g.vertices:
        raise KeyError(f"label {seed} not in graph")
    seen = {seed}
    queue = deque([seed])
    while queue:
        v = queue.popleft()
        for u in g._zero_adj.get(v, ()):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def consensus_label(g: LabelGraph, cluster_labels: Iterable[GlobalLabel]) -> GlobalLabel:
    labels = list(cluster_labels)
    if not labels:
        raise ValueError("empty cluster")
    for lab in labels:
        if lab not in g.vertices:
            raise KeyError(f"label {lab} not in graph")
    return min(zero_distance_set(g, min(labels)))
