"""Shared domain types: global labels, labelled estimates and node messages."""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering

import numpy as np


@total_ordering
@dataclass(frozen=True)
class GlobalLabel:
    """Network-unique track label ``(birth_time, alpha, node)``.

    Ordering is lexicographic on birth time, then node id, then alpha.
    Alpha is only a tie-break so that the order is total.
    """

    s: int
    alpha: int
    node: int

    def __post_init__(self):
        if self.s < 0 or self.alpha < 0:
            raise ValueError(f"birth time and alpha must be non-negative: {self}")
        if self.node < 1:
            raise ValueError(f"node ids are 1-based: {self}")

    def sort_key(self) -> tuple[int, int, int]:
        return (self.s, self.node, self.alpha)

    def __lt__(self, other: "GlobalLabel") -> bool:
        if not isinstance(other, GlobalLabel):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.s},{self.alpha},{self.node}"


def label_compare(a: GlobalLabel, b: GlobalLabel) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    ka, kb = a.sort_key(), b.sort_key()
    return (ka > kb) - (ka < kb)


@dataclass(frozen=True, eq=False)
class LabelledEstimate:
    state: np.ndarray
    label: GlobalLabel

    def __post_init__(self):
        state = np.array(self.state, dtype=float)
        if state.ndim != 1 or state.size not in (4, 5):
            raise ValueError(f"state must be a 4- or 5-vector, got shape {state.shape}")
        if not np.all(np.isfinite(state)):
            raise ValueError("state has non-finite entries")
        state.setflags(write=False)
        object.__setattr__(self, "state", state)

    @property
    def position(self) -> np.ndarray:
        return self.state[[0, 2]]

    def __eq__(self, other):
        if not isinstance(other, LabelledEstimate):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.state, other.state)

    def __hash__(self):
        return hash((self.label, self.state.tobytes()))


@dataclass(frozen=True)
class NodeEstimateSet:
    """The message ``(n, X_k)`` a node broadcasts at time step ``k``."""

    node: int
    time: int
    estimates: tuple[LabelledEstimate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "estimates", tuple(self.estimates))
        seen = set()
        for est in self.estimates:
            if est.label.node != self.node:
                raise ValueError(f"estimate label {est.label} does not belong to node {self.node}")
            if est.label in seen:
                raise ValueError(f"duplicate label {est.label} in node {self.node} message")
            seen.add(est.label)

    def __len__(self) -> int:
        return len(self.estimates)
