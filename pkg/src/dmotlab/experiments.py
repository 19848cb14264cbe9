"""Experiment drivers shared by the acceptance suite and the scripts.

Parameter sweeps over a scenario, and a two-object crossing in which the
clustering is forced to swap the objects at the crossing step, to probe
how the label graph reacts to a single association error.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from dmotlab.clustering import modified_cdp
from dmotlab.core import GlobalLabel, LabelledEstimate, NodeEstimateSet
from dmotlab.fusion import dmot_fusion
from dmotlab.labelgraph import LabelGraph
from dmotlab.results import summarize
from dmotlab.scenario import ScenarioConfig
from dmotlab.simulation import run_monte_carlo, with_overrides

FIELD_ALIASES = {"nodes": "n_nodes", "method": "fusion"}


def sweep(cfg: ScenarioConfig, param: str, values: Iterable, threads: int = 1) -> dict:
    """Summary row of ``cfg.fusion`` for each value of ``param``."""
    field = FIELD_ALIASES.get(param, param)
    out = {}
    for v in values:
        sub = with_overrides(cfg, **{field: v})
        out[v] = summarize(run_monte_carlo(sub, threads=threads))[sub.fusion]
    return out


def linear_r2(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0


def relative_drop(before: float, after: float) -> float:
    return (before - after) / before if before else 0.0


# -- forced association error at a crossing ---------------------------------------


def crossing_truth(duration: int = 25, k_cross: int = 12, speed: float = 10.0, climb: float = 15.0) -> np.ndarray:
    """(duration, 2, 2) positions of two objects that meet at the origin at ``k_cross``."""
    k = np.arange(duration) - k_cross
    a = np.column_stack([speed * k, climb * k])
    b = np.column_stack([speed * k, -climb * k])
    return np.stack([a, b], axis=1)


def _local_sets(truth: np.ndarray, k: int, rng: np.random.Generator, noise: float, nodes=(1, 2)):
    vel = truth[min(k + 1, len(truth) - 1)] - truth[max(k - 1, 0)]
    vel = vel / max(1, min(k + 1, len(truth) - 1) - max(k - 1, 0))
    sets = []
    for n in nodes:
        ests = []
        for obj in range(truth.shape[1]):
            p = truth[k, obj] + rng.normal(0.0, noise, 2)
            ests.append(LabelledEstimate([p[0], vel[obj, 0], p[1], vel[obj, 1]], GlobalLabel(0, obj, n)))
        sets.append(NodeEstimateSet(n, k, tuple(ests)))
    return sets


def swapped_clusterer(k_bad: int):
    """modified_cdp except at step ``k_bad``, where each node-1 estimate joins the other object's node-2 estimate."""
    state = {"k": 0}

    def cluster(pool):
        k = state["k"]
        state["k"] += 1
        if k != k_bad:
            return modified_cdp(pool)
        return np.array([1 + ((e.label.alpha + (e.label.node == 2)) % 2) for e in pool])

    return cluster


def crossing_label_trial(w_max: int, rng: np.random.Generator, duration: int = 25, k_cross: int = 12,
                         noise: float = 3.0) -> tuple[bool, bool]:
    """Run one forced-swap trial.

    Returns ``(switched, relabelled)``. ``switched``: some global label was
    attached to one object and later to the other (each estimate belongs to
    the nearest object). ``relabelled``: the estimate matched to an object by
    optimal assignment changed label at some step, which also counts
    one-step fragments where a node's own label surfaces. The forced step is
    skipped: both fused states there average over the two objects.
    """
    truth = crossing_truth(duration, k_cross)
    graph = LabelGraph(w_max)
    cluster = swapped_clusterer(k_cross)
    owner: dict[GlobalLabel, set[int]] = {}
    matched: list[set[GlobalLabel]] = [set(), set()]
    for k in range(duration):
        res = dmot_fusion(_local_sets(truth, k, rng, noise), graph, cluster)
        if k == k_cross:
            continue
        est = np.array([e.position for e in res.global_estimates])
        cost = np.linalg.norm(truth[k][:, None, :] - est[None], axis=-1)
        for e, obj in zip(res.global_estimates, np.argmin(cost, axis=0)):
            owner.setdefault(e.label, set()).add(int(obj))
        for obj, j in zip(*linear_sum_assignment(cost)):
            matched[obj].add(res.global_estimates[j].label)
    switched = any(len(objs) > 1 for objs in owner.values())
    relabelled = any(len(labs) > 1 for labs in matched)
    return switched, relabelled


def label_switch_rate(w_max: int, runs: int = 50, seed: int = 0) -> tuple[float, float]:
    """Fractions of forced-swap trials with a label switch, and with any relabelling."""
    switched = relabelled = 0
    for run in range(runs):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run,)))
        s, r = crossing_label_trial(w_max, rng)
        switched += s
        relabelled += r
    return switched / runs, relabelled / runs
