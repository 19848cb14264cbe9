"""Ground truth, local tracking, estimate broadcast and the Monte-Carlo loop.

Local tracking does not depend on the fusion method, so per-node estimate
sequences are cached by (scenario, run, node) and reused across sweeps.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from dmotlab.clustering import clusterer
from dmotlab.core import GlobalLabel, NodeEstimateSet
from dmotlab.fusion import bandwidth_bytes, dmot_fusion
from dmotlab.labelgraph import LabelGraph
from dmotlab.lmb import LMBParams, LMBTracker
from dmotlab.metrics import MetricParams, ospa, ospa2, timing_probe
from dmotlab.motion import step as propagate
from dmotlab.scenario import ScenarioConfig
from dmotlab.sensing import DegenerateGeometryError, generate_scan

log = logging.getLogger(__name__)

N_LABEL = 3


@dataclass(frozen=True)
class RunRecord:
    method: str
    run: int
    node: int
    step: int
    ospa: float
    ospa_loc: float
    ospa_card: float
    ospa2: float
    n_truth: int
    n_est: int
    fuse_ms: float
    bytes: int
    estimates: tuple[tuple[GlobalLabel, float, float], ...] = ()


def _rng(cfg: ScenarioConfig, run: int, stream: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(run, stream, purpose)))


# -- truth ------------------------------------------------------------------------


def _replay_state(positions, i: int, T0: float, dim: int) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    j = min(i, len(p) - 1)
    if len(p) == 1:
        v = np.zeros(2)
    elif j + 1 < len(p):
        v = (p[j + 1] - p[j]) / T0
    else:
        v = (p[j] - p[j - 1]) / T0
    x = np.array([p[j, 0], v[0], p[j, 1], v[1], 0.0])
    return x[:dim]


def simulate_truth(cfg: ScenarioConfig, run: int) -> list[dict[int, np.ndarray]]:
    """Per step, a mapping object index -> state for every alive object."""
    model = cfg.model
    dim = model.dim
    rng = _rng(cfg, run, 0, 0) if cfg.truth_noise else None
    out: list[dict[int, np.ndarray]] = [dict() for _ in range(cfg.duration)]
    for idx, obj in enumerate(cfg.objects):
        x = None
        for k in range(cfg.duration):
            if not obj.alive(k):
                if x is not None:
                    break
                continue
            if obj.positions is not None:
                i = k - obj.birth
                if i >= len(obj.positions):
                    break
                x = _replay_state(obj.positions, i, cfg.T0, dim)
            elif x is None:
                x = np.array(obj.state, dtype=float)
            else:
                x = propagate(x, model, rng)
            out[k][idx] = x
    return out


# -- local tracking ---------------------------------------------------------------

_LOCAL_CACHE: dict = {}


def clear_cache() -> None:
    _LOCAL_CACHE.clear()


def _lmb_params(cfg: ScenarioConfig) -> LMBParams:
    return LMBParams(
        gibbs_sweeps=cfg.gibbs_sweeps,
        gibbs_burn_in=min(100, cfg.gibbs_sweeps // 10),
        prune_threshold=cfg.prune_threshold,
        confirm_threshold=cfg.confirm_threshold,
    )


def local_estimates(cfg: ScenarioConfig, run: int, node: int, truth=None) -> tuple[NodeEstimateSet, ...]:
    """Estimate sets produced by one node's local tracker over the whole run."""
    key = (cfg.local_key(), run, node)
    hit = _LOCAL_CACHE.get(key)
    if hit is not None:
        return hit
    if truth is None:
        truth = simulate_truth(cfg, run)
    sensor = next(s for s in cfg.sensors if s.id == node)
    scan_rng = _rng(cfg, run, node, 0)
    tracker = LMBTracker(sensor, cfg.model, _rng(cfg, run, node, 1), _lmb_params(cfg))
    sets = []
    for k in range(cfg.duration):
        scan = generate_scan(sensor, list(truth[k].values()), scan_rng)
        sets.append(NodeEstimateSet(node, k, tuple(tracker.step(scan, k))))
    result = tuple(sets)
    _LOCAL_CACHE[key] = result
    return result


# -- broadcast and fusion -----------------------------------------------------------


def message_bytes(est_set: NodeEstimateSet, n_d: int) -> int:
    if len(est_set) == 0:
        return 0
    return bandwidth_bytes("labelled-estimates", N_LABEL, n_d, 1, len(est_set))


def broadcast_estimates(per_node: Sequence[NodeEstimateSet]) -> tuple[dict[int, tuple[NodeEstimateSet, ...]], int]:
    """Fully connected exchange: every node receives every set, its own included.

    Returns the per-node pooled snapshots and the bytes put on the network
    (each message counted once).
    """
    snapshot = tuple(sorted(per_node, key=lambda s: s.node))
    pools = {s.node: snapshot for s in snapshot}
    n_d = next((len(e.state) for s in snapshot for e in s.estimates), 4)
    total = sum(message_bytes(s, n_d) for s in snapshot)
    return pools, total


def _positions(states) -> np.ndarray:
    return np.array([[x[0], x[2]] for x in states]).reshape(-1, 2)


def fuse_run(cfg: ScenarioConfig, run: int, truth, locals_: Mapping[int, Sequence[NodeEstimateSet]],
             fuse_all: bool = False) -> list[RunRecord]:
    """Broadcast and fuse each step; score the evaluation node."""
    cluster = clusterer(cfg.clustering, cfg.epsilon, cfg.bandwidth, cfg.min_pts)
    active = cfg.active_ids()
    fusing = active if fuse_all else [cfg.eval_node]
    graphs = {n: LabelGraph(cfg.effective_w_max) for n in fusing}
    mp = MetricParams(cfg.ospa_c, cfg.ospa_p, cfg.ospa2_window)
    truth_tracks: dict[int, dict[int, np.ndarray]] = {}
    est_tracks: dict[GlobalLabel, dict[int, np.ndarray]] = {}
    records = []
    for k in range(cfg.duration):
        pools, nbytes = broadcast_estimates([locals_[n][k] for n in active])
        results = {}
        for n in fusing:
            with timing_probe() as probe:
                res = dmot_fusion(pools[n], graphs[n], cluster)
            results[n] = (res, probe.ms)
        res, ms = results[cfg.eval_node]
        truth_pos = _positions(truth[k].values())
        for idx, p in zip(truth[k], truth_pos):
            truth_tracks.setdefault(idx, {})[k] = p
        est_pos = _positions([e.state for e in res.global_estimates])
        for e, p in zip(res.global_estimates, est_pos):
            est_tracks.setdefault(e.label, {})[k] = p
        o = ospa(truth_pos, est_pos, mp)
        records.append(RunRecord(
            method=cfg.fusion, run=run, node=cfg.eval_node, step=k,
            ospa=o.total, ospa_loc=o.loc, ospa_card=o.card,
            ospa2=ospa2(truth_tracks, est_tracks, k, mp),
            n_truth=len(truth_pos), n_est=len(est_pos), fuse_ms=ms, bytes=nbytes,
            estimates=tuple((e.label, float(p[0]), float(p[1])) for e, p in zip(res.global_estimates, est_pos)),
        ))
    return records


NUMERICAL_FAILURES = (np.linalg.LinAlgError, FloatingPointError, DegenerateGeometryError)


def simulate_run(cfg: ScenarioConfig, run: int) -> list[RunRecord]:
    truth = simulate_truth(cfg, run)
    locals_ = {n: local_estimates(cfg, run, n, truth) for n in cfg.active_ids()}
    return fuse_run(cfg, run, truth, locals_)


def _safe_run(cfg: ScenarioConfig, run: int) -> list[RunRecord]:
    try:
        return simulate_run(cfg, run)
    except NUMERICAL_FAILURES as exc:
        log.warning("run %d aborted: %s", run, exc)
        return []


def run_monte_carlo(cfg: ScenarioConfig, threads: int = 1) -> list[RunRecord]:
    """All Monte-Carlo runs of ``cfg``; records ordered by (run, step).

    Each run draws from its own seed-derived streams, so the result does not
    depend on ``threads``.
    """
    cfg.validate()
    runs = range(cfg.mc_runs)
    if threads <= 1 or cfg.mc_runs <= 1:
        chunks = [_safe_run(cfg, r) for r in runs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(_safe_run, [cfg] * cfg.mc_runs, runs))
    return [rec for chunk in chunks for rec in chunk]


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    """``dataclasses.replace`` that drops ``None`` values and re-validates."""
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None}).validate()
