"""Gaussian-mixture labelled multi-Bernoulli tracker run at each sensor node.

Data association in the update is sampled with the Gibbs sampler in
:mod:`dmotlab.gibbs`; new tracks come from an adaptive birth driven by
measurements the current tracks failed to explain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from dmotlab import gibbs
from dmotlab.core import GlobalLabel, LabelledEstimate
from dmotlab.motion import CTModel, CVModel
from dmotlab.sensing import RADAR, DegenerateGeometryError, Measurement, SensorNode, wrap_angle

LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray


@dataclass
class BernoulliTrack:
    r: float
    label: GlobalLabel
    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    @classmethod
    def single(cls, r, label, mean, cov) -> "BernoulliTrack":
        mean = np.asarray(mean, dtype=float)
        return cls(r, label, np.ones(1), mean[None, :].copy(), np.asarray(cov, dtype=float)[None].copy())

    @property
    def components(self) -> list[GaussianComponent]:
        return [GaussianComponent(w, m, P) for w, m, P in zip(self.weights, self.means, self.covs)]

    def best_mean(self) -> np.ndarray:
        return self.means[int(np.argmax(self.weights))]


@dataclass
class LMBDensity:
    tracks: list[BernoulliTrack] = field(default_factory=list)
    next_alpha: int = 0

    def labels(self) -> list[GlobalLabel]:
        return [t.label for t in self.tracks]


@dataclass(frozen=True)
class LMBParams:
    p_survival: float = 0.99
    gibbs_sweeps: int = 1000
    gibbs_burn_in: int = 100
    max_hypotheses: int = 1000
    gate: float = 25.0
    prune_threshold: float = 1e-5
    confirm_threshold: float = 0.5
    max_components: int = 10
    merge_threshold: float = 4.0
    component_prune: float = 1e-5
    birth_rate: float = 0.1
    birth_r_max: float = 0.1
    birth_velocity_std: float = 15.0
    birth_turn_std: float = 0.1


# -- prediction ---------------------------------------------------------------


def lmb_predict(
    density: LMBDensity,
    model: CVModel | CTModel,
    births: list[BernoulliTrack],
    p_survival: float,
) -> LMBDensity:
    existing = set(density.labels())
    for b in births:
        if b.label in existing:
            raise ValueError(f"birth label {b.label} already in use")
        existing.add(b.label)
    tracks = []
    for t in density.tracks:
        means = np.empty_like(t.means)
        covs = np.empty_like(t.covs)
        for c in range(len(t.weights)):
            means[c], covs[c] = model.predict(t.means[c], t.covs[c])
        tracks.append(BernoulliTrack(t.r * p_survival, t.label, t.weights.copy(), means, covs))
    tracks.extend(births)
    return LMBDensity(tracks, density.next_alpha)


# -- update -------------------------------------------------------------------


def clutter_intensity(sensor: SensorNode) -> float:
    # a clutter-free sensor still needs a finite density for the log-domain costs
    return max(sensor.clutter_rate, 1e-9) / sensor.fov_volume


def _innovations(z: np.ndarray, zhat: np.ndarray, radar: bool) -> np.ndarray:
    nu = z - zhat
    if radar:
        nu[:, 2] = wrap_angle(nu[:, 2])
    return nu


@dataclass
class _ComponentUpdate:
    log_q: np.ndarray  # (m,) log-likelihood of each measurement
    gated: np.ndarray  # (m,) bool
    means: np.ndarray  # (m, d) posterior means
    cov: np.ndarray  # (d, d) posterior covariance


def _update_component(mean, cov, Z, sensor: SensorNode, gate: float) -> _ComponentUpdate:
    radar = sensor.kind == RADAR
    try:
        zhat = sensor.h(mean)
        H = sensor.jacobian(mean)
    except DegenerateGeometryError:
        # no usable linearisation on top of the sensor: the component cannot take a measurement
        m = len(Z)
        return _ComponentUpdate(np.full(m, -np.inf), np.zeros(m, bool), np.repeat(mean[None, :], m, 0), cov)
    S = H @ cov @ H.T + sensor.R
    S = 0.5 * (S + S.T)
    L = np.linalg.cholesky(S)
    K = np.linalg.solve(S, H @ cov).T
    nu = _innovations(Z, zhat[None, :], radar)
    white = np.linalg.solve(L, nu.T)
    maha = np.sum(white**2, axis=0)
    log_det = 2 * np.sum(np.log(np.diag(L)))
    log_q = -0.5 * (maha + log_det + len(zhat) * LOG_2PI)
    IKH = np.eye(len(mean)) - K @ H
    post_cov = IKH @ cov @ IKH.T + K @ sensor.R @ K.T
    return _ComponentUpdate(log_q, maha <= gate, mean[None, :] + nu @ K.T, 0.5 * (post_cov + post_cov.T))


@dataclass
class UpdateResult:
    density: LMBDensity
    assoc_prob: np.ndarray  # per-measurement association mass
    marginals: list[np.ndarray] = field(default_factory=list)


def association_costs(
    density: LMBDensity, Z: np.ndarray, sensor: SensorNode, gate: float
) -> tuple[np.ndarray, list[list[_ComponentUpdate]]]:
    """Log costs ``log eta[i, j]`` (column 0 = missed) and per-component updates."""
    n, m = len(density.tracks), Z.shape[0]
    pd = sensor.p_detect
    log_kappa = np.log(clutter_intensity(sensor))
    log_eta = np.full((n, m + 1), -np.inf)
    updates: list[list[_ComponentUpdate]] = []
    for i, t in enumerate(density.tracks):
        log_eta[i, 0] = np.log(max(1.0 - t.r * pd, 1e-300))
        comps = []
        if m and pd > 0 and t.r > 0:
            log_lik = np.full((len(t.weights), m), -np.inf)
            for c in range(len(t.weights)):
                cu = _update_component(t.means[c], t.covs[c], Z, sensor, gate)
                comps.append(cu)
                log_lik[c] = np.where(cu.gated, np.log(t.weights[c]) + cu.log_q, -np.inf)
            top = np.max(log_lik, axis=0)
            finite = np.isfinite(top)
            total = np.full(m, -np.inf)
            total[finite] = top[finite] + np.log(np.sum(np.exp(log_lik[:, finite] - top[finite]), axis=0))
            log_eta[i, 1:] = np.log(t.r * pd) + total - log_kappa
        updates.append(comps)
    return log_eta, updates


def _reduce_mixture(weights, means, covs, params: LMBParams):
    keep = weights >= params.component_prune * weights.max()
    weights, means, covs = weights[keep], means[keep], covs[keep]
    order = np.argsort(-weights, kind="stable")
    remaining = list(order)
    out_w, out_m, out_P = [], [], []
    while remaining:
        lead = remaining[0]
        Pinv = np.linalg.inv(covs[lead])
        d = means[remaining] - means[lead]
        maha = np.einsum("ij,jk,ik->i", d, Pinv, d)
        group = [remaining[k] for k in range(len(remaining)) if maha[k] <= params.merge_threshold]
        w = weights[group]
        wsum = w.sum()
        mu = (w[:, None] * means[group]).sum(axis=0) / wsum
        dm = means[group] - mu
        P = (w[:, None, None] * (covs[group] + dm[:, :, None] * dm[:, None, :])).sum(axis=0) / wsum
        out_w.append(wsum)
        out_m.append(mu)
        out_P.append(0.5 * (P + P.T))
        remaining = [k for k in remaining if k not in group]
    out_w = np.array(out_w)
    idx = np.argsort(-out_w, kind="stable")[: params.max_components]
    out_w = out_w[idx]
    return out_w / out_w.sum(), np.array(out_m)[idx], np.array(out_P)[idx]


def lmb_update(
    density: LMBDensity,
    scan: list[Measurement],
    sensor: SensorNode,
    rng: np.random.Generator,
    params: LMBParams = LMBParams(),
) -> UpdateResult:
    """Bayes update of every Bernoulli track against one scan."""
    for z in scan:
        if z.origin_sensor != sensor.id:
            raise ValueError("scan contains measurements from another sensor")
    n, m = len(density.tracks), len(scan)
    pd = sensor.p_detect
    Z = np.array([z.values for z in scan], dtype=float).reshape(m, sensor.meas_dim)
    log_eta, updates = association_costs(density, Z, sensor, params.gate)

    P = np.zeros((n, m + 1))
    P[:, 0] = 1.0
    gated_tracks = np.flatnonzero(np.any(np.isfinite(log_eta[:, 1:]), axis=1)) if m else np.array([], int)
    if gated_tracks.size:
        eta = gibbs.normalise_rows(log_eta[gated_tracks])
        maps, w = gibbs.hypotheses(
            eta, params.gibbs_sweeps, rng, params.gibbs_burn_in, params.max_hypotheses
        )
        P[gated_tracks] = gibbs.association_marginals(maps, w, m)

    tracks = []
    for i, t in enumerate(density.tracks):
        r_miss = t.r * (1 - pd) / max(1 - t.r * pd, 1e-300)
        mass = [P[i, 0] * r_miss]
        W, M, C = [t.weights * mass[0]], [t.means], [t.covs]
        for j in np.flatnonzero(P[i, 1:] > 0):
            comps = updates[i]
            log_w = np.array([
                np.log(t.weights[c]) + comps[c].log_q[j] if comps[c].gated[j] else -np.inf
                for c in range(len(comps))
            ])
            cw = np.exp(log_w - log_w.max())
            cw /= cw.sum()
            mass.append(P[i, j + 1])
            W.append(cw * P[i, j + 1])
            M.append(np.array([cu.means[j] for cu in comps]))
            C.append(np.array([cu.cov for cu in comps]))
        r_new = float(min(sum(mass), 1.0))
        weights = np.concatenate(W)
        if r_new <= 0 or weights.sum() <= 0:
            tracks.append(BernoulliTrack(0.0, t.label, t.weights, t.means, t.covs))
            continue
        weights, means, covs = _reduce_mixture(weights / weights.sum(), np.concatenate(M), np.concatenate(C), params)
        tracks.append(BernoulliTrack(r_new, t.label, weights, means, covs))

    assoc = np.clip(P[:, 1:].sum(axis=0), 0.0, 1.0) if n else np.zeros(m)
    return UpdateResult(LMBDensity(tracks, density.next_alpha), assoc, [P[i] for i in range(n)])


# -- birth --------------------------------------------------------------------


def birth_state(z: np.ndarray, sensor: SensorNode, dim: int, params: LMBParams):
    """Gaussian birth prior centred on a measurement; velocity is unobserved."""
    mean = np.zeros(dim)
    cov = np.zeros((dim, dim))
    if sensor.kind == RADAR:
        rng_, az = z[0], z[2]
        mean[0] = sensor.position[0] + rng_ * np.cos(az)
        mean[2] = sensor.position[1] + rng_ * np.sin(az)
        J = np.array([[np.cos(az), -rng_ * np.sin(az)], [np.sin(az), rng_ * np.cos(az)]])
        Rp = np.diag([sensor.noise_std[0] ** 2, sensor.noise_std[2] ** 2])
        pos_cov = J @ Rp @ J.T
    else:
        mean[0], mean[2] = z[0], z[1]
        pos_cov = np.diag(np.square(sensor.noise_std))
    idx = [0, 2]
    cov[np.ix_(idx, idx)] = pos_cov
    cov[1, 1] = cov[3, 3] = params.birth_velocity_std**2
    if dim == 5:
        cov[4, 4] = params.birth_turn_std**2
    return mean, cov


def adaptive_birth(
    scan: list[Measurement],
    assoc_prob,
    sensor: SensorNode,
    time: int,
    next_alpha: int,
    dim: int = 4,
    params: LMBParams = LMBParams(),
) -> tuple[list[BernoulliTrack], int]:
    """Birth tracks for step ``time + 1``; returns them with the advanced alpha counter."""
    assoc_prob = np.asarray(assoc_prob, dtype=float)
    if np.any((assoc_prob < 0) | (assoc_prob > 1)):
        raise ValueError("association masses must lie in [0, 1]")
    unexplained = 1.0 - assoc_prob
    total = unexplained.sum()
    births = []
    for z, u in zip(scan, unexplained):
        r = 0.0 if total <= 0 else min(params.birth_r_max, params.birth_rate * u / total)
        if r <= params.prune_threshold:
            continue
        mean, cov = birth_state(z.values, sensor, dim, params)
        label = GlobalLabel(time + 1, next_alpha, sensor.id)
        next_alpha += 1
        births.append(BernoulliTrack.single(r, label, mean, cov))
    return births, next_alpha


# -- pruning and estimates -----------------------------------------------------


def prune_and_extract(
    density: LMBDensity, prune_threshold: float = 1e-5, confirm_threshold: float = 0.5
) -> tuple[LMBDensity, list[LabelledEstimate]]:
    if not 0 <= prune_threshold < confirm_threshold <= 1:
        raise ValueError("need 0 <= prune < confirm <= 1")
    kept = [t for t in density.tracks if t.r >= prune_threshold]
    estimates = [LabelledEstimate(t.best_mean(), t.label) for t in kept if t.r > confirm_threshold]
    return LMBDensity(kept, density.next_alpha), estimates


# -- tracker -------------------------------------------------------------------


class LMBTracker:
    """Local tracker for one node: predict, update, birth, prune, extract."""

    def __init__(self, sensor: SensorNode, model, rng: np.random.Generator, params: LMBParams = LMBParams()):
        self.sensor = sensor
        self.model = model
        self.rng = rng
        self.params = params
        self.density = LMBDensity()
        self._births: list[BernoulliTrack] = []

    def step(self, scan: list[Measurement], k: int) -> list[LabelledEstimate]:
        p = self.params
        predicted = lmb_predict(self.density, self.model, self._births, p.p_survival)
        result = lmb_update(predicted, scan, self.sensor, self.rng, p)
        self._births, next_alpha = adaptive_birth(
            scan, result.assoc_prob, self.sensor, k, result.density.next_alpha, self.model.dim, p
        )
        density = replace(result.density, next_alpha=next_alpha)
        self.density, estimates = prune_and_extract(density, p.prune_threshold, p.confirm_threshold)
        return sorted(estimates, key=lambda e: e.label.sort_key())
