"""Scenario configuration, built-in presets, JSON round-tripping and trajectory ingestion."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from dmotlab.motion import CTModel, CVModel
from dmotlab.sensing import POSITION, RADAR, SensorNode

FUSION_METHODS = (
    "cdp-wgl",
    "dbscan-wgl",
    "meanshift-wgl",
    "cdp-unweighted",
    "dbscan-unweighted",
    "meanshift-unweighted",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectSpec:
    """A scripted object: alive for steps ``birth <= k < death``.

    With ``positions`` set the object replays a fixed trajectory (one 2D
    point per alive step) instead of being propagated by the dynamics.
    """

    birth: int
    state: tuple[float, ...]
    death: int | None = None
    positions: tuple[tuple[float, float], ...] | None = None

    def alive(self, k: int) -> bool:
        return self.birth <= k and (self.death is None or k < self.death)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    arena: tuple[float, float, float, float] = (-1000.0, 1000.0, -1000.0, 1000.0)
    duration: int = 40
    T0: float = 1.0
    dynamics: str = "cv"
    sigma_cv: float = 5.0
    sigma_w: float = 5.0
    sigma_q: float = float(np.pi / 60)
    truth_noise: bool = False
    sensors: tuple[SensorNode, ...] = ()
    objects: tuple[ObjectSpec, ...] = ()
    trajectory_file: str | None = None
    speedup: float = 10.0
    mc_runs: int = 1
    seed: int = 0
    fusion: str = "cdp-wgl"
    epsilon: float | None = None
    bandwidth: float | None = None
    min_pts: int = 1
    w_max: int = 5
    n_nodes: int | None = None
    eval_node: int = 1
    confirm_threshold: float = 0.5
    prune_threshold: float = 1e-5
    gibbs_sweeps: int = 1000
    ospa_c: float = 100.0
    ospa_p: float = 1.0
    ospa2_window: int = 10

    def validate(self) -> "ScenarioConfig":
        if self.duration < 1:
            raise ConfigError("duration: must be >= 1")
        if not self.sensors:
            raise ConfigError("sensors: at least one sensor is required")
        ids = [s.id for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise ConfigError("sensors: duplicate sensor ids")
        if self.dynamics not in ("cv", "ct"):
            raise ConfigError(f"dynamics: unknown model {self.dynamics!r}")
        if self.fusion not in FUSION_METHODS:
            raise ConfigError(f"fusion: unknown method {self.fusion!r}; expected one of {', '.join(FUSION_METHODS)}")
        if self.fusion.startswith("dbscan") and self.epsilon is None:
            raise ConfigError("epsilon: required by method " + self.fusion)
        if self.fusion.startswith("meanshift") and self.bandwidth is None:
            raise ConfigError("bandwidth: required by method " + self.fusion)
        if self.mc_runs < 0:
            raise ConfigError("mc_runs: must be non-negative")
        if self.w_max < 0:
            raise ConfigError("w_max: must be non-negative")
        if self.n_nodes is not None and not 1 <= self.n_nodes <= len(self.sensors):
            raise ConfigError("n_nodes: must lie between 1 and the number of sensors")
        if self.eval_node not in self.active_ids():
            raise ConfigError("eval_node: not among the connected nodes")
        dim = 5 if self.dynamics == "ct" else 4
        for i, o in enumerate(self.objects):
            if len(o.state) != dim:
                raise ConfigError(f"objects[{i}].state: expected {dim} components")
        return self

    # -- derived -------------------------------------------------------------

    @property
    def model(self) -> CVModel | CTModel:
        if self.dynamics == "ct":
            return CTModel(self.T0, self.sigma_w, self.sigma_q)
        return CVModel(self.T0, self.sigma_cv)

    @property
    def clustering(self) -> str:
        return self.fusion.split("-")[0]

    @property
    def effective_w_max(self) -> int:
        return 0 if self.fusion.endswith("unweighted") else self.w_max

    def active_ids(self) -> list[int]:
        ids = sorted(s.id for s in self.sensors)
        return ids if self.n_nodes is None else ids[: self.n_nodes]

    def local_key(self) -> "ScenarioConfig":
        """Config with fusion-only fields cleared; equal keys give identical local tracking."""
        return replace(self, fusion="cdp-wgl", epsilon=None, bandwidth=None, min_pts=1, w_max=5,
                       n_nodes=None, eval_node=min(s.id for s in self.sensors), mc_runs=0, name="")


# -- JSON -------------------------------------------------------------------------


def to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["sensors"] = [asdict(s) for s in cfg.sensors]
    d["objects"] = [asdict(o) for o in cfg.objects]
    return d


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def from_dict(d: dict) -> ScenarioConfig:
    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}")
    kw = {}
    for k, v in d.items():
        if k == "sensors":
            try:
                kw[k] = tuple(SensorNode(**{kk: _tuplify(vv) for kk, vv in s.items()}) for s in v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"sensors: {exc}") from exc
        elif k == "objects":
            try:
                kw[k] = tuple(ObjectSpec(**{kk: _tuplify(vv) for kk, vv in o.items()}) for o in v)
            except TypeError as exc:
                raise ConfigError(f"objects: {exc}") from exc
        else:
            kw[k] = _tuplify(v)
    cfg = ScenarioConfig(**kw)
    if cfg.trajectory_file and not cfg.objects:
        cfg = replace(cfg, objects=ingest_trajectories(cfg.trajectory_file, cfg.speedup, cfg.T0))
    return cfg.validate()


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(to_dict(cfg), indent=2))


def load_scenario(path) -> ScenarioConfig:
    """Load a JSON scenario file, or a preset when ``path`` names one."""
    if str(path) in PRESETS and not Path(path).exists():
        return preset(str(path))
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if "preset" in data:
        base = to_dict(preset(data.pop("preset")))
        base.update(data)
        data = base
    return from_dict(data)


# -- trajectories ---------------------------------------------------------------


def ingest_trajectories(path, speedup: float = 10.0, T0: float = 1.0) -> tuple[ObjectSpec, ...]:
    """Turn a ``time,track_id,x,y`` CSV into scripted objects sampled every ``T0``.

    Timestamps are divided by ``speedup`` and shifted so the earliest sample is
    time 0; each track is linearly interpolated at multiples of ``T0`` and its
    velocity taken from finite differences.
    """
    if speedup <= 0:
        raise ConfigError("speedup must be positive")
    tracks: dict[str, list[tuple[float, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"time", "track_id", "x", "y"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected header time,track_id,x,y")
        for row in reader:
            tracks.setdefault(row["track_id"], []).append((float(row["time"]), float(row["x"]), float(row["y"])))
    if not tracks:
        raise ConfigError(f"{path}: no trajectory rows")
    t0 = min(p[0] for pts in tracks.values() for p in pts)
    out = []
    for tid, pts in tracks.items():
        if len(pts) < 2:
            raise ConfigError(f"{path}: track {tid} has fewer than 2 points")
        t = np.array([p[0] for p in pts])
        if np.any(np.diff(t) <= 0):
            raise ConfigError(f"{path}: track {tid} times are not strictly increasing")
        t = (t - t0) / speedup
        x = np.array([p[1] for p in pts])
        y = np.array([p[2] for p in pts])
        first = int(np.ceil(t[0] / T0 - 1e-9))
        last = int(np.floor(t[-1] / T0 + 1e-9))
        if last <= first:
            continue
        grid = np.arange(first, last + 1) * T0
        gx, gy = np.interp(grid, t, x), np.interp(grid, t, y)
        vx = np.gradient(gx, T0) if len(grid) > 2 else np.full(len(grid), (gx[-1] - gx[0]) / T0)
        vy = np.gradient(gy, T0) if len(grid) > 2 else np.full(len(grid), (gy[-1] - gy[0]) / T0)
        state = (float(gx[0]), float(vx[0]), float(gy[0]), float(vy[0]), 0.0)
        out.append(ObjectSpec(first, state, last + 1, tuple((float(a), float(b)) for a, b in zip(gx, gy))))
    return tuple(out)


# -- presets --------------------------------------------------------------------


def radar(id, pos) -> SensorNode:
    return SensorNode(id, pos, RADAR, 150.0, 0.98, 0.1, (10.0, 2.0, float(np.pi / 180)))


def position_sensor(id, pos, max_range=300.0, p_detect=0.7, clutter=1.0) -> SensorNode:
    return SensorNode(id, pos, POSITION, max_range, p_detect, clutter, (10.0, 10.0))


def grid_sensors(n_side: int, spacing: float, kinds=("position", "radar")) -> tuple[SensorNode, ...]:
    """Row-major sensor grid centred on the origin, kinds alternating."""
    offs = (np.arange(n_side) - (n_side - 1) / 2) * spacing
    out = []
    for r, y in enumerate(offs):
        for c, x in enumerate(offs):
            i = r * n_side + c
            kind = kinds[i % len(kinds)]
            make = radar if kind == RADAR else position_sensor
            out.append(make(i + 1, (float(x), float(y))))
    return tuple(out)


def _straight_objects(n, arena, duration, rng, speed=(5.0, 12.0), birth_max=12, life=(25, 40), margin=50.0):
    xmin, xmax, ymin, ymax = arena
    objs = []
    while len(objs) < n:
        birth = int(rng.integers(0, birth_max + 1))
        death = min(duration, birth + int(rng.integers(life[0], life[1] + 1)))
        p = rng.uniform([xmin + margin, ymin + margin], [xmax - margin, ymax - margin])
        heading = rng.uniform(-np.pi, np.pi)
        v = rng.uniform(*speed) * np.array([np.cos(heading), np.sin(heading)])
        end = p + v * (death - 1 - birth)
        if not (xmin + margin <= end[0] <= xmax - margin and ymin + margin <= end[1] <= ymax - margin):
            continue
        objs.append(ObjectSpec(birth, (float(p[0]), float(v[0]), float(p[1]), float(v[1])),
                               None if death >= duration else death))
    return tuple(objs)


def _hetero(name, n_side, n_objects, half, duration, seed) -> ScenarioConfig:
    arena = (-half, half, -half, half)
    rng = np.random.default_rng(seed)
    return ScenarioConfig(
        name=name,
        arena=arena,
        duration=duration,
        sensors=grid_sensors(n_side, 2 * half / n_side),
        objects=_straight_objects(n_objects, arena, duration, rng),
        mc_runs=20,
        epsilon=30.0,
        bandwidth=50.0,
    )


def _crossing(half_angle: float = np.pi / 4) -> ScenarioConfig:
    """Pairs of objects whose paths cross inside shared coverage.

    Truth is straight-line, so the filter runs with a small process noise;
    otherwise local tracks swap at the crossings and mask the fusion effects
    this preset is meant to expose.
    """
    objs = []
    duration = 40
    centres = [(-150.0, -150.0, 14), (150.0, -150.0, 20), (-150.0, 150.0, 26), (150.0, 150.0, 18),
               (0.0, 0.0, 22)]
    for j, (cx, cy, tc) in enumerate(centres):
        speed = 8.0
        for sgn, ang in ((1, half_angle + j * 0.3), (-1, -half_angle + j * 0.3)):
            v = speed * np.array([np.cos(ang), np.sin(ang)]) * sgn
            birth = max(0, tc - 12 - j)
            p = np.array([cx, cy]) - v * (tc - birth)
            objs.append(ObjectSpec(birth, (float(p[0]), float(v[0]), float(p[1]), float(v[1]))))
    return ScenarioConfig(
        name="crossing",
        arena=(-400.0, 400.0, -400.0, 400.0),
        duration=duration,
        sigma_cv=1.0,
        sensors=grid_sensors(3, 200.0),
        objects=tuple(objs),
        mc_runs=20,
        epsilon=30.0,
        bandwidth=50.0,
    )


def _taxi() -> ScenarioConfig:
    path = resources.files("dmotlab").joinpath("data/synthetic_taxi.csv")
    sensors = []
    xs = np.linspace(-1500, 1500, 4)
    ys = np.linspace(-1000, 1000, 3)
    for y in ys:
        for x in xs:
            sensors.append(position_sensor(len(sensors) + 1, (float(x), float(y)), 900.0, 0.9, 10.0))
    return ScenarioConfig(
        name="taxi",
        arena=(-2000.0, 2000.0, -1500.0, 1500.0),
        duration=60,
        dynamics="ct",
        sensors=tuple(sensors),
        trajectory_file=str(path),
        speedup=10.0,
        mc_runs=5,
        epsilon=250.0,
        bandwidth=50.0,
    )


PRESETS = {
    "hetero-tiny": lambda: _hetero("hetero-tiny", 3, 5, 300.0, 40, 7),
    "hetero-small": lambda: _hetero("hetero-small", 5, 8, 500.0, 40, 11),
    "hetero-medium": lambda: _hetero("hetero-medium", 7, 10, 700.0, 50, 13),
    "crossing": _crossing,
    "taxi": _taxi,
}


def preset(name: str) -> ScenarioConfig:
    try:
        cfg = PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
    if cfg.trajectory_file and not cfg.objects:
        cfg = replace(cfg, objects=ingest_trajectories(cfg.trajectory_file, cfg.speedup, cfg.T0))
    return cfg.validate()
