"""Limited field-of-view sensors: 2D radar (range, range-rate, azimuth) and position."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CLUTTER_RANGE_RATE = 50.0  # m/s, support of clutter range-rate
RADAR = "radar"
POSITION = "position"


class DegenerateGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class SensorNode:
    id: int
    position: tuple[float, float]
    kind: str
    max_range: float
    p_detect: float
    clutter_rate: float
    noise_std: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if self.kind not in (RADAR, POSITION):
            raise ValueError(f"unknown sensor kind {self.kind!r}")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if not 0.0 <= self.p_detect <= 1.0:
            raise ValueError("p_detect must lie in [0, 1]")
        if self.clutter_rate < 0:
            raise ValueError("clutter_rate must be non-negative")
        std = self.noise_std or ((10.0, 2.0, np.pi / 180) if self.kind == RADAR else (10.0,))
        std = tuple(float(v) for v in std)
        if self.kind == POSITION and len(std) == 1:
            std = std * 2
        if len(std) != self.meas_dim:
            raise ValueError(f"{self.kind} sensor needs {self.meas_dim} noise stds, got {len(std)}")
        object.__setattr__(self, "noise_std", std)

    @property
    def meas_dim(self) -> int:
        return 3 if self.kind == RADAR else 2

    @property
    def R(self) -> np.ndarray:
        return np.diag(np.square(self.noise_std))

    @property
    def fov_volume(self) -> float:
        """Measurement-space volume the clutter is spread over."""
        if self.kind == RADAR:
            return self.max_range * 2 * np.pi * 2 * CLUTTER_RANGE_RATE
        return np.pi * self.max_range**2

    def in_fov(self, x) -> bool:
        d = np.hypot(x[0] - self.position[0], x[2] - self.position[1])
        return bool(d < self.max_range)

    def h(self, x) -> np.ndarray:
        return h_radar(x, self) if self.kind == RADAR else h_pos(x, self)

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        H = np.zeros((self.meas_dim, x.size))
        if self.kind == POSITION:
            H[0, 0] = H[1, 2] = 1.0
            return H
        dx, vx, dy, vy = x[0] - self.position[0], x[1], x[2] - self.position[1], x[3]
        r2 = dx * dx + dy * dy
        r = np.sqrt(r2)
        if r == 0:
            raise DegenerateGeometryError("object is exactly at the sensor position")
        rr = (dx * vx + dy * vy) / r
        H[0, 0], H[0, 2] = dx / r, dy / r
        H[1, 0] = vx / r - rr * dx / r2
        H[1, 2] = vy / r - rr * dy / r2
        H[1, 1], H[1, 3] = dx / r, dy / r
        H[2, 0], H[2, 2] = -dy / r2, dx / r2
        return H


@dataclass(frozen=True, eq=False)
class Measurement:
    values: np.ndarray
    origin_sensor: int

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    out = np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return out if out.ndim else float(out)


def h_radar(x, sensor: SensorNode) -> np.ndarray:
    """Range, range-rate and azimuth of ``x`` relative to the sensor."""
    if sensor.kind != RADAR:
        raise ValueError("h_radar needs a radar sensor")
    dx = x[0] - sensor.position[0]
    dy = x[2] - sensor.position[1]
    r = np.hypot(dx, dy)
    if r == 0:
        raise DegenerateGeometryError("object is exactly at the sensor position")
    return np.array([r, (dx * x[1] + dy * x[3]) / r, wrap_angle(np.arctan2(dy, dx))])


def h_pos(x, sensor: SensorNode | None = None) -> np.ndarray:
    return np.array([x[0], x[2]], dtype=float)


def sample_clutter(sensor: SensorNode, n: int, rng: np.random.Generator) -> np.ndarray:
    if sensor.kind == RADAR:
        r = rng.uniform(0.0, sensor.max_range, n)
        rr = rng.uniform(-CLUTTER_RANGE_RATE, CLUTTER_RANGE_RATE, n)
        az = wrap_angle(rng.uniform(-np.pi, np.pi, n))
        return np.column_stack([r, rr, az])
    # uniform over the disc
    r = sensor.max_range * np.sqrt(rng.uniform(0.0, 1.0, n))
    phi = rng.uniform(-np.pi, np.pi, n)
    return np.column_stack(
        [sensor.position[0] + r * np.cos(phi), sensor.position[1] + r * np.sin(phi)]
    )


def generate_scan(sensor: SensorNode, truth, rng: np.random.Generator) -> list[Measurement]:
    """One scan: noisy detections of in-range objects followed by Poisson clutter."""
    scan = []
    std = np.asarray(sensor.noise_std)
    for x in truth:
        if not sensor.in_fov(x):
            continue
        if rng.uniform() >= sensor.p_detect:
            continue
        noise = rng.normal(0.0, 1.0, sensor.meas_dim) * std
        try:
            z = sensor.h(x) + noise
        except DegenerateGeometryError:
            continue  # bearing undefined at zero range: no return
        if sensor.kind == RADAR:
            z[0] = abs(z[0])
            z[2] = wrap_angle(z[2])
        scan.append(Measurement(z, sensor.id))
    n_clutter = rng.poisson(sensor.clutter_rate)
    for z in sample_clutter(sensor, n_clutter, rng):
        scan.append(Measurement(z, sensor.id))
    return scan
