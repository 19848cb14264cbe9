"""Object dynamics: constant velocity and constant turn with unknown turn rate.

State ordering is ``[x, xdot, y, ydot]`` (CV) or ``[x, xdot, y, ydot, turn_rate]`` (CT).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMALL_TURN = 1e-6


@dataclass(frozen=True)
class CVModel:
    T0: float = 1.0
    sigma_cv: float = 5.0

    dim = 4

    def __post_init__(self):
        if self.T0 <= 0:
            raise ValueError("T0 must be positive")
        if self.sigma_cv < 0:
            raise ValueError("sigma_cv must be non-negative")

    @property
    def F(self) -> np.ndarray:
        return np.kron(np.eye(2), np.array([[1.0, self.T0], [0.0, 1.0]]))

    @property
    def Q(self) -> np.ndarray:
        T = self.T0
        block = np.array([[T**3 / 3, T**2 / 2], [T**2 / 2, T]])
        return self.sigma_cv**2 * np.kron(np.eye(2), block)

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        F = self.F
        return F @ mean, F @ cov @ F.T + self.Q


@dataclass(frozen=True)
class CTModel:
    T0: float = 1.0
    sigma_w: float = 5.0
    sigma_q: float = np.pi / 60

    dim = 5

    def __post_init__(self):
        if self.T0 <= 0:
            raise ValueError("T0 must be positive")
        if self.sigma_w < 0 or self.sigma_q < 0:
            raise ValueError("noise intensities must be non-negative")

    def F(self, theta: float) -> np.ndarray:
        T = self.T0
        if abs(theta) < SMALL_TURN:
            # second-order series keeps the map smooth through theta = 0
            a = T - theta**2 * T**3 / 6
            b = theta * T**2 / 2
        else:
            a = np.sin(theta * T) / theta
            b = (1 - np.cos(theta * T)) / theta
        c, s = np.cos(theta * T), np.sin(theta * T)
        return np.array(
            [
                [1.0, a, 0.0, -b],
                [0.0, c, 0.0, -s],
                [0.0, b, 1.0, a],
                [0.0, s, 0.0, c],
            ]
        )

    @property
    def G(self) -> np.ndarray:
        # last row is T0**2 as printed in the source model, not T0
        T = self.T0
        return np.array([[T**2 / 2, 0.0], [T, 0.0], [0.0, T**2 / 2], [0.0, T**2]])

    @property
    def Q(self) -> np.ndarray:
        Q = np.zeros((5, 5))
        G = self.G
        Q[:4, :4] = self.sigma_w**2 * G @ G.T
        Q[4, 4] = (self.T0 * self.sigma_q) ** 2
        return Q

    def transition(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(5)
        out[:4] = self.F(x[4]) @ x[:4]
        out[4] = x[4]
        return out

    def jacobian(self, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
        J = np.zeros((5, 5))
        J[:4, :4] = self.F(x[4])
        J[4, 4] = 1.0
        fp = self.F(x[4] + eps) @ x[:4]
        fm = self.F(x[4] - eps) @ x[:4]
        J[:4, 4] = (fp - fm) / (2 * eps)
        return J

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        J = self.jacobian(mean)
        return self.transition(mean), J @ cov @ J.T + self.Q


def _check_dim(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise ValueError(f"expected a {dim}-dimensional state, got shape {x.shape}")
    return x


def cv_step(x, model: CVModel, rng: np.random.Generator | None = None) -> np.ndarray:
    """Propagate one step under constant velocity, optionally with process noise."""
    x = _check_dim(x, 4)
    out = model.F @ x
    if rng is not None and model.sigma_cv > 0:
        out = out + rng.multivariate_normal(np.zeros(4), model.Q)
    return out


def ct_step(x, model: CTModel, rng: np.random.Generator | None = None) -> np.ndarray:
    """Propagate one step under constant turn; the turn rate is a random walk."""
    x = _check_dim(x, 5)
    out = model.transition(x)
    if rng is not None:
        w = rng.normal(0.0, model.sigma_w, size=2)
        out[:4] += model.G @ w
        out[4] += model.T0 * rng.normal(0.0, model.sigma_q)
    return out


def step(x, model, rng=None) -> np.ndarray:
    if isinstance(model, CTModel):
        return ct_step(x, model, rng)
    return cv_step(x, model, rng)
