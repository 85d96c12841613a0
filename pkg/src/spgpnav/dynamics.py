"""Double-integrator agent model and the nominal goal-seeking controller."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

Vec2 = tuple[float, float]

DEFAULT_DT = 0.05
DEFAULT_T_MAX = 2000
DEFAULT_ACCEL_LIMIT = 1.0


class InvalidStateError(ValueError):
    """Raised when a state or control contains non-finite or out-of-range values."""


def _vec2(value) -> Vec2:
    x, y = value
    return (float(x), float(y))


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class AgentState:
    """State of one agent: kinematics plus the physical limits and goal."""

    id: int
    position: Vec2
    velocity: Vec2
    safety_radius: float
    accel_limit: float
    goal: Vec2

    def __post_init__(self):
        object.__setattr__(self, "position", _vec2(self.position))
        object.__setattr__(self, "velocity", _vec2(self.velocity))
        object.__setattr__(self, "goal", _vec2(self.goal))
        object.__setattr__(self, "safety_radius", float(self.safety_radius))
        object.__setattr__(self, "accel_limit", float(self.accel_limit))
        if not _finite(*self.position, *self.velocity, *self.goal,
                       self.safety_radius, self.accel_limit):
            raise InvalidStateError(f"agent {self.id}: non-finite state")
        if self.safety_radius <= 0:
            raise InvalidStateError(f"agent {self.id}: safety_radius must be > 0")
        if self.accel_limit <= 0:
            raise InvalidStateError(f"agent {self.id}: accel_limit must be > 0")

    def with_goal(self, goal) -> AgentState:
        return replace(self, goal=_vec2(goal))


@dataclass(frozen=True)
class ControllerGains:
    kp: float = 1.0
    kd: float = 2.0

    def __post_init__(self):
        if not (self.kp > 0 and self.kd > 0):
            raise ValueError("controller gains must be positive")


def clamp_to_ball(u, alpha: float) -> np.ndarray:
    """Radially project ``u`` onto the disk of radius ``alpha``."""
    u = np.asarray(u, dtype=float)
    n = math.hypot(u[0], u[1])
    if n <= alpha:
        return u.copy()
    out = u * (alpha / n)
    # guard against the scaled norm rounding a hair above alpha
    while math.hypot(out[0], out[1]) > alpha:
        out = np.nextafter(out, 0.0)
    return out


def step_agent(state: AgentState, u, dt: float) -> AgentState:
    """Advance one agent by ``dt`` with semi-implicit Euler (velocity first)."""
    u = np.asarray(u, dtype=float)
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidStateError(f"dt must be positive and finite, got {dt!r}")
    if not _finite(*u):
        raise InvalidStateError(f"agent {state.id}: non-finite control {u!r}")
    vx = state.velocity[0] + u[0] * dt
    vy = state.velocity[1] + u[1] * dt
    px = state.position[0] + vx * dt
    py = state.position[1] + vy * dt
    return replace(state, position=(px, py), velocity=(vx, vy))


def nominal_control(state: AgentState, gains: ControllerGains) -> np.ndarray:
    """Saturated PD law pulling the agent toward its current goal."""
    raw = (
        gains.kp * (state.goal[0] - state.position[0]) - gains.kd * state.velocity[0],
        gains.kp * (state.goal[1] - state.position[1]) - gains.kd * state.velocity[1],
    )
    return clamp_to_ball(raw, state.accel_limit)


def nominal_controls(positions: np.ndarray, velocities: np.ndarray, goals: np.ndarray,
                     alphas: np.ndarray, gains: ControllerGains) -> np.ndarray:
    """Vectorized :func:`nominal_control` over an (N, 2) batch."""
    raw = gains.kp * (goals - positions) - gains.kd * velocities
    out = np.empty_like(raw)
    for i in range(raw.shape[0]):
        out[i] = clamp_to_ball(raw[i], alphas[i])
    return out
