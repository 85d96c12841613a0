"""Evaluation quantities computed from a :class:`TrajectoryLog`."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from spgpnav import kernels
from spgpnav.dynamics import AgentState, ControllerGains, nominal_control, step_agent


@dataclass
class TrajectoryLog:
    """Per-step record of one trial.

    ``positions``/``velocities``/``modes``/``goals`` hold T+1 samples (the state
    at each step boundary); ``controls``/``nominals`` hold the T commands applied
    between them. ``events`` is a list of ``(step, kind, agent_index, payload)``.
    """

    dt: float
    t_max: int
    ids: list[int]
    original_goals: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    controls: np.ndarray
    nominals: np.ndarray
    modes: np.ndarray
    goals: np.ndarray
    min_pair_h: np.ndarray
    min_obstacle_h: np.ndarray
    events: list[tuple] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return self.controls.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.positions.shape[0]) * self.dt

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e[1] == kind)


@dataclass
class TrialResult:
    success: bool
    collision: bool
    makespan: list[int]
    avg_delta_v: list[float]
    path_deviation: list[float]
    deadlock_count: int
    perturb_count: int = 0
    qp_infeasible_count: int = 0
    agents_arrived: int = 0
    min_pair_h: float = math.inf
    steps: int = 0


def _arrived(log: TrajectoryLog, eps_goal: float) -> np.ndarray:
    d = log.positions - log.original_goals[None, :, :]
    return np.hypot(d[..., 0], d[..., 1]) <= eps_goal


def collided(log: TrajectoryLog) -> bool:
    return bool(np.min(log.min_pair_h) < 0.0 or np.min(log.min_obstacle_h) < 0.0)


def success(log: TrajectoryLog, eps_goal: float) -> bool:
    """All agents end within ``eps_goal`` of their original goals, collision-free."""
    if collided(log):
        return False
    final = _arrived(log, eps_goal)[-1]
    if not final.all():
        return False
    # a perturbation still in progress at the end means the deadlock was not resolved
    return not bool(np.any(log.modes[-1] != 0))


def avg_delta_v(log: TrajectoryLog, agent: int) -> float:
    """Mean per-step magnitude of the velocity change of one agent (by index)."""
    v = log.velocities[:, agent, :]
    if v.shape[0] < 2:
        raise ValueError("need at least two samples")
    dv = np.diff(v, axis=0)
    return float(np.mean(np.hypot(dv[:, 0], dv[:, 1])))


def hausdorff(A, B) -> float:
    A = np.ascontiguousarray(A, dtype=float).reshape(-1, 2)
    B = np.ascontiguousarray(B, dtype=float).reshape(-1, 2)
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("hausdorff distance needs two non-empty point sequences")
    return kernels.hausdorff(A, B)


def nominal_trajectory(state: AgentState, gains: ControllerGains, dt: float, t_max: int,
                       eps_goal: float) -> np.ndarray:
    """Positions of the agent driving alone under the nominal controller."""
    pts = [state.position]
    for _ in range(t_max):
        if math.dist(state.position, state.goal) <= eps_goal:
            break
        state = step_agent(state, nominal_control(state, gains), dt)
        pts.append(state.position)
    return np.array(pts, dtype=float)


def makespan(log: TrajectoryLog, agent: int, eps_goal: float) -> int:
    """First step index at which the agent is within ``eps_goal``; ``t_max + 1`` if never."""
    hit = np.nonzero(_arrived(log, eps_goal)[:, agent])[0]
    return int(hit[0]) if len(hit) else log.t_max + 1
