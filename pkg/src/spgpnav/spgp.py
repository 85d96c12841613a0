"""Deadlock detection and pseudo-goal perturbation.

Each agent carries an :class:`AgentMode`. A NORMAL agent whose filtered control
stays at or below ``u_t`` while its nominal control exceeds ``u_t`` for ``window``
consecutive steps is declared deadlocked; it then parks its goal, steers toward a
pseudo-goal on the circle of radius ``delta`` around its current position, and
restores the original goal once it gets within ``eps_pg`` of the pseudo-goal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from spgpnav.dynamics import Vec2, _vec2
from spgpnav.safety import point_segment_distance


class Mode(str, Enum):
    NORMAL = "normal"
    PERTURB = "perturb"


@dataclass(frozen=True)
class SpgpParams:
    delta: float = 1.0
    u_t: float = 0.05
    window: int = 10
    candidates: int = 8
    eps_pg: float = 0.1
    # give up on a pseudo-goal that has not been reached after this many steps
    max_perturb_steps: int = 200
    # draw separate randoms for the cosine and sine terms (point leaves the circle)
    independent_xy: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.u_t > 0:
            raise ValueError("u_t must be > 0")
        if self.window < 1 or self.candidates < 1:
            raise ValueError("window and candidates must be >= 1")
        if not self.eps_pg > 0:
            raise ValueError("eps_pg must be > 0")
        if self.max_perturb_steps < 1:
            raise ValueError("max_perturb_steps must be >= 1")


@dataclass(frozen=True)
class AgentMode:
    original_goal: Vec2
    mode: Mode = Mode.NORMAL
    pseudo_goal: Vec2 | None = None
    consecutive_deadlock_steps: int = 0
    # where the agent stood when it picked its pseudo-goal
    anchor: Vec2 | None = None
    perturb_steps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "original_goal", _vec2(self.original_goal))
        if self.mode is Mode.PERTURB and self.pseudo_goal is None:
            raise ValueError("PERTURB mode requires a pseudo-goal")

    @property
    def active_goal(self) -> Vec2:
        if self.mode is Mode.PERTURB:
            return self.pseudo_goal
        return self.original_goal


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 stream; numpy guarantees the same doubles on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def detect_deadlock(u, u_hat, mode: AgentMode, params: SpgpParams) -> tuple[bool, AgentMode]:
    stuck = math.hypot(u[0], u[1]) <= params.u_t and math.hypot(u_hat[0], u_hat[1]) > params.u_t
    count = mode.consecutive_deadlock_steps + 1 if stuck else 0
    mode = replace(mode, consecutive_deadlock_steps=count)
    return count >= params.window, mode


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def _reachable(p, c, clearance, obstacles) -> bool:
    """True when the straight segment p -> c keeps ``clearance`` from every obstacle.

    ``obstacles`` is ``(disk_centers, disk_radii, wall_starts, wall_ends, wall_radii)``.
    """
    obs_c, obs_r, wa, wb, wr = obstacles
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float)
    if len(obs_c):
        if np.any(point_segment_distance(obs_c, p, c) < clearance + obs_r):
            return False
    if len(wa):
        d1 = _cross(wa, wb, np.broadcast_to(p, wa.shape))
        d2 = _cross(wa, wb, np.broadcast_to(c, wa.shape))
        d3 = _cross(np.broadcast_to(p, wa.shape), np.broadcast_to(c, wa.shape), wa)
        d4 = _cross(np.broadcast_to(p, wa.shape), np.broadcast_to(c, wa.shape), wb)
        crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
        gap = np.minimum.reduce([
            point_segment_distance(np.broadcast_to(p, wa.shape), wa, wb),
            point_segment_distance(np.broadcast_to(c, wa.shape), wa, wb),
            point_segment_distance(wa, p, c),
            point_segment_distance(wb, p, c),
        ])
        if np.any(crossing | (gap < clearance + wr)):
            return False
    return True


def select_pseudo_goal(p, others, params: SpgpParams, rng: np.random.Generator,
                       obstacles=None, clearance: float = 0.0) -> Vec2:
    """Best of ``params.candidates`` random points on the ``delta``-circle around ``p``.

    The winner maximizes the distance to the nearest of ``others``; ties go to the
    earliest candidate. When ``obstacles`` is given (see :func:`_reachable`),
    candidates the agent cannot reach in a straight line with ``clearance`` are
    only used if no candidate is reachable.
    """
    px, py = float(p[0]), float(p[1])
    others = np.asarray(others, dtype=float).reshape(-1, 2)
    best = None
    best_key = None
    for _ in range(params.candidates):
        x = rng.random()
        y = rng.random() if params.independent_xy else x
        c = (px + params.delta * math.cos(2.0 * math.pi * x),
             py + params.delta * math.sin(2.0 * math.pi * y))
        if len(others):
            score = float(np.min(np.hypot(others[:, 0] - c[0], others[:, 1] - c[1])))
        else:
            score = -math.inf
        reachable = obstacles is None or _reachable((px, py), c, clearance, obstacles)
        key = (reachable, score)
        if best is None or key > best_key:
            best, best_key = c, key
    return best


def spgp_update(positions, controls, nominals, modes: list[AgentMode], params: SpgpParams,
                rng: np.random.Generator, obstacles=None,
                radii=None) -> tuple[list[AgentMode], list[tuple]]:
    """Advance every agent's mode machine by one step.

    Returns the new modes and a list of ``(event, agent_index, payload)`` tuples.
    Agents are visited in index order so random draws are reproducible.
    ``obstacles`` is an optional ``(disk_centers, disk_radii, wall_starts,
    wall_ends, wall_radii)`` tuple used to skip unreachable pseudo-goals;
    ``radii`` gives each agent's clearance for that test.
    """
    positions = np.asarray(positions, dtype=float)
    out = []
    events = []
    for i, mode in enumerate(modes):
        p = positions[i]
        if mode.mode is Mode.PERTURB:
            steps = mode.perturb_steps + 1
            reached = math.hypot(p[0] - mode.pseudo_goal[0], p[1] - mode.pseudo_goal[1]) <= params.eps_pg
            if reached or steps >= params.max_perturb_steps:
                out.append(AgentMode(original_goal=mode.original_goal))
                events.append(("restore" if reached else "abandon", i, mode.pseudo_goal))
            else:
                out.append(replace(mode, perturb_steps=steps))
            continue
        flagged, mode = detect_deadlock(controls[i], nominals[i], mode, params)
        if not flagged:
            out.append(mode)
            continue
        others = np.delete(positions, i, axis=0)
        clearance = 0.0 if radii is None else float(radii[i])
        pg = select_pseudo_goal(p, others, params, rng, obstacles, clearance)
        events.append(("deadlock", i, None))
        events.append(("perturb", i, pg))
        out.append(AgentMode(original_goal=mode.original_goal, mode=Mode.PERTURB,
                             pseudo_goal=pg, anchor=(float(p[0]), float(p[1]))))
    return out, events
