"""Pairwise barrier values and the linear safety-certificate constraint rows.

Each row constrains the stacked acceleration vector ``u`` as ``coeffs . u <= bound``.
For agents ``a`` and ``b`` with ``dp = p_a - p_b``, ``dv = v_a - v_b``, separation
``h`` (distance minus both radii and the margin) and ``A = share * (alpha_a + alpha_b)``
the row is ``-dp . u_a + dp . u_b <= b``. Two right-hand sides are available.

``form="braking"`` (default) keeps the braking-distance barrier
``hb = sqrt(2 A h) + dv.dp / |dp|`` non-negative::

    b = gamma * hb**3 * |dp| + A (dv.dp) / sqrt(2 A h) + |dv|**2 - (dv.dp)**2 / |dp|**2

``form="cubic"`` uses the cubic expression::

    b = gamma * h**3 + (dv.dp) / (2 A) - (dv.dp)**2 / (2 |dp|**2) + |dv|**2 / 2

The cubic form only asks for a relative deceleration of ``dv.dp / (2 A)`` near
contact, which lets two agents closing at speed pass through each other; it is
kept for comparison. Static disks reuse the expression with a motionless,
zero-control partner. Walls are capsules: the partner is the closest point of
the segment, and on the flat face the tangential-speed terms drop out.

``share`` (``SafetyParams.brake_share``) is the fraction of each agent's
acceleration budget a single row may count on. With the whole budget, an agent
queued between a leader and a follower is promised to both, and the rows of a
queue stop being jointly satisfiable. Half the budget covers one neighbour ahead
and one behind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from spgpnav import kernels
from spgpnav.dynamics import AgentState, Vec2, _vec2

DEFAULT_GAMMA = 10.0
DEFAULT_ACTIVATION = 3.0

FORMS = {"cubic": 0, "braking": 1}
FALLBACKS = ("elastic", "braking")
# floor on the separation inside the braking-distance square root
SEP_FLOOR = 1e-3

# constraint source kinds in the dense representation
PAIR = 0
OBSTACLE = 1
WALL = 2


class DegenerateGeometryError(ValueError):
    """Two bodies share a center, so the constraint normal is undefined."""


@dataclass(frozen=True)
class SafetyParams:
    gamma: float = DEFAULT_GAMMA
    margin: float = 0.02
    activation_distance: float = DEFAULT_ACTIVATION
    form: str = "braking"
    brake_share: float = 0.5
    # controls used when the rows admit no solution: "elastic" or "braking"
    fallback: str = "elastic"

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {sorted(FORMS)}")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not 0 < self.brake_share <= 1:
            raise ValueError("brake_share must be in (0, 1]")
        if self.fallback not in FALLBACKS:
            raise ValueError(f"fallback must be one of {sorted(FALLBACKS)}")
        if not self.margin >= 0:
            raise ValueError("margin must be >= 0")
        if not self.activation_distance > 0:
            raise ValueError("activation_distance must be > 0")


@dataclass(frozen=True)
class Obstacle:
    center: Vec2
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec2(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("obstacle radius must be > 0")


@dataclass(frozen=True)
class ConstraintRow:
    coeffs: dict[int, Vec2]
    bound: float
    source: tuple = field(default=())

    def evaluate(self, controls: dict[int, np.ndarray]) -> float:
        """Return ``coeffs . u - bound`` (<= 0 when satisfied)."""
        total = 0.0
        for agent_id, c in self.coeffs.items():
            u = controls[agent_id]
            total += c[0] * u[0] + c[1] * u[1]
        return total - self.bound


def pairwise_h(a: AgentState, b: AgentState) -> float:
    """Separation distance remaining after both safety radii."""
    dx = a.position[0] - b.position[0]
    dy = a.position[1] - b.position[1]
    return math.hypot(dx, dy) - (a.safety_radius + b.safety_radius)


@dataclass(frozen=True)
class Wall:
    """Segment from ``start`` to ``end`` inflated by ``radius``."""

    start: Vec2
    end: Vec2
    radius: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "start", _vec2(self.start))
        object.__setattr__(self, "end", _vec2(self.end))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("wall radius must be > 0")
        if self.start == self.end:
            raise ValueError("wall needs two distinct end points")

    def closest_point(self, p) -> tuple[Vec2, bool]:
        """Closest point of the segment to ``p`` and whether it lies strictly inside."""
        ax, ay = self.start
        ex, ey = self.end[0] - ax, self.end[1] - ay
        t = ((p[0] - ax) * ex + (p[1] - ay) * ey) / (ex * ex + ey * ey)
        t = min(1.0, max(0.0, t))
        return (ax + t * ex, ay + t * ey), 0.0 < t < 1.0

    def clearance(self, p, radius: float) -> float:
        c, _ = self.closest_point(p)
        return math.dist(p, c) - radius - self.radius


def barrier_bound(dp, dv, h: float, alpha_sum: float, gamma: float, form: str = "braking",
                  curved: bool = True) -> float:
    """Right-hand side of one certificate row.

    ``curved=False`` drops the tangential-speed term, as for the flat face of a wall.
    """
    dvdp = dv[0] * dp[0] + dv[1] * dp[1]
    dp2 = dp[0] * dp[0] + dp[1] * dp[1]
    dv2 = dv[0] * dv[0] + dv[1] * dv[1]
    tangential = dv2 - dvdp * dvdp / dp2 if curved else 0.0
    if form == "cubic":
        return gamma * h * h * h + dvdp / (2.0 * alpha_sum) + tangential / 2.0
    if form != "braking":
        raise ValueError(f"form must be one of {sorted(FORMS)}")
    root = math.sqrt(2.0 * alpha_sum * max(h, SEP_FLOOR))
    dist = math.sqrt(dp2)
    hb = root + dvdp / dist
    bound = gamma * hb * hb * hb * dist + tangential + alpha_sum * dvdp / root
    # never ask for more than full braking along the line of centres
    return max(bound, -alpha_sum * dist)


def build_pair_constraint(a: AgentState, b: AgentState, params: SafetyParams) -> ConstraintRow:
    if a.id == b.id:
        raise ValueError("pair constraint needs two distinct agents")
    dp = (a.position[0] - b.position[0], a.position[1] - b.position[1])
    if dp == (0.0, 0.0):
        raise DegenerateGeometryError(f"agents {a.id} and {b.id} are coincident")
    dv = (a.velocity[0] - b.velocity[0], a.velocity[1] - b.velocity[1])
    h = pairwise_h(a, b) - params.margin
    share = params.brake_share * (a.accel_limit + b.accel_limit)
    bound = barrier_bound(dp, dv, h, share, params.gamma, params.form)
    lo, hi = sorted((a.id, b.id))
    return ConstraintRow(
        coeffs={a.id: (-dp[0], -dp[1]), b.id: (dp[0], dp[1])},
        bound=bound,
        source=("pair", lo, hi),
    )


def build_obstacle_constraint(a: AgentState, obs: Obstacle, params: SafetyParams,
                              index: int = 0) -> ConstraintRow:
    dp = (a.position[0] - obs.center[0], a.position[1] - obs.center[1])
    if dp == (0.0, 0.0):
        raise DegenerateGeometryError(f"agent {a.id} sits on an obstacle center")
    h = math.hypot(*dp) - a.safety_radius - obs.radius - params.margin
    share = params.brake_share * a.accel_limit
    bound = barrier_bound(dp, a.velocity, h, share, params.gamma, params.form)
    return ConstraintRow(
        coeffs={a.id: (-dp[0], -dp[1])},
        bound=bound,
        source=("obstacle", a.id, index),
    )


def build_wall_constraint(a: AgentState, wall: Wall, params: SafetyParams,
                          index: int = 0) -> ConstraintRow:
    c, interior = wall.closest_point(a.position)
    dp = (a.position[0] - c[0], a.position[1] - c[1])
    if dp == (0.0, 0.0):
        raise DegenerateGeometryError(f"agent {a.id} sits on the axis of wall {index}")
    h = math.hypot(*dp) - a.safety_radius - wall.radius - params.margin
    share = params.brake_share * a.accel_limit
    bound = barrier_bound(dp, a.velocity, h, share, params.gamma, params.form,
                          curved=not interior)
    return ConstraintRow(
        coeffs={a.id: (-dp[0], -dp[1])},
        bound=bound,
        source=("wall", a.id, index),
    )


def obstacle_in_range(a: AgentState, obs: Obstacle, params: SafetyParams) -> bool:
    gap = math.dist(a.position, obs.center) - a.safety_radius - obs.radius
    return gap <= params.activation_distance


def wall_in_range(a: AgentState, wall: Wall, params: SafetyParams) -> bool:
    return wall.clearance(a.position, a.safety_radius) <= params.activation_distance


def assemble_constraints(agents: list[AgentState], obstacles: list[Obstacle],
                         params: SafetyParams, walls: list[Wall] = ()) -> list[ConstraintRow]:
    """All pair rows, then disk rows, then wall rows, each ordered by agent id."""
    ordered = sorted(agents, key=lambda s: s.id)
    ids = [s.id for s in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError("agent ids must be unique")
    rows = [build_pair_constraint(a, b, params) for a, b in combinations(ordered, 2)]
    for a in ordered:
        for k, obs in enumerate(obstacles):
            if obstacle_in_range(a, obs, params):
                rows.append(build_obstacle_constraint(a, obs, params, k))
    for a in ordered:
        for k, wall in enumerate(walls):
            if wall_in_range(a, wall, params):
                rows.append(build_wall_constraint(a, wall, params, k))
    return rows


def point_segment_distance(q, a, b):
    """Distance from points ``q`` (..., 2) to segments ``a -> b`` (broadcast)."""
    ab = b - a
    L2 = np.sum(ab * ab, axis=-1)
    safe = np.where(L2 > 0, L2, 1.0)
    t = np.clip(np.sum((q - a) * ab, axis=-1) / safe, 0.0, 1.0)
    t = np.where(L2 > 0, t, 0.0)
    d = q - (a + t[..., None] * ab)
    return np.hypot(d[..., 0], d[..., 1])


def wall_arrays(walls) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(starts, ends, radii)`` arrays for the dense kernels."""
    starts = np.array([w.start for w in walls], dtype=float).reshape(-1, 2)
    ends = np.array([w.end for w in walls], dtype=float).reshape(-1, 2)
    radii = np.array([w.radius for w in walls], dtype=float)
    return starts, ends, radii


def assemble_dense(positions: np.ndarray, velocities: np.ndarray, radii: np.ndarray,
                   alphas: np.ndarray, obs_centers: np.ndarray, obs_radii: np.ndarray,
                   params: SafetyParams, wall_starts=None, wall_ends=None, wall_radii=None):
    """Array form of :func:`assemble_constraints` for agents indexed 0..N-1.

    Returns ``(G, b, kind, first, second)`` where row ``k`` reads
    ``G[k] @ u <= b[k]`` over the flattened (2N,) control vector. ``kind`` is
    :data:`PAIR`, :data:`OBSTACLE` or :data:`WALL`; ``second`` holds the partner
    agent, disk or wall index.
    """
    if wall_starts is None:
        wall_starts = wall_ends = np.zeros((0, 2))
        wall_radii = np.zeros(0)
    G, b, kind, first, second, bad = kernels.assemble(
        np.ascontiguousarray(positions, dtype=float),
        np.ascontiguousarray(velocities, dtype=float),
        np.ascontiguousarray(radii, dtype=float),
        params.brake_share * np.ascontiguousarray(alphas, dtype=float),
        np.ascontiguousarray(obs_centers, dtype=float).reshape(-1, 2),
        np.ascontiguousarray(obs_radii, dtype=float).reshape(-1),
        np.ascontiguousarray(wall_starts, dtype=float).reshape(-1, 2),
        np.ascontiguousarray(wall_ends, dtype=float).reshape(-1, 2),
        np.ascontiguousarray(wall_radii, dtype=float).reshape(-1),
        float(params.gamma), float(params.margin), float(params.activation_distance),
        FORMS[params.form],
    )
    if bad >= 0:
        raise DegenerateGeometryError(f"coincident centers in constraint {bad}")
    return G, b, kind, first, second
