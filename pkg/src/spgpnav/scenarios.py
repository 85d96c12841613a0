"""The four social mini-game environments and their document format.

Walls are capsule segments (a line segment inflated by a radius). All geometry
is deterministic; every dimension can be overridden by name.

Scenario document (JSON, ``"format": "spgpnav-scenario"``, ``"version": 1``)::

    {
      "format": "spgpnav-scenario",
      "version": 1,
      "name": "doorway",
      "dt": 0.05, "t_max": 2000, "eps_goal": 0.1,
      "gains": {"kp": 1.0, "kd": 2.0},
      "safety": {"gamma": ..., "margin": ..., "activation_distance": ...,
                 "form": "braking", "brake_share": ..., "fallback": "elastic"},
      "spgp": {"delta": ..., "u_t": ..., "window": ..., "candidates": ...,
               "eps_pg": ..., "max_perturb_steps": ..., "independent_xy": false},
      "agents": [{"id": 0, "position": [x, y], "velocity": [vx, vy],
                  "safety_radius": r, "accel_limit": a, "goal": [gx, gy]}, ...],
      "walls": [{"start": [x0, y0], "end": [x1, y1], "radius": 0.1}, ...],
      "obstacles": [{"center": [x, y], "radius": r}, ...],
      "geometry": {...}
    }

Every key is required on load. ``obstacles`` lists free-standing disks;
``geometry`` records the construction parameters and is informational.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from itertools import combinations

from spgpnav.dynamics import (
    DEFAULT_ACCEL_LIMIT,
    DEFAULT_DT,
    DEFAULT_T_MAX,
    AgentState,
    ControllerGains,
    Vec2,
    _vec2,
)
from spgpnav.safety import Obstacle, SafetyParams, Wall, pairwise_h
from spgpnav.spgp import SpgpParams

FORMAT = "spgpnav-scenario"
VERSION = 1

SCENARIOS = ("doorway", "intersection", "hallway", "lcorner")
CAPACITY = {"doorway": 8, "intersection": 10, "hallway": 10, "lcorner": 5}

DEFAULT_RADIUS = 0.2
DEFAULT_EPS_GOAL = 0.1
WALL_RADIUS = 0.1


class ScenarioError(ValueError):
    """Invalid scenario request or document; the message names the location."""


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    agents: tuple[AgentState, ...]
    obstacles: tuple[Obstacle, ...]
    safety: SafetyParams
    spgp: SpgpParams
    dt: float = DEFAULT_DT
    t_max: int = DEFAULT_T_MAX
    eps_goal: float = DEFAULT_EPS_GOAL
    gains: ControllerGains = field(default_factory=ControllerGains)
    walls: tuple[Wall, ...] = ()
    geometry: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "geometry", tuple(sorted(dict(self.geometry).items())))

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def validate(self) -> None:
        if self.name in CAPACITY and self.n_agents > CAPACITY[self.name]:
            raise ScenarioError(
                f"{self.name} holds at most {CAPACITY[self.name]} agents, got {self.n_agents}")
        if not self.agents:
            raise ScenarioError("scenario has no agents")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ScenarioError("agent ids must be unique")
        if not (self.dt > 0 and self.t_max >= 1 and self.eps_goal > 0):
            raise ScenarioError("dt, t_max and eps_goal must be positive")
        for a, b in combinations(self.agents, 2):
            if pairwise_h(a, b) < 0:
                raise ScenarioError(f"agents {a.id} and {b.id} overlap at t=0")
        for a in self.agents:
            for k, obs in enumerate(self.obstacles):
                if math.dist(a.position, obs.center) < a.safety_radius + obs.radius:
                    raise ScenarioError(f"agent {a.id} overlaps obstacle {k} at t=0")
                if math.dist(a.goal, obs.center) < a.safety_radius + obs.radius:
                    raise ScenarioError(f"goal of agent {a.id} lies inside obstacle {k}")
            for k, wall in enumerate(self.walls):
                if wall.clearance(a.position, a.safety_radius) < 0:
                    raise ScenarioError(f"agent {a.id} overlaps wall {k} at t=0")
                if wall.clearance(a.goal, a.safety_radius) < 0:
                    raise ScenarioError(f"goal of agent {a.id} lies inside wall {k}")


# ---------------------------------------------------------------- geometry

DEFAULT_GEOMETRY = {
    "doorway": {"gap": 0.8, "wall_extent": 4.0, "start_x": 2.5, "queue_spacing": 0.8,
                "goal_x": 2.5, "goal_spacing": 0.6},
    "intersection": {"width": 1.2, "arm_length": 4.5, "start_distance": 3.0,
                     "queue_spacing": 0.8, "goal_offset": 0.6},
    "hallway": {"width": 1.2, "length": 6.0, "queue_spacing": 0.7},
    "lcorner": {"width": 1.2, "leg_length": 5.0, "start_distance": 3.5,
                "queue_spacing": 0.8},
}


def _doorway(n, g):
    inner = g["gap"] / 2 + WALL_RADIUS
    walls = [Wall((0.0, inner), (0.0, g["wall_extent"])),
             Wall((0.0, -inner), (0.0, -g["wall_extent"]))]
    # agents alternate sides and queue along the doorway axis; goals sit across
    # the gap, offset from its center along each agent's travel direction, with
    # the front of each queue taking the farthest slot
    per_side = [(n + 1) // 2, n // 2]
    starts, goals = [], []
    for k in range(n):
        rank, side = divmod(k, 2)
        sign = -1.0 if side == 0 else 1.0
        starts.append((sign * (g["start_x"] + rank * g["queue_spacing"]), 0.0))
        slot = per_side[side] - 1 - rank
        goals.append((-sign * (g["goal_x"] + slot * g["goal_spacing"]), 0.0))
    return walls, starts, goals


def _block(corner_x, corner_y, sx, sy, extent):
    # L-shaped pair of walls bounding one corner block of the crossing
    return [Wall((corner_x, corner_y), (sx * extent, corner_y)),
            Wall((corner_x, corner_y), (corner_x, sy * extent))]


def _intersection(n, g):
    c = g["width"] / 2 + WALL_RADIUS
    ext = g["arm_length"]
    walls = []
    for sx in (1, -1):
        for sy in (1, -1):
            walls += _block(sx * c, sy * c, sx, sy, ext)
    # arms in order west, south, east, north; travel direction points inward
    directions = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
    per_arm = [len(range(a, n, 4)) for a in range(4)]
    starts, goals = [], []
    for k in range(n):
        arm, rank = k % 4, k // 4
        d = directions[arm]
        dist = g["start_distance"] + rank * g["queue_spacing"]
        starts.append((-d[0] * dist, -d[1] * dist))
        # the front of the queue takes the farthest slot
        off = g["goal_offset"] * (per_arm[arm] - rank)
        goals.append((d[0] * off, d[1] * off))
    return walls, starts, goals


def _hallway(n, g):
    yw = g["width"] / 2 + WALL_RADIUS
    x_end = g["length"] / 2 + 1.0
    walls = [Wall((-x_end, yw), (x_end, yw)), Wall((-x_end, -yw), (x_end, -yw))]
    lane = g["width"] / 4
    starts, goals = [], []
    for k in range(n):
        rank, side = divmod(k, 2)
        x = g["length"] / 2 + rank * g["queue_spacing"]
        if side == 0:
            starts.append((x, -lane))
            goals.append((-x, lane))
        else:
            starts.append((-x, lane))
            goals.append((x, -lane))
    return walls, starts, goals


def _lcorner(n, g):
    half = g["width"] / 2 + WALL_RADIUS
    leg = g["leg_length"]
    walls = [
        Wall((-leg, -half), (half, -half)),    # outer, under the west leg
        Wall((half, -half), (half, leg)),      # outer, right of the north leg
        Wall((-leg, half), (-half, half)),     # inner, above the west leg
        Wall((-half, half), (-half, leg)),     # inner, left of the north leg
    ]
    starts, goals = [], []
    for k in range(n):
        rank, leg_index = divmod(k, 2)
        dist = g["start_distance"] + rank * g["queue_spacing"]
        west = (-dist, 0.0)
        north = (0.0, dist)
        if leg_index == 0:
            starts.append(west)
            goals.append(north)
        else:
            starts.append(north)
            goals.append(west)
    return walls, starts, goals


_BUILDERS = {"doorway": _doorway, "intersection": _intersection,
             "hallway": _hallway, "lcorner": _lcorner}

_PARAM_KEYS = {
    "safety": {f.name for f in fields(SafetyParams)},
    "spgp": {f.name for f in fields(SpgpParams)},
    "gains": {f.name for f in fields(ControllerGains)},
}


def build_scenario(name: str, n_agents: int, overrides: dict | None = None) -> ScenarioConfig:
    """Construct a built-in scenario.

    ``overrides`` may name any geometry key of the scenario, any field of
    :class:`SafetyParams`, :class:`SpgpParams` or :class:`ControllerGains`, or
    ``dt``, ``t_max``, ``eps_goal``, ``radius``, ``accel_limit``.
    """
    if name not in _BUILDERS:
        raise ScenarioError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    if n_agents < 1:
        raise ScenarioError("need at least one agent")
    if n_agents > CAPACITY[name]:
        raise ScenarioError(f"{name} holds at most {CAPACITY[name]} agents, got {n_agents}")
    overrides = dict(overrides or {})
    geometry = dict(DEFAULT_GEOMETRY[name])
    for key in list(overrides):
        if key in geometry:
            geometry[key] = float(overrides.pop(key))

    groups = {group: {} for group in _PARAM_KEYS}
    for key in list(overrides):
        for group, keys in _PARAM_KEYS.items():
            if key in keys:
                groups[group][key] = overrides.pop(key)
                break
    dt = float(overrides.pop("dt", DEFAULT_DT))
    t_max = int(overrides.pop("t_max", DEFAULT_T_MAX))
    eps_goal = float(overrides.pop("eps_goal", DEFAULT_EPS_GOAL))
    radius = float(overrides.pop("radius", DEFAULT_RADIUS))
    accel = float(overrides.pop("accel_limit", DEFAULT_ACCEL_LIMIT))
    if overrides:
        raise ScenarioError(f"unknown override(s) for {name}: {sorted(overrides)}")

    walls, starts, goals = _BUILDERS[name](n_agents, geometry)
    agents = tuple(
        AgentState(id=k, position=s, velocity=(0.0, 0.0), safety_radius=radius,
                   accel_limit=accel, goal=gl)
        for k, (s, gl) in enumerate(zip(starts, goals))
    )
    config = ScenarioConfig(
        name=name,
        agents=agents,
        obstacles=(),
        safety=SafetyParams(**groups["safety"]),
        spgp=SpgpParams(**groups["spgp"]),
        dt=dt,
        t_max=t_max,
        eps_goal=eps_goal,
        gains=ControllerGains(**groups["gains"]),
        walls=tuple(walls),
        geometry=tuple(geometry.items()),
    )
    for a, b in combinations(agents, 2):
        if math.dist(a.goal, b.goal) < a.safety_radius + b.safety_radius:
            raise ScenarioError(f"goals of agents {a.id} and {b.id} overlap")
    config.validate()
    return config


# ---------------------------------------------------------------- documents

def to_document(config: ScenarioConfig) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "name": config.name,
        "dt": config.dt,
        "t_max": config.t_max,
        "eps_goal": config.eps_goal,
        "gains": asdict(config.gains),
        "safety": asdict(config.safety),
        "spgp": asdict(config.spgp),
        "agents": [
            {"id": a.id, "position": list(a.position), "velocity": list(a.velocity),
             "safety_radius": a.safety_radius, "accel_limit": a.accel_limit,
             "goal": list(a.goal)}
            for a in config.agents
        ],
        "walls": [{"start": list(w.start), "end": list(w.end), "radius": w.radius}
                  for w in config.walls],
        "obstacles": [{"center": list(o.center), "radius": o.radius}
                      for o in config.obstacles],
        "geometry": dict(config.geometry),
    }


def save_scenario(config: ScenarioConfig) -> str:
    return json.dumps(to_document(config), indent=2) + "\n"


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in doc:
        raise ScenarioError(f"{where}: missing required key {key!r}")
    return doc[key]


def _params(cls, doc, where):
    if not isinstance(doc, dict):
        raise ScenarioError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    missing = sorted(names - set(doc))
    if missing:
        raise ScenarioError(f"{where}: missing required key(s) {missing}")
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {unknown}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def from_document(doc: dict) -> ScenarioConfig:
    if _require(doc, "format", "document") != FORMAT:
        raise ScenarioError(f"document: format must be {FORMAT!r}")
    version = _require(doc, "version", "document")
    if version != VERSION:
        raise ScenarioError(f"document: unsupported version {version!r}")
    agents = []
    for k, a in enumerate(_require(doc, "agents", "document")):
        where = f"agents[{k}]"
        try:
            agents.append(AgentState(
                id=int(_require(a, "id", where)),
                position=_require(a, "position", where),
                velocity=_require(a, "velocity", where),
                safety_radius=_require(a, "safety_radius", where),
                accel_limit=_require(a, "accel_limit", where),
                goal=_require(a, "goal", where),
            ))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{where}: {exc}") from exc
    walls = []
    for k, w in enumerate(_require(doc, "walls", "document")):
        where = f"walls[{k}]"
        try:
            walls.append(Wall(_require(w, "start", where), _require(w, "end", where),
                              float(_require(w, "radius", where))))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{where}: {exc}") from exc
    extra = []
    for k, o in enumerate(_require(doc, "obstacles", "document")):
        where = f"obstacles[{k}]"
        try:
            extra.append(Obstacle(_require(o, "center", where), float(_require(o, "radius", where))))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{where}: {exc}") from exc
    geometry = _require(doc, "geometry", "document")
    if not isinstance(geometry, dict):
        raise ScenarioError("geometry: expected an object")
    config = ScenarioConfig(
        name=str(_require(doc, "name", "document")),
        agents=tuple(agents),
        obstacles=tuple(extra),
        safety=_params(SafetyParams, _require(doc, "safety", "document"), "safety"),
        spgp=_params(SpgpParams, _require(doc, "spgp", "document"), "spgp"),
        dt=float(_require(doc, "dt", "document")),
        t_max=int(_require(doc, "t_max", "document")),
        eps_goal=float(_require(doc, "eps_goal", "document")),
        gains=_params(ControllerGains, _require(doc, "gains", "document"), "gains"),
        walls=tuple(walls),
        geometry=tuple(geometry.items()),
    )
    config.validate()
    return config


def load_scenario(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return from_document(doc)


def with_params(config: ScenarioConfig, **changes) -> ScenarioConfig:
    """Copy of ``config`` with safety/spgp/gains fields or top-level fields replaced."""
    groups = {"safety": {}, "spgp": {}, "gains": {}}
    top = {}
    for key, value in changes.items():
        for group, keys in _PARAM_KEYS.items():
            if key in keys:
                groups[group][key] = value
                break
        else:
            top[key] = value
    return replace(
        config,
        safety=replace(config.safety, **groups["safety"]),
        spgp=replace(config.spgp, **groups["spgp"]),
        gains=replace(config.gains, **groups["gains"]),
        **top,
    )
