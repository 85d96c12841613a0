"""Closed-loop simulation: nominal control, certificate rows, QP filter, mode update, integration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from spgpnav.dynamics import AgentState, nominal_controls
from spgpnav.metrics import (
    TrajectoryLog,
    TrialResult,
    avg_delta_v,
    collided,
    hausdorff,
    makespan,
    nominal_trajectory,
    success,
)
from spgpnav.qp import solve_dense
from spgpnav.safety import assemble_dense, point_segment_distance, wall_arrays
from spgpnav.scenarios import ScenarioConfig
from spgpnav.spgp import (
    AgentMode,
    Mode,
    detect_deadlock,
    make_rng,
    spgp_update,
)


@dataclass
class SimState:
    positions: np.ndarray
    velocities: np.ndarray
    modes: list[AgentMode]
    rng: np.random.Generator
    step: int = 0
    records: dict = field(default_factory=lambda: {
        "positions": [], "velocities": [], "controls": [], "nominals": [],
        "modes": [], "goals": [], "min_pair_h": [], "min_obstacle_h": []})
    events: list = field(default_factory=list)
    # deadlock counters for the baseline, which detects but never perturbs
    baseline_counts: list = field(default_factory=list)

    @classmethod
    def initial(cls, config: ScenarioConfig, seed: int) -> SimState:
        agents = sorted(config.agents, key=lambda a: a.id)
        state = cls(
            positions=np.array([a.position for a in agents], dtype=float),
            velocities=np.array([a.velocity for a in agents], dtype=float),
            modes=[AgentMode(original_goal=a.goal) for a in agents],
            rng=make_rng(seed),
            baseline_counts=[0] * len(agents),
        )
        return state

    def active_goals(self) -> np.ndarray:
        return np.array([m.active_goal for m in self.modes], dtype=float)

    def agents(self, config: ScenarioConfig) -> list[AgentState]:
        ordered = sorted(config.agents, key=lambda a: a.id)
        return [
            AgentState(id=a.id, position=self.positions[k], velocity=self.velocities[k],
                       safety_radius=a.safety_radius, accel_limit=a.accel_limit,
                       goal=self.modes[k].active_goal)
            for k, a in enumerate(ordered)
        ]


class _Arrays:
    """Per-config constant arrays, built once per run."""

    def __init__(self, config: ScenarioConfig):
        agents = sorted(config.agents, key=lambda a: a.id)
        self.ids = [a.id for a in agents]
        self.radii = np.array([a.safety_radius for a in agents], dtype=float)
        self.alphas = np.array([a.accel_limit for a in agents], dtype=float)
        self.original_goals = np.array([a.goal for a in agents], dtype=float)
        self.obs_c = np.array([o.center for o in config.obstacles], dtype=float).reshape(-1, 2)
        self.obs_r = np.array([o.radius for o in config.obstacles], dtype=float)
        self.wall_a, self.wall_b, self.wall_r = wall_arrays(config.walls)
        self.geometry = (self.obs_c, self.obs_r, self.wall_a, self.wall_b, self.wall_r)
        n = len(agents)
        self.iu = np.triu_indices(n, 1)
        self.pair_r = self.radii[self.iu[0]] + self.radii[self.iu[1]]

    def clearances(self, positions: np.ndarray) -> tuple[float, float]:
        if len(self.iu[0]):
            d = positions[self.iu[0]] - positions[self.iu[1]]
            pair = float(np.min(np.hypot(d[:, 0], d[:, 1]) - self.pair_r))
        else:
            pair = math.inf
        obst = math.inf
        if self.obs_c.shape[0]:
            d = positions[:, None, :] - self.obs_c[None, :, :]
            gaps = np.hypot(d[..., 0], d[..., 1]) - self.radii[:, None] - self.obs_r[None, :]
            obst = float(np.min(gaps))
        if self.wall_a.shape[0]:
            dist = point_segment_distance(positions[:, None, :], self.wall_a[None], self.wall_b[None])
            obst = min(obst, float(np.min(dist - self.radii[:, None] - self.wall_r[None, :])))
        return pair, obst


def _record_state(state: SimState, arrays: _Arrays) -> None:
    rec = state.records
    rec["positions"].append(state.positions.copy())
    rec["velocities"].append(state.velocities.copy())
    rec["modes"].append([1 if m.mode is Mode.PERTURB else 0 for m in state.modes])
    rec["goals"].append(state.active_goals())
    pair, obst = arrays.clearances(state.positions)
    rec["min_pair_h"].append(pair)
    rec["min_obstacle_h"].append(obst)
    if pair < 0.0:
        state.events.append((state.step, "collision", -1, pair))
    if obst < 0.0:
        state.events.append((state.step, "obstacle_collision", -1, obst))


def _filtered(state: SimState, config: ScenarioConfig, arrays: _Arrays):
    goals = state.active_goals()
    u_hat = nominal_controls(state.positions, state.velocities, goals, arrays.alphas, config.gains)
    G, b, *_ = assemble_dense(state.positions, state.velocities, arrays.radii, arrays.alphas,
                              arrays.obs_c, arrays.obs_r, config.safety,
                              arrays.wall_a, arrays.wall_b, arrays.wall_r)
    u, solved = solve_dense(G, b, u_hat, arrays.alphas, state.velocities, config.gains.kd,
                            fallback=config.safety.fallback)
    return u_hat, u, solved


def tick(state: SimState, config: ScenarioConfig, perturbation_enabled: bool,
         same_step_resolve: bool = False, arrays: _Arrays | None = None) -> SimState:
    """Advance the simulation by one step, appending to the state's records."""
    if state.step >= config.t_max:
        raise ValueError("simulation already reached t_max")
    if arrays is None:
        arrays = _Arrays(config)
    if not state.records["positions"]:
        _record_state(state, arrays)

    u_hat, u, solved = _filtered(state, config, arrays)
    if not solved:
        state.events.append((state.step, "qp_infeasible", -1, None))

    if perturbation_enabled:
        new_modes, events = spgp_update(state.positions, u, u_hat, state.modes, config.spgp,
                                        state.rng, arrays.geometry, arrays.radii)
        for kind, agent, payload in events:
            state.events.append((state.step, kind, agent, payload))
        changed = any(a is not b and a.active_goal != b.active_goal
                      for a, b in zip(new_modes, state.modes))
        state.modes = new_modes
        if same_step_resolve and changed:
            u_hat, u, solved = _filtered(state, config, arrays)
            if not solved:
                state.events.append((state.step, "qp_infeasible", -1, None))
    else:
        # the baseline still reports deadlocks; it just never acts on them
        for k, mode in enumerate(state.modes):
            flagged, probe = detect_deadlock(
                u[k], u_hat[k],
                replace(mode, consecutive_deadlock_steps=state.baseline_counts[k]), config.spgp)
            state.baseline_counts[k] = probe.consecutive_deadlock_steps
            if flagged and probe.consecutive_deadlock_steps == config.spgp.window:
                state.events.append((state.step, "deadlock", k, None))

    state.records["controls"].append(u.copy())
    state.records["nominals"].append(u_hat.copy())
    state.velocities = state.velocities + u * config.dt
    state.positions = state.positions + state.velocities * config.dt
    state.step += 1
    _record_state(state, arrays)
    return state


def _all_arrived(state: SimState, arrays: _Arrays, eps_goal: float) -> bool:
    d = state.positions - arrays.original_goals
    return bool(np.all(np.hypot(d[:, 0], d[:, 1]) <= eps_goal))


def simulate(config: ScenarioConfig, seed: int, perturbation_enabled: bool = True,
             same_step_resolve: bool = False) -> TrajectoryLog:
    arrays = _Arrays(config)
    state = SimState.initial(config, seed)
    _record_state(state, arrays)
    while state.step < config.t_max and not _all_arrived(state, arrays, config.eps_goal):
        tick(state, config, perturbation_enabled, same_step_resolve, arrays)
    rec = state.records
    n = len(arrays.ids)
    return TrajectoryLog(
        dt=config.dt,
        t_max=config.t_max,
        ids=arrays.ids,
        original_goals=arrays.original_goals,
        positions=np.array(rec["positions"]),
        velocities=np.array(rec["velocities"]),
        controls=np.array(rec["controls"]).reshape(-1, n, 2),
        nominals=np.array(rec["nominals"]).reshape(-1, n, 2),
        modes=np.array(rec["modes"], dtype=np.int8),
        goals=np.array(rec["goals"]),
        min_pair_h=np.array(rec["min_pair_h"]),
        min_obstacle_h=np.array(rec["min_obstacle_h"]),
        events=state.events,
    )


def evaluate(log: TrajectoryLog, config: ScenarioConfig) -> TrialResult:
    agents = sorted(config.agents, key=lambda a: a.id)
    n = len(agents)
    deviation = []
    for k, a in enumerate(agents):
        nominal = nominal_trajectory(a, config.gains, config.dt, config.t_max, config.eps_goal)
        deviation.append(hausdorff(log.positions[:, k, :], nominal))
    final = log.positions[-1] - log.original_goals
    arrived = int(np.sum(np.hypot(final[:, 0], final[:, 1]) <= config.eps_goal))
    return TrialResult(
        success=success(log, config.eps_goal),
        collision=collided(log),
        makespan=[makespan(log, k, config.eps_goal) for k in range(n)],
        avg_delta_v=[avg_delta_v(log, k) if log.positions.shape[0] >= 2 else 0.0
                     for k in range(n)],
        path_deviation=deviation,
        deadlock_count=log.count("deadlock"),
        perturb_count=log.count("perturb"),
        qp_infeasible_count=log.count("qp_infeasible"),
        agents_arrived=arrived,
        min_pair_h=float(np.min(log.min_pair_h)),
        steps=log.steps,
    )


def run(config: ScenarioConfig, seed: int, perturbation_enabled: bool = True,
        same_step_resolve: bool = False) -> tuple[TrajectoryLog, TrialResult]:
    log = simulate(config, seed, perturbation_enabled, same_step_resolve)
    return log, evaluate(log, config)
