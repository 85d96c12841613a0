"""Per-step safety filter: minimally perturb the nominal controls.

    minimize    sum_i |u_i - u_hat_i|^2
    subject to  every certificate row,  |u_i| <= alpha_i

The disk bound is replaced by a circumscribed polygon so the problem stays a
linear-inequality QP; a radial clamp afterwards restores the exact bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from spgpnav import kernels
from spgpnav.dynamics import clamp_to_ball
from spgpnav.safety import ConstraintRow

DEFAULT_FACETS = 16
ROW_TOL = 1e-8
# slack scale of the elastic fallback; a violation of v costs (v / weight)**2
ELASTIC_WEIGHT = 0.01

SOLVED = "solved"
INFEASIBLE = "infeasible"


class OracleDidNotConverge(RuntimeError):
    pass


@dataclass
class QpProblem:
    nominal: dict[int, np.ndarray]
    rows: list[ConstraintRow]
    alpha: dict[int, float]
    velocities: dict[int, np.ndarray] = field(default_factory=dict)
    kd: float = 2.0
    facets: int = DEFAULT_FACETS

    def __post_init__(self):
        for row in self.rows:
            for agent_id in row.coeffs:
                if agent_id not in self.nominal or agent_id not in self.alpha:
                    raise ValueError(f"row {row.source} references unknown agent {agent_id}")

    @property
    def ids(self) -> list[int]:
        return sorted(self.nominal)

    def dense(self, inscribed: frozenset = frozenset()):
        """Stack rows and polygon facets into ``(G, b, u_hat)`` over sorted ids.

        Agents listed in ``inscribed`` get the polygon pulled inside the disk.
        """
        ids = self.ids
        col = {agent_id: 2 * k for k, agent_id in enumerate(ids)}
        n = 2 * len(ids)
        G = np.zeros((len(self.rows) + self.facets * len(ids), n))
        b = np.zeros(G.shape[0])
        for r, row in enumerate(self.rows):
            for agent_id, c in row.coeffs.items():
                G[r, col[agent_id]] = c[0]
                G[r, col[agent_id] + 1] = c[1]
            b[r] = row.bound
        r = len(self.rows)
        for agent_id in ids:
            radius = self.alpha[agent_id]
            if agent_id in inscribed:
                radius *= math.cos(math.pi / self.facets)
            normals, bounds = norm_ball_facets(radius, self.facets)
            G[r:r + self.facets, col[agent_id]:col[agent_id] + 2] = normals
            b[r:r + self.facets] = bounds
            r += self.facets
        u_hat = np.concatenate([np.asarray(self.nominal[i], dtype=float) for i in ids]) \
            if ids else np.zeros(0)
        return G, b, u_hat


@dataclass
class QpSolution:
    controls: dict[int, np.ndarray]
    status: str
    objective: float
    # optimizer of the polygonal program before the radial clamp
    raw_controls: dict[int, np.ndarray] = field(default_factory=dict)
    iterations: int = 0


def norm_ball_facets(alpha: float, m: int = DEFAULT_FACETS):
    """Half-planes ``n_k . u <= alpha`` tangent to the circle at angles 2*pi*k/m."""
    if m < 4:
        raise ValueError("need at least 4 facets")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    theta = 2.0 * np.pi * np.arange(m) / m
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    return normals, np.full(m, float(alpha))


def braking_controls(velocities: dict[int, np.ndarray], alpha: dict[int, float],
                     kd: float, ids) -> dict[int, np.ndarray]:
    out = {}
    for i in ids:
        v = np.asarray(velocities.get(i, (0.0, 0.0)), dtype=float)
        out[i] = -clamp_to_ball(kd * v, alpha[i])
    return out


def _split(x: np.ndarray, ids) -> dict[int, np.ndarray]:
    return {agent_id: x[2 * k:2 * k + 2].copy() for k, agent_id in enumerate(ids)}


def solve(problem: QpProblem, fallback: str = "elastic") -> QpSolution:
    """Project the nominal controls onto the certificate rows and control disks.

    When the rows admit no solution the status is ``infeasible`` and the controls
    come from ``fallback``: ``"elastic"`` (least weighted violation, see
    :func:`elastic_solve`) or ``"braking"`` (each agent brakes on its own).
    """
    if fallback not in ("elastic", "braking"):
        raise ValueError("fallback must be 'elastic' or 'braking'")
    ids = problem.ids
    G, b, u_hat = problem.dense()
    x, status, iters = kernels.solve_qp(G, b, u_hat)
    if status != kernels.SOLVED:
        if fallback == "elastic":
            rows = len(problem.rows)
            x = elastic_solve(G[:rows], b[:rows], G[rows:], b[rows:], u_hat)
            controls = {i: clamp_to_ball(u, problem.alpha[i]) for i, u in _split(x, ids).items()}
        else:
            controls = braking_controls(problem.velocities, problem.alpha, problem.kd, ids)
        return QpSolution(controls=controls, status=INFEASIBLE, objective=math.nan,
                          iterations=iters)
    objective = float(np.sum((x - u_hat) ** 2))
    raw = _split(x, ids)
    controls = {i: clamp_to_ball(raw[i], problem.alpha[i]) for i in ids}
    clamped = frozenset(i for i in ids if not np.array_equal(controls[i], raw[i]))
    if clamped and any(row.evaluate(controls) > ROW_TOL for row in problem.rows):
        # the clamp pushed a row out; retry with those agents' polygons inside the disk
        G2, b2, _ = problem.dense(inscribed=clamped)
        x2, status2, iters2 = kernels.solve_qp(G2, b2, u_hat)
        iters += iters2
        if status2 == kernels.SOLVED:
            controls = {i: clamp_to_ball(u, problem.alpha[i]) for i, u in _split(x2, ids).items()}
    return QpSolution(controls=controls, status=SOLVED, objective=objective,
                      raw_controls=raw, iterations=iters)


def solve_dense(G_rows: np.ndarray, b_rows: np.ndarray, u_hat: np.ndarray, alphas: np.ndarray,
                velocities: np.ndarray, kd: float, facets: int = DEFAULT_FACETS,
                fallback: str = "elastic"):
    """Array fast path of :func:`solve` used inside the simulator.

    ``u_hat`` and ``velocities`` are (N, 2); returns ``(u (N, 2), solved: bool)``.
    """
    n_agents = u_hat.shape[0]
    normals, _ = norm_ball_facets(1.0, facets)
    cos_half = math.cos(math.pi / facets)

    def stacked(scale):
        F = np.zeros((facets * n_agents, 2 * n_agents))
        fb = np.empty(facets * n_agents)
        for i in range(n_agents):
            F[i * facets:(i + 1) * facets, 2 * i:2 * i + 2] = normals
            fb[i * facets:(i + 1) * facets] = alphas[i] * scale[i]
        return np.vstack([G_rows, F]), np.concatenate([b_rows, fb])

    scale = np.ones(n_agents)
    G, b = stacked(scale)
    x, status, _ = kernels.solve_qp(G, b, u_hat.reshape(-1))
    if status != kernels.SOLVED:
        if fallback == "elastic":
            rows = G_rows.shape[0]
            x = elastic_solve(G_rows, b_rows, G[rows:], b[rows:], u_hat.reshape(-1))
            raw = x.reshape(n_agents, 2)
            u = np.array([clamp_to_ball(raw[i], alphas[i]) for i in range(n_agents)])
        else:
            u = np.array([-clamp_to_ball(kd * velocities[i], alphas[i]) for i in range(n_agents)])
        return u.reshape(n_agents, 2), False
    raw = x.reshape(n_agents, 2)
    u = np.array([clamp_to_ball(raw[i], alphas[i]) for i in range(n_agents)])
    changed = np.any(u != raw, axis=1)
    if changed.any() and G_rows.shape[0] and np.max(G_rows @ u.reshape(-1) - b_rows) > ROW_TOL:
        scale[changed] = cos_half
        G, b = stacked(scale)
        x2, status2, _ = kernels.solve_qp(G, b, u_hat.reshape(-1))
        if status2 == kernels.SOLVED:
            raw = x2.reshape(n_agents, 2)
            u = np.array([clamp_to_ball(raw[i], alphas[i]) for i in range(n_agents)])
    return u, True


def elastic_solve(G_rows, b_rows, F, fb, u_hat, weight=ELASTIC_WEIGHT):
    """Least-violation controls when the certificate rows admit no solution.

    Each row gets a slack ``weight * s_k`` with ``s_k >= 0``; projecting
    ``(u_hat, 0)`` onto the enlarged polyhedron trades ``|u - u_hat|^2`` against
    ``|slack|^2 / weight^2``. The control bound ``F u <= fb`` stays hard, so the
    program is always feasible.
    """
    m, n = G_rows.shape
    k = F.shape[0]
    G = np.zeros((m + k + m, n + m))
    G[:m, :n] = G_rows
    G[:m, n:] = -weight * np.eye(m)
    G[m:m + k, :n] = F
    G[m + k:, n:] = -np.eye(m)
    b = np.concatenate([b_rows, fb, np.zeros(m)])
    x, _, _ = kernels.solve_qp(G, b, np.concatenate([u_hat, np.zeros(m)]))
    return x[:n]


def oracle_solve(problem: QpProblem, iterations: int = 200_000, step: float | None = None,
                 tol: float = 1e-9) -> QpSolution:
    """Accelerated projected gradient on the dual of the polygonal program.

    Test-only reference: the primal is recovered as ``u_hat - G^T lam``.
    Raises :class:`OracleDidNotConverge` when the budget runs out.
    """
    ids = problem.ids
    G, b, u_hat = problem.dense()
    if G.shape[0] == 0:
        return QpSolution(controls=_split(u_hat, ids), status=SOLVED, objective=0.0,
                          raw_controls=_split(u_hat, ids))
    if step is None:
        step = 1.0 / max(np.linalg.norm(G, 2) ** 2, 1e-12)
    lam = np.zeros(G.shape[0])
    y = lam.copy()
    t = 1.0
    x = u_hat
    for _ in range(iterations):
        x_y = u_hat - G.T @ y
        lam_next = np.maximum(0.0, y + step * (G @ x_y - b))
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = lam_next + ((t - 1.0) / t_next) * (lam_next - lam)
        # restart momentum when it stops helping
        if np.dot(lam_next - lam, lam_next - y) > 0:
            y = lam_next.copy()
            t_next = 1.0
        lam, t = lam_next, t_next
        x = u_hat - G.T @ lam
        g = G @ x - b
        residual = np.max(np.abs(lam - np.maximum(0.0, lam + g)))
        if residual <= tol and np.max(g) <= tol:
            obj = float(np.sum((x - u_hat) ** 2))
            return QpSolution(controls=_split(x, ids), status=SOLVED, objective=obj,
                              raw_controls=_split(x, ids))
    raise OracleDidNotConverge(f"no convergence after {iterations} iterations")


def random_problem(rng: np.random.Generator, n_agents: int, n_rows: int,
                   facets: int = DEFAULT_FACETS) -> QpProblem:
    """Random feasible problem shaped like the simulator's (pair and single-agent rows)."""
    ids = list(range(n_agents))
    alpha = {i: float(rng.uniform(0.5, 2.0)) for i in ids}
    anchor = {}
    for i in ids:
        direction = rng.normal(size=2)
        direction /= np.linalg.norm(direction)
        anchor[i] = direction * rng.uniform(0.0, 0.9) * alpha[i] * math.cos(math.pi / facets)
    rows = []
    for r in range(n_rows):
        if n_agents >= 2 and rng.random() < 0.6:
            i, j = sorted(rng.choice(n_agents, size=2, replace=False).tolist())
            dp = rng.normal(size=2)
            coeffs = {i: (-dp[0], -dp[1]), j: (dp[0], dp[1])}
            source = ("pair", i, j)
        else:
            i = int(rng.integers(n_agents))
            dp = rng.normal(size=2)
            coeffs = {i: (-dp[0], -dp[1])}
            source = ("obstacle", i, r)
        lhs = sum(c[0] * anchor[k][0] + c[1] * anchor[k][1] for k, c in coeffs.items())
        rows.append(ConstraintRow(coeffs=coeffs, bound=float(lhs + rng.exponential(0.3)),
                                  source=source))
    nominal = {i: rng.normal(size=2) * 1.5 for i in ids}
    return QpProblem(nominal=nominal, rows=rows, alpha=alpha)
