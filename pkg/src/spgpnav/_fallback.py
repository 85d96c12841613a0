"""Pure-Python/numpy versions of the hot kernels.

Mirrors ``spgpnav._core`` function for function; :mod:`spgpnav.kernels` picks
whichever is available at import time.
"""

from __future__ import annotations

import math

import numpy as np

SOLVED = 0
INFEASIBLE = 1
MAX_ITER = 2


CUBIC = 0
BRAKING = 1
# floor on the separation inside the braking-distance square root
SEP_FLOOR = 1e-3


def _closest_on_segments(pos, seg_a, seg_b):
    """Closest points of every segment to every agent; returns (points, interior)."""
    ab = seg_b - seg_a
    L2 = ab[:, 0] * ab[:, 0] + ab[:, 1] * ab[:, 1]
    rel = pos[:, None, :] - seg_a[None, :, :]
    t = (rel[..., 0] * ab[None, :, 0] + rel[..., 1] * ab[None, :, 1]) / L2[None, :]
    t = np.clip(t, 0.0, 1.0)
    pts = seg_a[None, :, :] + t[..., None] * ab[None, :, :]
    return pts, (t > 0.0) & (t < 1.0)


def assemble(pos, vel, radii, alphas, obs_c, obs_r, seg_a, seg_b, seg_r,
             gamma, margin, activation, form=CUBIC):
    n = pos.shape[0]
    ii, jj = np.triu_indices(n, 1)
    dp = pos[ii] - pos[jj]
    dv = vel[ii] - vel[jj]
    dist = np.hypot(dp[:, 0], dp[:, 1])
    h = dist - (radii[ii] + radii[jj]) - margin
    asum = alphas[ii] + alphas[jj]

    rows_i = [ii]
    rows_j = [jj]
    kinds = [np.zeros(len(ii), dtype=np.int64)]
    dps = [dp]
    dvs = [dv]
    hs = [h]
    asums = [asum]
    dists = [dist]
    curved = [np.ones(len(ii), dtype=bool)]

    if obs_c.shape[0]:
        d = pos[:, None, :] - obs_c[None, :, :]
        od = np.hypot(d[..., 0], d[..., 1])
        gap = od - radii[:, None] - obs_r[None, :]
        ai, ok = np.nonzero(gap <= activation)
        rows_i.append(ai)
        rows_j.append(ok)
        kinds.append(np.ones(len(ai), dtype=np.int64))
        dps.append(d[ai, ok])
        dvs.append(vel[ai])
        hs.append(gap[ai, ok] - margin)
        asums.append(alphas[ai])
        dists.append(od[ai, ok])
        curved.append(np.ones(len(ai), dtype=bool))

    if seg_a.shape[0]:
        pts, interior = _closest_on_segments(pos, seg_a, seg_b)
        d = pos[:, None, :] - pts
        sd = np.hypot(d[..., 0], d[..., 1])
        gap = sd - radii[:, None] - seg_r[None, :]
        ai, sk = np.nonzero(gap <= activation)
        rows_i.append(ai)
        rows_j.append(sk)
        kinds.append(np.full(len(ai), 2, dtype=np.int64))
        dps.append(d[ai, sk])
        dvs.append(vel[ai])
        hs.append(gap[ai, sk] - margin)
        asums.append(alphas[ai])
        dists.append(sd[ai, sk])
        # a flat face has no curvature term; only the rounded ends do
        curved.append(~interior[ai, sk])

    first = np.concatenate(rows_i).astype(np.int64)
    second = np.concatenate(rows_j).astype(np.int64)
    kind = np.concatenate(kinds)
    dp = np.concatenate(dps)
    dv = np.concatenate(dvs)
    h = np.concatenate(hs)
    asum = np.concatenate(asums)
    dist = np.concatenate(dists)
    curve = np.concatenate(curved)

    m = len(first)
    bad = -1
    degenerate = np.nonzero(dist == 0.0)[0]
    if len(degenerate):
        bad = int(degenerate[0])

    dvdp = dv[:, 0] * dp[:, 0] + dv[:, 1] * dp[:, 1]
    dp2 = dp[:, 0] * dp[:, 0] + dp[:, 1] * dp[:, 1]
    dv2 = dv[:, 0] * dv[:, 0] + dv[:, 1] * dv[:, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        # tangential speed squared, the term that vanishes against a flat face
        tangential = np.where(curve, dv2 - dvdp * dvdp / dp2, 0.0)
        if form == CUBIC:
            b = gamma * h * h * h + dvdp / (2.0 * asum) + tangential / 2.0
        else:
            root = np.sqrt(2.0 * asum * np.maximum(h, SEP_FLOOR))
            hb = root + dvdp / dist
            b = gamma * hb * hb * hb * dist + tangential + asum * dvdp / root
            # never ask for more separating acceleration than the pair can produce
            b = np.maximum(b, -asum * dist)

    G = np.zeros((m, 2 * n))
    r = np.arange(m)
    G[r, 2 * first] = -dp[:, 0]
    G[r, 2 * first + 1] = -dp[:, 1]
    pair = kind == 0
    G[r[pair], 2 * second[pair]] = dp[pair, 0]
    G[r[pair], 2 * second[pair] + 1] = dp[pair, 1]
    return G, b, kind, first, second, bad


def solve_qp(G, b, u0, tol=1e-10, max_iter=0):
    """Dual active-set projection of ``u0`` onto ``{x : G x <= b}``.

    Goldfarb-Idnani with an identity Hessian: start at the unconstrained
    minimizer and repeatedly add the most violated row, dropping rows whose
    multipliers would turn negative.
    """
    # nearly dependent active rows can overflow a step length to inf, which the
    # ratio tests already treat as "no block"
    with np.errstate(over="ignore"):
        return _solve_qp(G, b, u0, tol, max_iter)


def _solve_qp(G, b, u0, tol, max_iter):
    m, n = G.shape
    if max_iter <= 0:
        max_iter = 10 * (m + n) + 100
    x = np.array(u0, dtype=float)
    active: list[int] = []
    lam: list[float] = []
    it = 0
    while True:
        viol = G @ x - b
        p = int(np.argmax(viol)) if m else -1
        if m == 0 or viol[p] <= tol:
            return x, SOLVED, it
        npv = G[p]
        lam_p = 0.0
        while True:
            it += 1
            if it > max_iter:
                return x, MAX_ITER, it
            k = len(active)
            if k:
                N = G[active].T
                r = np.linalg.solve(N.T @ N, N.T @ npv)
                z = npv - N @ r
            else:
                r = np.zeros(0)
                z = npv.copy()
            zz = float(z @ z)
            t1 = math.inf
            jblock = -1
            for j in range(k):
                if r[j] > 0.0:
                    t = lam[j] / r[j]
                    if t < t1:
                        t1 = t
                        jblock = j
            if zz > 1e-12 * float(npv @ npv):
                t2 = (float(npv @ x) - b[p]) / zz
            else:
                t2 = math.inf
            if t1 == math.inf and t2 == math.inf:
                return x, INFEASIBLE, it
            if t2 <= t1:
                x = x - t2 * z
                for j in range(k):
                    lam[j] -= t2 * r[j]
                active.append(p)
                lam.append(lam_p + t2)
                break
            x = x - t1 * z
            for j in range(k):
                lam[j] -= t1 * r[j]
            lam_p += t1
            del active[jblock]
            del lam[jblock]
        # re-project onto the active faces to stop drift from incremental steps
        N = G[active].T
        lam_new = np.linalg.solve(N.T @ N, N.T @ np.asarray(u0, dtype=float) - b[active])
        if np.all(lam_new >= -1e-12):
            lam = [max(0.0, float(v)) for v in lam_new]
            x = np.asarray(u0, dtype=float) - N @ np.asarray(lam)


def hausdorff(A, B):
    best_ab = 0.0
    for a in A:
        d = (B[:, 0] - a[0]) * (B[:, 0] - a[0]) + (B[:, 1] - a[1]) * (B[:, 1] - a[1])
        best_ab = max(best_ab, float(d.min()))
    best_ba = 0.0
    for bpt in B:
        d = (A[:, 0] - bpt[0]) * (A[:, 0] - bpt[0]) + (A[:, 1] - bpt[1]) * (A[:, 1] - bpt[1])
        best_ba = max(best_ba, float(d.min()))
    return math.sqrt(max(best_ab, best_ba))
