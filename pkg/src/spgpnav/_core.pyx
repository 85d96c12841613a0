# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels; same signatures as ``spgpnav._fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

SOLVED = 0
INFEASIBLE = 1
MAX_ITER = 2

CUBIC = 0
BRAKING = 1
cdef int C_CUBIC = 0
cdef double SEP_FLOOR = 1e-3


cdef inline double _bound(double dpx, double dpy, double dvx, double dvy, double dist,
                          double h, double asum, double gamma, int form, bint curved) nogil:
    cdef double dvdp = dvx * dpx + dvy * dpy
    cdef double dp2 = dpx * dpx + dpy * dpy
    cdef double dv2 = dvx * dvx + dvy * dvy
    cdef double tangential = 0.0
    cdef double root, hb, b
    if curved:
        tangential = dv2 - dvdp * dvdp / dp2
    if form == C_CUBIC:
        return gamma * h * h * h + dvdp / (2.0 * asum) + tangential / 2.0
    root = sqrt(2.0 * asum * (h if h > SEP_FLOOR else SEP_FLOOR))
    hb = root + dvdp / dist
    b = gamma * hb * hb * hb * dist + tangential + asum * dvdp / root
    if b < -asum * dist:
        b = -asum * dist
    return b


cdef inline double _closest(double px, double py, double ax, double ay, double bx, double by,
                            double* cx, double* cy) nogil:
    # closest point of segment a-b to p; returns the clipped parameter t
    cdef double abx = bx - ax
    cdef double aby = by - ay
    cdef double t = ((px - ax) * abx + (py - ay) * aby) / (abx * abx + aby * aby)
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    cx[0] = ax + t * abx
    cy[0] = ay + t * aby
    return t


def assemble(double[:, ::1] pos, double[:, ::1] vel, double[::1] radii, double[::1] alphas,
             double[:, ::1] obs_c, double[::1] obs_r, double[:, ::1] seg_a,
             double[:, ::1] seg_b, double[::1] seg_r, double gamma, double margin,
             double activation, int form=CUBIC):
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t n_obs = obs_c.shape[0]
    cdef Py_ssize_t n_seg = seg_a.shape[0]
    cdef Py_ssize_t n_pair = n * (n - 1) // 2
    cdef Py_ssize_t i, j, k, m, r
    cdef double dpx, dpy, dist, gap, cx, cy, t

    # count active obstacle and wall rows first so the outputs can be sized exactly
    m = n_pair
    for i in range(n):
        for k in range(n_obs):
            dist = hypot(pos[i, 0] - obs_c[k, 0], pos[i, 1] - obs_c[k, 1])
            if dist - radii[i] - obs_r[k] <= activation:
                m += 1
    for i in range(n):
        for k in range(n_seg):
            _closest(pos[i, 0], pos[i, 1], seg_a[k, 0], seg_a[k, 1], seg_b[k, 0], seg_b[k, 1],
                     &cx, &cy)
            dist = hypot(pos[i, 0] - cx, pos[i, 1] - cy)
            if dist - radii[i] - seg_r[k] <= activation:
                m += 1

    G_arr = np.zeros((m, 2 * n))
    b_arr = np.empty(m)
    kind_arr = np.empty(m, dtype=np.int64)
    first_arr = np.empty(m, dtype=np.int64)
    second_arr = np.empty(m, dtype=np.int64)
    cdef double[:, ::1] G = G_arr
    cdef double[::1] b = b_arr
    cdef long long[::1] kind = kind_arr
    cdef long long[::1] first = first_arr
    cdef long long[::1] second = second_arr
    cdef long long bad = -1

    r = 0
    for i in range(n):
        for j in range(i + 1, n):
            dpx = pos[i, 0] - pos[j, 0]
            dpy = pos[i, 1] - pos[j, 1]
            dist = hypot(dpx, dpy)
            if dist == 0.0 and bad < 0:
                bad = r
            b[r] = _bound(dpx, dpy, vel[i, 0] - vel[j, 0], vel[i, 1] - vel[j, 1], dist,
                          dist - (radii[i] + radii[j]) - margin, alphas[i] + alphas[j],
                          gamma, form, True)
            G[r, 2 * i] = -dpx
            G[r, 2 * i + 1] = -dpy
            G[r, 2 * j] = dpx
            G[r, 2 * j + 1] = dpy
            kind[r] = 0
            first[r] = i
            second[r] = j
            r += 1
    for i in range(n):
        for k in range(n_obs):
            dpx = pos[i, 0] - obs_c[k, 0]
            dpy = pos[i, 1] - obs_c[k, 1]
            dist = hypot(dpx, dpy)
            gap = dist - radii[i] - obs_r[k]
            if gap > activation:
                continue
            if dist == 0.0 and bad < 0:
                bad = r
            b[r] = _bound(dpx, dpy, vel[i, 0], vel[i, 1], dist, gap - margin, alphas[i],
                          gamma, form, True)
            G[r, 2 * i] = -dpx
            G[r, 2 * i + 1] = -dpy
            kind[r] = 1
            first[r] = i
            second[r] = k
            r += 1
    for i in range(n):
        for k in range(n_seg):
            t = _closest(pos[i, 0], pos[i, 1], seg_a[k, 0], seg_a[k, 1], seg_b[k, 0],
                         seg_b[k, 1], &cx, &cy)
            dpx = pos[i, 0] - cx
            dpy = pos[i, 1] - cy
            dist = hypot(dpx, dpy)
            gap = dist - radii[i] - seg_r[k]
            if gap > activation:
                continue
            if dist == 0.0 and bad < 0:
                bad = r
            # a flat face has no curvature term; only the rounded ends do
            b[r] = _bound(dpx, dpy, vel[i, 0], vel[i, 1], dist, gap - margin, alphas[i],
                          gamma, form, not (0.0 < t < 1.0))
            G[r, 2 * i] = -dpx
            G[r, 2 * i + 1] = -dpy
            kind[r] = 2
            first[r] = i
            second[r] = k
            r += 1
    return G_arr, b_arr, kind_arr, first_arr, second_arr, int(bad)


cdef int _cholesky_solve(double* A, double* rhs, int k) nogil:
    """In-place Cholesky solve of the k x k SPD system A y = rhs; result in rhs."""
    cdef int i, j, p
    cdef double s
    for j in range(k):
        s = A[j * k + j]
        for p in range(j):
            s -= A[j * k + p] * A[j * k + p]
        if s <= 0.0:
            return -1
        A[j * k + j] = sqrt(s)
        for i in range(j + 1, k):
            s = A[i * k + j]
            for p in range(j):
                s -= A[i * k + p] * A[j * k + p]
            A[i * k + j] = s / A[j * k + j]
    for i in range(k):
        s = rhs[i]
        for p in range(i):
            s -= A[i * k + p] * rhs[p]
        rhs[i] = s / A[i * k + i]
    for i in range(k - 1, -1, -1):
        s = rhs[i]
        for p in range(i + 1, k):
            s -= A[p * k + i] * rhs[p]
        rhs[i] = s / A[i * k + i]
    return 0


cdef int _normal_solve(double[:, ::1] G, int* active, int k, double* rhs, double* work) nogil:
    # fills work with N^T N for the active rows and solves in place on rhs
    cdef int a, c, q
    cdef Py_ssize_t n = G.shape[1]
    cdef double s
    for a in range(k):
        for c in range(a, k):
            s = 0.0
            for q in range(n):
                s += G[active[a], q] * G[active[c], q]
            work[a * k + c] = s
            work[c * k + a] = s
    return _cholesky_solve(work, rhs, k)


def solve_qp(double[:, ::1] G, double[::1] b, u0_in, double tol=1e-10, int max_iter=0):
    """Dual active-set projection of ``u0`` onto ``{x : G x <= b}``."""
    cdef Py_ssize_t m = G.shape[0]
    cdef Py_ssize_t n = G.shape[1]
    cdef double[::1] u0 = np.ascontiguousarray(u0_in, dtype=float)
    x_arr = np.array(u0, dtype=float)
    cdef double[::1] x = x_arr
    if max_iter <= 0:
        max_iter = 10 * (m + n) + 100
    if m == 0:
        return x_arr, SOLVED, 0

    cdef int cap = <int>(m if m > 0 else 1)
    cdef int* active = <int*>malloc(cap * sizeof(int))
    cdef double* lam = <double*>malloc(cap * sizeof(double))
    cdef double* r = <double*>malloc(cap * sizeof(double))
    cdef double* work = <double*>malloc(cap * cap * sizeof(double))
    cdef double* z = <double*>malloc(n * sizeof(double))
    cdef int k = 0
    cdef int it = 0
    cdef int status = SOLVED
    cdef int p, j, q, jblock, a, ok
    cdef double best, v, lam_p, zz, nn, t1, t2, t, s
    try:
        while True:
            p = -1
            best = -INFINITY
            for j in range(m):
                v = -b[j]
                for q in range(n):
                    v += G[j, q] * x[q]
                if v > best:
                    best = v
                    p = j
            if best <= tol:
                status = SOLVED
                break
            lam_p = 0.0
            while True:
                it += 1
                if it > max_iter:
                    status = MAX_ITER
                    break
                nn = 0.0
                for q in range(n):
                    nn += G[p, q] * G[p, q]
                if k:
                    for a in range(k):
                        s = 0.0
                        for q in range(n):
                            s += G[active[a], q] * G[p, q]
                        r[a] = s
                    ok = _normal_solve(G, active, k, r, work)
                    for q in range(n):
                        s = G[p, q]
                        for a in range(k):
                            s -= G[active[a], q] * r[a]
                        z[q] = s
                else:
                    for q in range(n):
                        z[q] = G[p, q]
                zz = 0.0
                for q in range(n):
                    zz += z[q] * z[q]
                t1 = INFINITY
                jblock = -1
                for j in range(k):
                    if r[j] > 0.0:
                        t = lam[j] / r[j]
                        if t < t1:
                            t1 = t
                            jblock = j
                if zz > 1e-12 * nn:
                    s = -b[p]
                    for q in range(n):
                        s += G[p, q] * x[q]
                    t2 = s / zz
                else:
                    t2 = INFINITY
                if t1 == INFINITY and t2 == INFINITY:
                    status = INFEASIBLE
                    break
                if t2 <= t1:
                    for q in range(n):
                        x[q] -= t2 * z[q]
                    for j in range(k):
                        lam[j] -= t2 * r[j]
                    active[k] = p
                    lam[k] = lam_p + t2
                    k += 1
                    break
                for q in range(n):
                    x[q] -= t1 * z[q]
                for j in range(k):
                    lam[j] -= t1 * r[j]
                lam_p += t1
                for j in range(jblock, k - 1):
                    active[j] = active[j + 1]
                    lam[j] = lam[j + 1]
                k -= 1
            if status != SOLVED:
                break
            # re-project onto the active faces to stop drift from incremental steps
            for a in range(k):
                s = -b[active[a]]
                for q in range(n):
                    s += G[active[a], q] * u0[q]
                r[a] = s
            if _normal_solve(G, active, k, r, work) == 0:
                ok = 1
                for a in range(k):
                    if r[a] < -1e-12:
                        ok = 0
                        break
                if ok:
                    for a in range(k):
                        lam[a] = r[a] if r[a] > 0.0 else 0.0
                    for q in range(n):
                        s = u0[q]
                        for a in range(k):
                            s -= G[active[a], q] * lam[a]
                        x[q] = s
    finally:
        free(active)
        free(lam)
        free(r)
        free(work)
        free(z)
    return x_arr, status, it


def hausdorff(double[:, ::1] A, double[:, ::1] B):
    cdef Py_ssize_t na = A.shape[0]
    cdef Py_ssize_t nb = B.shape[0]
    cdef Py_ssize_t i, j
    cdef double best = 0.0
    cdef double near, d, dx, dy
    for i in range(na):
        near = INFINITY
        for j in range(nb):
            dx = B[j, 0] - A[i, 0]
            dy = B[j, 1] - A[i, 1]
            d = dx * dx + dy * dy
            if d < near:
                near = d
        if near > best:
            best = near
    for j in range(nb):
        near = INFINITY
        for i in range(na):
            dx = A[i, 0] - B[j, 0]
            dy = A[i, 1] - B[j, 1]
            d = dx * dx + dy * dy
            if d < near:
                near = d
        if near > best:
            best = near
    return sqrt(best)
