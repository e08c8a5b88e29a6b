"""Independent reference implementations used to cross-check the library.

Everything here is deliberately written without touching package
internals: explicit loops over observations and grid nodes, moments by
adaptive quadrature instead of closed forms, and a dense nonsymmetric
solve of the collocation system instead of the symmetrized Cholesky
route.  Slow on purpose; use tiny inputs.
"""

import math
from functools import lru_cache

import numpy as np
from scipy import integrate


def epan(v: float) -> float:
    return 0.75 * (1.0 - v * v) if abs(v) <= 1.0 else 0.0


@lru_cache(maxsize=None)
def _multiplier_coeffs(t: float, h: float):
    lo = max(-1.0, (t - 1.0) / h)
    hi = min(1.0, t / h)
    s0 = integrate.quad(epan, lo, hi)[0]
    s1 = integrate.quad(lambda v: v * epan(v), lo, hi)[0]
    s2 = integrate.quad(lambda v: v * v * epan(v), lo, hi)[0]
    return s1, s2, s0 * s2 - s1 * s1


def kernel_value(u: float, t: float, h: float, policy: str) -> float:
    if u > t or u < t - 1.0:
        return 0.0
    v = u / h
    base = epan(v)
    if base == 0.0 or policy == "plain":
        return base
    if (t - 1.0) / h <= -1.0 and t / h >= 1.0:
        return base
    s1, s2, denom = _multiplier_coeffs(t, h)
    return (s2 - s1 * v) * base / denom


def kde_pair(xs, ws, h, policy, x, w, omit=None):
    total = 0.0
    count = 0
    for i in range(len(xs)):
        if omit is not None and i == omit:
            continue
        total += kernel_value(x - xs[i], x, h, policy) * kernel_value(w - ws[i], w, h, policy)
        count += 1
    return total / (count * h * h)


def _linear_interp(nodes, values, pt):
    if pt <= nodes[0]:
        return values[0]
    if pt >= nodes[-1]:
        return values[-1]
    k = 0
    while nodes[k + 1] < pt:
        k += 1
    frac = (pt - nodes[k]) / (nodes[k + 1] - nodes[k])
    return values[k] * (1.0 - frac) + values[k + 1] * frac


def estimate_bivariate(xs, ws, ys, h, a, nodes, wts, eval_points, policy):
    """Direct assembly of the kernel estimator on the given grid."""
    n, m = len(xs), len(nodes)
    mesh = np.empty((m, m))
    for l in range(m):
        for q in range(m):
            mesh[l, q] = kde_pair(xs, ws, h, policy, nodes[l], nodes[q])
    t_mat = np.empty((m, m))
    for l in range(m):
        for k in range(m):
            t_mat[l, k] = sum(wts[q] * mesh[l, q] * mesh[k, q] for q in range(m))
    # collocation rows: sum_l t(node_l, node_r) w_l psi_l + a psi_r = rhs_r
    system = np.empty((m, m))
    for r in range(m):
        for l in range(m):
            system[r, l] = t_mat[r, l] * wts[l] + (a if r == l else 0.0)
    grid_avg = np.zeros(m)
    for i in range(n):
        rhs = np.array([kde_pair(xs, ws, h, policy, nodes[r], ws[i], omit=i) for r in range(m)])
        psi = np.linalg.solve(system, rhs)
        grid_avg += psi * ys[i]
    grid_avg /= n
    return np.array([_linear_interp(nodes, grid_avg, p) for p in eval_points])


def estimate_multivariate(xs, ws, ys, zs, z0, hx, hz, a, nodes, wts, eval_points, policy):
    """Direct assembly of the estimator localized at the covariate value z0."""
    n, m = len(xs), len(nodes)
    loc = np.array([kernel_value(z0 - zs[i], z0, hz, policy) for i in range(n)])

    def fxzw(x, w, omit=None):
        total = 0.0
        count = 0
        for i in range(n):
            if omit is not None and i == omit:
                continue
            total += (
                kernel_value(x - xs[i], x, hx, policy)
                * loc[i]
                * kernel_value(w - ws[i], w, hx, policy)
            )
            count += 1
        return total / (count * hx * hx * hz)

    mesh = np.empty((m, m))
    for l in range(m):
        for q in range(m):
            mesh[l, q] = fxzw(nodes[l], nodes[q])
    t_mat = np.empty((m, m))
    for l in range(m):
        for k in range(m):
            t_mat[l, k] = sum(wts[q] * mesh[l, q] * mesh[k, q] for q in range(m))
    system = np.empty((m, m))
    for r in range(m):
        for l in range(m):
            system[r, l] = t_mat[r, l] * wts[l] + (a if r == l else 0.0)
    grid_avg = np.zeros(m)
    for i in range(n):
        rhs = np.array([fxzw(nodes[r], ws[i], omit=i) for r in range(m)])
        psi = np.linalg.solve(system, rhs)
        grid_avg += psi * ys[i] * loc[i]
    grid_avg /= n * hz
    return np.array([_linear_interp(nodes, grid_avg, p) for p in eval_points])


def ecdf(samples):
    out = []
    for s in samples:
        out.append(sum(1 for t in samples if t <= s) / len(samples))
    return np.array(out)


def chi(j, x):
    return 1.0 if j == 1 else math.sqrt(2.0) * math.cos((j - 1) * math.pi * x)


def series_estimate(xs, ws, ys, m, band, a, eval_points):
    n = len(xs)
    wt, xt = ecdf(ws), ecdf(xs)
    q = np.zeros((m, m))
    for j in range(1, m + 1):
        for k in range(1, m + 1):
            if abs(j - k) < band:
                q[j - 1, k - 1] = sum(chi(j, wt[i]) * chi(k, xt[i]) for i in range(n)) / n
    p = np.array([sum(chi(j, wt[i]) * ys[i] for i in range(n)) / n for j in range(1, m + 1)])
    gamma = np.linalg.solve(q @ q.T + a * np.eye(m), q @ p)
    return gamma, np.array(
        [sum(gamma[j - 1] * chi(j, x) for j in range(1, m + 1)) for x in eval_points]
    )
