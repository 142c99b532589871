"""Loop-style kernels, compiled with numba when available.

Every function here has a vectorised twin in ``_kernels_numpy`` with the
same signature. ``kernels`` picks one of the two at import time.
"""
import math

import numpy as np

from ._accel import njit

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
TIE_RTOL = 1e-12
# delta2 is kept at or above the smallest normal double instead of underflowing to 0
TINY = 2.2250738585072014e-308


@njit
def greedy_exclusion_order(s, total, max_len, side):
    """Indices of ``s`` in the order the greedy farthest-from-mean rule drops them.

    ``total`` is the sum of ``s`` (precomputed so both backends start from
    the same float). ``side`` 0 ranks by absolute deviation; +1/-1 rank by
    signed deviation ``side * (s - mean)``.
    """
    n = s.shape[0]
    included = np.ones(n, dtype=np.bool_)
    order = np.empty(max_len, dtype=np.int64)
    cnt = n
    for step in range(max_len):
        mean = total / cnt
        best = -1
        best_dev = -np.inf
        for j in range(n):
            if not included[j]:
                continue
            if side == 0:
                dev = abs(s[j] - mean)
            else:
                dev = side * (s[j] - mean)
            if dev > best_dev:
                best_dev = dev
                best = j
        order[step] = best
        included[best] = False
        total -= s[best]
        cnt -= 1
    return order


@njit
def prefix_stats(s, order, total):
    """Mean, support and excluded-distance sum after dropping each prefix of ``order``.

    Row ``p`` of each output describes the class with ``order[:p]`` removed.
    """
    n = s.shape[0]
    n_steps = order.shape[0] + 1
    means = np.empty(n_steps)
    supports = np.empty(n_steps)
    exdist = np.empty(n_steps)
    included = np.ones(n, dtype=np.bool_)
    cnt = n
    for p in range(n_steps):
        if p > 0:
            j = order[p - 1]
            included[j] = False
            total -= s[j]
            cnt -= 1
        mean = total / cnt
        sup = 0.0
        ex = 0.0
        for j in range(n):
            dev = abs(s[j] - mean)
            if included[j]:
                if dev > sup:
                    sup = dev
            else:
                ex += dev
        means[p] = mean
        supports[p] = sup
        exdist[p] = ex
    return means, supports, exdist


@njit
def _objective(d1, r1, r2, n1, n2, dist):
    # inf marks an infeasible delta1
    if r2 <= 0.0:
        return np.inf, np.nan
    u1 = math.sqrt(-2.0 * math.log(d1))
    b = dist - r1 - r1 / math.sqrt(n1) * (2.0 + u1) - r2
    z = b * math.sqrt(n2) / r2 - 2.0
    if z < 0.0:
        return np.inf, np.nan
    d2 = max(math.exp(-0.5 * z * z), TINY)
    # the delta-dependent part of the loss; the constant sum of 1/(N+1) is
    # left out so comparisons keep full relative precision for tiny deltas
    excess = d1 * (n1 / (n1 + 1.0)) + d2 * (n2 / (n2 + 1.0))
    return excess, d2


@njit
def _gradient(d1, r1, r2, n1, n2, dist):
    u1 = math.sqrt(-2.0 * math.log(d1))
    b = dist - r1 - r1 / math.sqrt(n1) * (2.0 + u1) - r2
    z = b * math.sqrt(n2) / r2 - 2.0
    d2 = math.exp(-0.5 * z * z)
    dd2 = -z * (math.sqrt(n2) * r1) / (r2 * math.sqrt(n1) * d1) / u1 * d2
    return n1 / (n1 + 1.0) + dd2 * n2 / (n2 + 1.0)


@njit
def _feasibility_edge(r1, r2, n1, n2, dist, floor):
    """Smallest feasible delta1, or -1.0 when even delta1 = 1 is infeasible."""
    if r2 <= 0.0:
        return -1.0
    slack = dist - r1 - r2 - 2.0 * r2 / math.sqrt(n2)
    if r1 <= 0.0:
        return floor if slack >= 0.0 else -1.0
    c = slack * math.sqrt(n1) / r1 - 2.0
    if c < 0.0:
        return -1.0
    edge = max(math.exp(-0.5 * c * c), floor)
    # rounding can leave the analytic edge a hair inside the infeasible side
    for _ in range(8):
        loss, _d2 = _objective(edge, r1, r2, n1, n2, dist)
        if loss < np.inf or edge >= 1.0:
            break
        edge = min(np.nextafter(edge, 2.0), 1.0)
    return edge


@njit
def _optimize_one(r1, r2, n1, n2, dist, grid, floor, tol):
    g = grid.shape[0]
    best_i = -1
    best_loss = np.inf
    for i in range(g):
        loss, _d2 = _objective(grid[i], r1, r2, n1, n2, dist)
        if loss < best_loss:
            best_loss = loss
            best_i = i
    if best_i < 0:
        return np.nan, np.nan, np.nan, False

    lo = grid[best_i - 1] if best_i > 0 else floor
    hi = grid[best_i + 1] if best_i < g - 1 else 1.0
    edge = _feasibility_edge(r1, r2, n1, n2, dist, floor)
    if edge > lo:
        lo = min(edge, grid[best_i])

    a = lo
    b = hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, _t = _objective(c, r1, r2, n1, n2, dist)
    fd, _t = _objective(d, r1, r2, n1, n2, dist)
    for _ in range(200):
        if b - a <= tol * b:
            break
        if fc <= fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc, _t = _objective(c, r1, r2, n1, n2, dist)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd, _t = _objective(d, r1, r2, n1, n2, dist)
    x_gold = 0.5 * (a + b)

    # golden section only resolves the minimiser to ~sqrt(eps); bisecting the
    # analytic gradient over the whole bracket pins it down to rounding
    x_pol = -1.0
    pl = lo
    pr = hi
    if pr >= 1.0:
        pr = np.nextafter(1.0, 0.0)
    if pl < pr and _objective(pl, r1, r2, n1, n2, dist)[0] < np.inf:
        if _gradient(pl, r1, r2, n1, n2, dist) < 0.0 < _gradient(pr, r1, r2, n1, n2, dist):
            for _ in range(200):
                mid = 0.5 * (pl + pr)
                if mid <= pl or mid >= pr:
                    break
                if _gradient(mid, r1, r2, n1, n2, dist) < 0.0:
                    pl = mid
                else:
                    pr = mid
            x_pol = 0.5 * (pl + pr)

    cands = np.array([x_pol, edge, x_gold, grid[best_i]])
    losses = np.full(4, np.inf)
    for k in range(4):
        if cands[k] > 0.0:
            losses[k] = _objective(cands[k], r1, r2, n1, n2, dist)[0]
    m = losses.min()
    # delta2 = exp(-z^2/2) carries ~z^2 eps of rounding, so near-ties are judged
    # at a relative 1e-12 and resolved in preference order
    slack = TIE_RTOL * m
    for k in range(4):
        if losses[k] <= m + slack:
            d1 = cands[k]
            excess, d2 = _objective(d1, r1, r2, n1, n2, dist)
            return d1, d2, 1.0 / (n1 + 1.0) + 1.0 / (n2 + 1.0) + excess, True
    return np.nan, np.nan, np.nan, False  # unreachable


@njit
def optimize_many(r1, r2, n1, n2, dist, grid, floor, tol):
    """Minimise the coupled-confidence loss for each row of statistics."""
    m = r1.shape[0]
    d1 = np.empty(m)
    d2 = np.empty(m)
    loss = np.empty(m)
    ok = np.empty(m, dtype=np.bool_)
    for i in range(m):
        d1[i], d2[i], loss[i], ok[i] = _optimize_one(
            r1[i], r2[i], n1[i], n2[i], dist[i], grid, floor, tol
        )
    return d1, d2, loss, ok


@njit
def pegasos_alphas(gram, y, weights, perms, lam):
    """Kernel Pegasos with step 1/(lam*t); returns accumulated weighted counts.

    The decision function after ``T`` steps is
    ``(1 / (lam * T)) * sum_j alpha_j * y_j * gram[j, :]``.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    t = 0
    for e in range(perms.shape[0]):
        for k in range(n):
            i = perms[e, k]
            t += 1
            acc = 0.0
            for j in range(n):
                if alpha[j] != 0.0:
                    acc += alpha[j] * y[j] * gram[j, i]
            if y[i] * acc / (lam * t) < 1.0:
                alpha[i] += weights[i]
    return alpha


@njit
def count_last_is_max(draws):
    """Rows whose final entry strictly exceeds every earlier entry."""
    trials, cols = draws.shape
    hits = 0
    for r in range(trials):
        last = draws[r, cols - 1]
        top = -np.inf
        for c in range(cols - 1):
            if draws[r, c] > top:
                top = draws[r, c]
        if last > top:
            hits += 1
    return hits
