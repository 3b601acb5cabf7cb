"""Reference computations written independently of the library internals.

Nothing here touches node graphs, branches or stage tables: the DP oracle
recurses over raw prefixes in plain Python, and the clustering oracle
enumerates partitions.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np


def grid_points(lo, hi, n):
    return [float(x) for x in np.linspace(lo, hi, n)]


def nearest_index(x, lo, hi, n):
    """Documented grid rounding: scaled offset, halves round up, clipped."""
    if n == 1:
        return 0
    t = (x - lo) * ((n - 1) / (hi - lo))
    return min(max(int(math.floor(t + 0.5)), 0), n - 1)


def tree_root_value(values, probs, *, a, b, c, r, target, q, x_bounds, u_bounds,
                    nx, nu, x0, penalty=1e3, tol=1e-9):
    """Optimal expected cost of the linear plant against a finite sequence set.

    The information at step ``k`` is the raw observed prefix; the control
    minimizes running cost plus the conditional expectation of the next
    value over sequences consistent with the prefix.
    """
    values = [tuple(float(x) for x in row) for row in values]
    probs = [float(p) for p in probs]
    N = len(values[0])
    xlo, xhi = x_bounds
    xs = grid_points(xlo, xhi, nx)
    us = grid_points(*u_bounds, nu)

    def mass(prefix):
        k = len(prefix)
        return sum(p for v, p in zip(values, probs) if v[:k] == prefix)

    def next_values(prefix):
        k = len(prefix)
        seen = []
        for v in values:
            if v[:k] == prefix and v[k] not in seen:
                seen.append(v[k])
        return seen

    @lru_cache(maxsize=None)
    def stage(k, xi, prefix):
        # prefix includes w_k
        x, w = xs[xi], prefix[-1]
        options = []
        for u in us:
            xn = a * x + b * u - c * w
            if xlo - tol <= xn <= xhi + tol:
                options.append((u, xn, 0.0))
        if not options:
            gaps = [max(xlo - (a * x + b * u - c * w), (a * x + b * u - c * w) - xhi, 0.0)
                    for u in us]
            u = us[gaps.index(min(gaps))]
            options.append((u, a * x + b * u - c * w, penalty))
        best = math.inf
        for u, xn, pen in options:
            xn = min(max(xn, xlo), xhi)
            j = nearest_index(xn, xlo, xhi, nx)
            total = r * u * u + pen + cont(k, j, prefix)
            best = min(best, total)
        return best

    def cont(k, j, prefix):
        if k == N - 1:
            d = target - xs[j]
            return q * d * d
        p0 = mass(prefix)
        return sum(mass(prefix + (w,)) / p0 * stage(k + 1, j, prefix + (w,))
                   for w in next_values(prefix))

    i0 = nearest_index(x0, xlo, xhi, nx)
    return sum(mass((w,)) * stage(0, i0, (w,)) for w in next_values(()))


def best_two_partition(points):
    """Lowest within-cluster sum of squares over all splits into two nonempty groups."""
    pts = [float(p) for p in points]
    best = (math.inf, None)
    for mask in itertools.product([0, 1], repeat=len(pts)):
        if 0 < sum(mask) < len(pts):
            groups = [[p for p, m in zip(pts, mask) if m == g] for g in (0, 1)]
            phi = sum(sum((p - sum(G) / len(G)) ** 2 for p in G) for G in groups)
            if phi < best[0]:
                best = (phi, sorted(sorted(G) for G in groups))
    return best
