"""Pure-numpy fallbacks for the compiled rank kernels.

Semantics match ``talkqa._native`` exactly; the pair scan is blocked so the
O(n^2) comparison matrices stay bounded in memory.
"""

import numpy as np

_BLOCK = 512


def average_ranks(values):
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_vals) != 0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [n]))
    group_ranks = 0.5 * (starts + ends - 1) + 1.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(group_ranks, ends - starts)
    return ranks


def kendall_counts(x, y):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    c = d = tx = ty = txy = 0
    cols = np.arange(n)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        dx = np.sign(x[start:stop, None] - x[None, :])
        dy = np.sign(y[start:stop, None] - y[None, :])
        upper = cols[None, :] > np.arange(start, stop)[:, None]
        dx = dx[upper]
        dy = dy[upper]
        x_tied = dx == 0
        y_tied = dy == 0
        txy += int(np.count_nonzero(x_tied & y_tied))
        tx += int(np.count_nonzero(x_tied & ~y_tied))
        ty += int(np.count_nonzero(~x_tied & y_tied))
        prod = dx * dy
        c += int(np.count_nonzero(prod > 0))
        d += int(np.count_nonzero(prod < 0))
    return c, d, tx, ty, txy
