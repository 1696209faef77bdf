"""Pure-Python/numpy reference implementations of the hot kernels.

Used when the compiled extension is unavailable; must stay numerically
identical to ``_core.pyx`` (the parity test enforces this).
"""
import numpy as np

BACKEND = "python"


def iou_pairs(a, b):
    """Element-wise IoU of two aligned (N, 4) arrays of [x, y, w, h] boxes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ix = np.minimum(a[:, 0] + a[:, 2], b[:, 0] + b[:, 2]) - np.maximum(a[:, 0], b[:, 0])
    iy = np.minimum(a[:, 1] + a[:, 3], b[:, 1] + b[:, 3]) - np.maximum(a[:, 1], b[:, 1])
    inter = np.maximum(ix, 0.0) * np.maximum(iy, 0.0)
    union = a[:, 2] * a[:, 3] + b[:, 2] * b[:, 3] - inter
    out = np.zeros(len(a), dtype=np.float64)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def iou_matrix(a, b):
    """Pairwise IoU of an (n, 4) and an (m, 4) array of [x, y, w, h] boxes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ax, ay = a[:, 0, None], a[:, 1, None]
    bx, by = b[None, :, 0], b[None, :, 1]
    ix = np.minimum(ax + a[:, 2, None], bx + b[None, :, 2]) - np.maximum(ax, bx)
    iy = np.minimum(ay + a[:, 3, None], by + b[None, :, 3]) - np.maximum(ay, by)
    inter = np.maximum(ix, 0.0) * np.maximum(iy, 0.0)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    out = np.zeros((len(a), len(b)), dtype=np.float64)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def lap_solve(cost):
    """Minimum-cost assignment for an (n, m) matrix with n <= m.

    Shortest augmenting path with dual potentials (O(n^2 m)); every row is
    matched. Returns an int64 array ``row_to_col`` of length n.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n > m:
        raise ValueError("lap_solve expects n <= m; transpose the matrix")
    INF = np.inf
    # 1-based potentials/matching, p[j] = row matched to column j (0 = free)
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, INF)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col
