"""Minimum-cost bipartite matching with a deterministic tie-break.

The solver kernel (compiled or fallback) finds one optimal matching; the
public :func:`hungarian` then refines it to the lexicographically smallest
list of (row, col) pairs among all optima, fixing rows in ascending order and
re-solving the reduced problem to verify optimality is preserved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import lap_solve


@dataclass
class Assignment:
    matches: list          # (row, col) pairs, sorted by row
    unmatched_rows: list
    unmatched_cols: list
    total_cost: float


def _optimal_total(cost: np.ndarray) -> float:
    """Cost of one optimal maximal matching (min(n, m) pairs)."""
    n, m = cost.shape
    if n == 0 or m == 0:
        return 0.0
    if n <= m:
        r2c = lap_solve(cost)
        pairs = [(i, int(r2c[i])) for i in range(n)]
    else:
        c2r = lap_solve(np.ascontiguousarray(cost.T))
        pairs = sorted((int(c2r[j]), j) for j in range(m))
    return float(sum(cost[i, j] for i, j in pairs))


def hungarian(cost) -> Assignment:
    """Minimum-total-cost maximal matching of a rectangular cost matrix.

    Ties between optimal matchings are broken toward the lexicographically
    smallest sorted pair list. Tie detection tolerates float rounding from
    the solver (1e-9 relative), which is exact for the integral and
    well-separated matrices this is used on.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    if cost.size and not np.all(np.isfinite(cost)):
        raise ValueError("cost entries must be finite")
    n, m = cost.shape
    k = min(n, m)
    if k == 0:
        return Assignment([], list(range(n)), list(range(m)), 0.0)

    best_total = _optimal_total(cost)
    tol = 1e-9 * max(1.0, abs(best_total))

    matches: list = []
    fixed_cost = 0.0
    rows_left = list(range(n))
    cols_left = list(range(m))
    for i in range(n):
        if len(matches) == k:
            break
        rest_rows = [r for r in rows_left if r != i]
        needed = k - len(matches) - 1
        chosen = None
        for j in cols_left:
            rest_cols = [c for c in cols_left if c != j]
            if min(len(rest_rows), len(rest_cols)) != needed:
                continue
            sub = cost[np.ix_(rest_rows, rest_cols)] if needed else np.empty((0, 0))
            total = fixed_cost + cost[i, j] + _optimal_total(sub)
            if abs(total - best_total) <= tol:
                chosen = j
                break
        if chosen is not None:
            matches.append((i, chosen))
            fixed_cost += cost[i, chosen]
            cols_left.remove(chosen)
        rows_left.remove(i)

    matched_rows = {i for i, _ in matches}
    matched_cols = {j for _, j in matches}
    # exact total in row order (matches the brute-force oracle's summation)
    total_cost = float(sum(cost[i, j] for i, j in matches))
    return Assignment(matches,
                      [i for i in range(n) if i not in matched_rows],
                      [j for j in range(m) if j not in matched_cols],
                      total_cost)
