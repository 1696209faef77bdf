# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: element-wise/pairwise IoU and the assignment solver.

Mirrors ``_ref.py`` exactly; keep the two in sync.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef inline double _pair_iou(double ax, double ay, double aw, double ah,
                             double bx, double by, double bw, double bh) nogil:
    cdef double ix = min(ax + aw, bx + bw) - max(ax, bx)
    cdef double iy = min(ay + ah, by + bh) - max(ay, by)
    if ix <= 0.0 or iy <= 0.0:
        ix = 0.0
        iy = 0.0
    cdef double inter = ix * iy
    cdef double union_ = aw * ah + bw * bh - inter
    if union_ <= 0.0:
        return 0.0
    return inter / union_


def iou_pairs(a, b):
    """Element-wise IoU of two aligned (N, 4) arrays of [x, y, w, h] boxes."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _pair_iou(A[i, 0], A[i, 1], A[i, 2], A[i, 3],
                           B[i, 0], B[i, 1], B[i, 2], B[i, 3])
    return out


def iou_matrix(a, b):
    """Pairwise IoU of an (n, 4) and an (m, 4) array of [x, y, w, h] boxes."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m), dtype=np.float64)
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            out[i, j] = _pair_iou(A[i, 0], A[i, 1], A[i, 2], A[i, 3],
                                  B[j, 0], B[j, 1], B[j, 2], B[j, 3])
    return out


def lap_solve(cost):
    """Minimum-cost assignment for an (n, m) matrix with n <= m.

    Shortest augmenting path with dual potentials; every row is matched.
    Returns an int64 array ``row_to_col`` of length n.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] C = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = C.shape[0]
    cdef Py_ssize_t m = C.shape[1]
    if n > m:
        raise ValueError("lap_solve expects n <= m; transpose the matrix")
    cdef double INF = np.inf
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.zeros(n + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.zeros(m + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] p = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] way = np.zeros(m + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] minv = np.empty(m + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] used = np.empty(m + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = INF
        used[:] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INF
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = C[i0 - 1, j - 1] - u[i0] - v[j]
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
    cdef cnp.ndarray[cnp.int64_t, ndim=1] row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] != 0:
            row_to_col[p[j] - 1] = j - 1
    return row_to_col
