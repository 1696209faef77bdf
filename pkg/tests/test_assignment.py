import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from ltrack.assignment import Assignment, hungarian


def brute_force_min_cost(cost):
    """Exhaustive optimum over all maximal matchings; rows summed in order."""
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    best = None
    if n <= m:
        for perm in itertools.permutations(range(m), n):
            total = sum(cost[i, perm[i]] for i in range(n))
            if best is None or total < best:
                best = total
    else:
        for perm in itertools.permutations(range(n), m):
            pairs = sorted((perm[j], j) for j in range(m))
            total = sum(cost[i, j] for i, j in pairs)
            if best is None or total < best:
                best = total
    return best


def test_example_2x2():
    a = hungarian([[0.1, 0.9], [0.8, 0.2]])
    assert a.matches == [(0, 0), (1, 1)]
    assert a.total_cost == pytest.approx(0.3)


def test_example_all_zero_tiebreak():
    a = hungarian(np.zeros((3, 3)))
    assert a.matches == [(0, 0), (1, 1), (2, 2)]
    assert a.total_cost == 0.0


def test_example_3x3():
    a = hungarian([[1, 2, 3], [2, 4, 6], [3, 6, 9]])
    assert a.matches == [(0, 2), (1, 1), (2, 0)]
    assert a.total_cost == 10.0


def test_rectangular_unmatched():
    a = hungarian([[0.0, 5.0, 1.0]])
    assert a.matches == [(0, 0)]
    assert a.unmatched_cols == [1, 2]
    a = hungarian([[5.0], [1.0], [3.0]])
    assert a.matches == [(1, 0)]
    assert a.unmatched_rows == [0, 2]


def test_empty():
    a = hungarian(np.zeros((0, 3)))
    assert a.matches == [] and a.unmatched_cols == [0, 1, 2]


def test_rejects_nonfinite():
    with pytest.raises(ValueError):
        hungarian([[np.inf, 1.0]])


def test_matches_brute_force_random():
    rng = np.random.default_rng(1234)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        cost = rng.uniform(-5, 5, (n, m))
        a = hungarian(cost)
        assert len(a.matches) == min(n, m)
        assert a.total_cost == brute_force_min_cost(cost)


def test_tiebreak_lexicographic_on_ties():
    # both diagonals cost 2; the lexicographically smaller pairing wins
    a = hungarian([[1.0, 1.0], [1.0, 1.0]])
    assert a.matches == [(0, 0), (1, 1)]
    # forced cross assignment remains reachable
    a = hungarian([[9.0, 1.0], [1.0, 9.0]])
    assert a.matches == [(0, 1), (1, 0)]


def test_integer_ties_brute_force():
    rng = np.random.default_rng(77)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        cost = rng.integers(0, 3, (n, m)).astype(float)
        a = hungarian(cost)
        assert a.total_cost == brute_force_min_cost(cost)


def test_kernel_parity_with_fallback():
    """The compiled solver and the pure-Python fallback must agree exactly."""
    code = (
        "import numpy as np\n"
        "from ltrack._kernels import lap_solve, iou_matrix, BACKEND\n"
        "rng = np.random.default_rng(55)\n"
        "for _ in range(50):\n"
        "    n, m = rng.integers(1, 9, 2)\n"
        "    n = min(n, m); cost = rng.uniform(-2, 2, (n, m))\n"
        "    print(lap_solve(cost).tolist())\n"
        "boxes = rng.uniform(0, 100, (6, 4))\n"
        "print(np.round(iou_matrix(boxes, boxes), 12).tolist())\n"
        "print(BACKEND)\n"
    )

    def run(env_backend):
        env = dict(os.environ)
        if env_backend:
            env["LTRACK_KERNELS"] = env_backend
        else:
            env.pop("LTRACK_KERNELS", None)
        return subprocess.run([sys.executable, "-c", code], env=env,
                              capture_output=True, text=True, check=True).stdout

    compiled = run(None).splitlines()
    fallback = run("python").splitlines()
    assert fallback[-1] == "python"
    assert compiled[:-1] == fallback[:-1]
