"""Hot-kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set ``LTRACK_KERNELS=python`` to force the fallback (used by the parity test
and the benchmark).
"""
import os

if os.environ.get("LTRACK_KERNELS", "").lower() in ("python", "py"):
    from ._ref import BACKEND, iou_matrix, iou_pairs, lap_solve
else:
    try:
        from ._core import BACKEND, iou_matrix, iou_pairs, lap_solve
    except ImportError:
        from ._ref import BACKEND, iou_matrix, iou_pairs, lap_solve

__all__ = ["BACKEND", "iou_pairs", "iou_matrix", "lap_solve"]
