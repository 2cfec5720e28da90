"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``LOCALSCALE_PURE=1`` to force the fallback.
"""
import os

from . import _pure

BACKEND = "python"
directed_hausdorff = _pure.directed_hausdorff
rasterize_boxes = _pure.rasterize_boxes
merge_intervals = _pure.merge_intervals

if not os.environ.get("LOCALSCALE_PURE"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        directed_hausdorff = _kernels.directed_hausdorff
        rasterize_boxes = _kernels.rasterize_boxes
        merge_intervals = _kernels.merge_intervals
