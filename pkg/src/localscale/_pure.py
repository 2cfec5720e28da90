"""Numpy fallbacks for the compiled kernels in ``_kernels.pyx``."""
import numpy as np

_CHUNK = 2048


def directed_hausdorff(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty point set")
    cmax = 0.0
    for start in range(0, len(a), _CHUNK):
        block = a[start:start + _CHUNK]
        d = np.zeros((len(block), len(b)))
        for k in range(a.shape[1]):
            diff = block[:, None, k] - b[None, :, k]
            d += diff * diff
        cmax = max(cmax, float(d.min(axis=1).max()))
    return float(np.sqrt(cmax))


def rasterize_boxes(lo, hi):
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    n, dim = lo.shape
    if dim > 3:
        raise ValueError("dimension > 3 not supported")
    if n == 0:
        return np.empty((0, dim), dtype=np.int64)
    span = hi - lo + 1
    # one broadcast per distinct box shape, then restore row order
    keys, inverse = np.unique(span, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    owners, chunks = [], []
    for g, key in enumerate(keys):
        rows = np.nonzero(inverse == g)[0]
        grids = np.meshgrid(*[np.arange(s) for s in key], indexing="ij")
        offs = np.stack([gr.reshape(-1) for gr in grids], axis=1)
        pts = lo[rows][:, None, :] + offs[None, :, :]
        owners.append(np.repeat(rows, len(offs)))
        chunks.append(pts.reshape(-1, dim))
    owner = np.concatenate(owners)
    order = np.argsort(owner, kind="stable")
    return np.ascontiguousarray(np.concatenate(chunks, axis=0)[order])


def merge_intervals(starts, ends):
    starts = np.asarray(starts, dtype=np.float64)
    ends = np.asarray(ends, dtype=np.float64)
    if len(starts) == 0:
        return starts.copy(), ends.copy()
    s_out = [starts[0]]
    e_out = [ends[0]]
    for s, e in zip(starts[1:], ends[1:]):
        if s <= e_out[-1]:
            if e > e_out[-1]:
                e_out[-1] = e
        else:
            s_out.append(s)
            e_out.append(e)
    return np.array(s_out), np.array(e_out)
