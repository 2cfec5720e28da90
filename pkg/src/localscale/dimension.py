"""Box counting, capacity fits, cover-based dimension brackets and the Moran oracle."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import BracketDegenerateError, DomainError, ResolutionError


@dataclass
class CapacityEstimate:
    scales: list
    counts: list
    base: int = 2
    slope: float = math.nan
    residual: float = math.nan
    window: tuple = ()
    flat: bool = False

    def to_csv(self, frame="normalized [-1,1]^n"):
        lines = [
            f"# scale: box side length ({frame}); count: occupied boxes; base={self.base}",
            "scale,count",
        ]
        lines += [f"{s!r},{c}" for s, c in zip(self.scales, self.counts)]
        lines.append(f"# slope={self.slope!r} residual={self.residual!r} window={list(self.window)}")
        return "\n".join(lines) + "\n"


def _dyadic_counts(A, levels):
    counts = []
    for j in levels:
        counts.append(len(np.unique(A.cells >> (A.level - j), axis=0)))
    return counts


def _framed_counts(A, levels, base, box):
    lo = np.asarray(box[0], dtype=float).reshape(A.dim)
    hi = np.asarray(box[1], dtype=float).reshape(A.dim)
    collar = A.error + A.half_diag
    c = A.centers
    counts = []
    for j in levels:
        w = (hi - lo) / float(base) ** j
        u = (c - lo) / w
        idx = np.floor(u).astype(np.int64)
        frac = u - idx
        depth = (np.minimum(frac, 1 - frac) * w).min(axis=1)
        deep = idx[depth > collar]
        use = deep if len(deep) else idx
        counts.append(len(np.unique(use, axis=0)))
    return counts


def _lattice_box(A, frame):
    if frame is None:
        return -np.ones(A.dim), np.ones(A.dim)
    lat = getattr(frame, "lattice", None) or (frame.lo, frame.hi)
    lo, hi = frame.to_normalized(lat[0]), frame.to_normalized(lat[1])
    return np.full(A.dim, float(lo)), np.full(A.dim, float(hi))


def box_counts(A, levels, base=2, frame=None, box=None):
    """Occupied-box counts at scales base**-j.

    Base 2 without a frame coarsens the grid directly. Otherwise boxes tile
    ``box`` (or the frame's counting lattice) and a box counts only when an
    occupied cell center lies deeper inside it than the grid's error collar.
    """
    levels = list(levels)
    if not levels:
        raise DomainError("no levels requested")
    if base < 2:
        raise DomainError("base must be >= 2")
    if len(A) == 0:
        raise DomainError("box counts of an empty set")
    if base == 2 and frame is None and box is None:
        if max(levels) > A.level or min(levels) < 0:
            raise ResolutionError(f"levels must lie in 0..{A.level}")
        return CapacityEstimate([2.0**-j for j in levels], _dyadic_counts(A, levels), 2)
    lo, hi = box if box is not None else _lattice_box(A, frame)
    side = float(np.max(np.asarray(hi) - np.asarray(lo)))
    finest = side / float(base) ** max(levels)
    if finest < A.width:
        raise ResolutionError(f"scale {finest:.3g} is finer than the grid cell width {A.width:.3g}")
    counts = _framed_counts(A, levels, base, (lo, hi))
    return CapacityEstimate([side / float(base) ** j for j in levels], counts, base)


def fit_slope(scales, counts):
    """Least-squares slope of ln(count) against -ln(scale), with RMS residual."""
    x = -np.log(np.asarray(scales, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    if np.all(y == y[0]):
        return 0.0, 0.0, True
    p = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((np.polyval(p, x) - y) ** 2)))
    return float(p[0]), res, False


def limit_capacity(A, levels, base=2, frame=None, box=None):
    """Slope of the log-log box counts over the usable window.

    Scales within two dyadic levels of the grid resolution are dropped.
    """
    est = box_counts(A, levels, base, frame, box)
    keep = [i for i, s in enumerate(est.scales) if s >= 4.0 * A.width - 1e-15]
    if len(keep) < 3:
        raise ResolutionError("fewer than 3 usable scales; refine the grid or coarsen the levels")
    levels = list(levels)
    sc = [est.scales[i] for i in keep]
    ct = [est.counts[i] for i in keep]
    est.slope, est.residual, est.flat = fit_slope(sc, ct)
    est.window = (levels[keep[0]], levels[keep[-1]])
    return est


def falconer_bracket(N, lambda_minus, lambda_plus):
    """[-ln N / lambda_-, -ln N / lambda_+] for N maps with log stretch rates in [lambda_-, lambda_+]."""
    if N < 1:
        raise DomainError("N must be >= 1")
    if not lambda_minus <= lambda_plus < 0:
        raise DomainError("need lambda_minus <= lambda_plus < 0")
    ln = math.log(N)
    return -ln / lambda_minus, -ln / lambda_plus


def moran_dimension(ratios):
    """Root d of sum(r**d) = 1."""
    r = np.asarray(ratios, dtype=float)
    if r.size == 0 or np.any(r <= 0) or np.any(r >= 1):
        raise DomainError("ratios must be a nonempty list in (0, 1)")
    if r.size == 1:
        return 0.0

    def f(d):
        return float(np.sum(r**d) - 1.0)

    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return bisect(f, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class DimensionBracket:
    n: int
    N: int
    k: float
    K: float
    Q: float
    D: float
    lower: float = field(init=False)
    upper: float = field(init=False)
    N_open: int | None = None
    ambiguous: int = 0

    def __post_init__(self):
        self.lower, self.upper = bracket_from(self.N, self.n, self.k, self.K, self.Q, self.D)

    def to_dict(self):
        return {
            "n": self.n,
            "N_n": self.N,
            "N_n_open": self.N_open,
            "ambiguous": self.ambiguous,
            "lower": self.lower,
            "upper": self.upper,
            "ingredients": {"k": self.k, "K": self.K, "Q": self.Q, "D": self.D},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def bracket_from(N, n, k, K, Q, D):
    """ln N / (nk + K + 3D + 3Q) and ln N / (nk - D - Q)."""
    if n * k <= D + Q:
        raise BracketDegenerateError(f"nk = {n * k:.6g} does not exceed D + Q = {D + Q:.6g}")
    ln = math.log(N)
    return ln / (n * k + K + 3 * D + 3 * Q), ln / (n * k - D - Q)


def hdim_bracket(F, n, slack=1.01, Q=None, D=None, reading="closed"):
    """Dimension bracket from the level-n dynamic cover and its disjoint subsystem."""
    from .cover import build_dynamic_cover, contraction_constants, maximal_disjoint

    cc = contraction_constants(F, slack)
    cover = build_dynamic_cover(F, n, cc, Q, D)
    if cover.n * cc.k <= cover.D + cover.Q:
        raise BracketDegenerateError("nk <= D(n) + Q(n): bracket undefined at this level")
    closed = maximal_disjoint(F, cover)
    opened = maximal_disjoint(F, cover, reading="open")
    chosen = closed if reading == "closed" else opened
    return DimensionBracket(n, chosen.N, cc.k, cc.K, cover.Q, cover.D,
                            N_open=opened.N, ambiguous=len(closed.ambiguous))


def capacity_equals_hdim_probe(F, n, levels, base=2, level=12, slack=1.01, fit_tol=0.03,
                               reading="closed", frame=None):
    """Does the fitted capacity fall inside the dimension bracket (widened by fit tolerance)?"""
    from .ifs import attractor, min_feasible_tol

    A = attractor(F, 2 * min_feasible_tol(F, level), level)
    est = limit_capacity(A, levels, base, frame if frame is not None else
                         (F.frame if base != 2 else None))
    br = hdim_bracket(F, n, slack, reading=reading)
    tol = fit_tol + est.residual
    ok = br.lower - tol <= est.slope <= br.upper + tol
    return {
        "capacity": est.slope,
        "residual": est.residual,
        "lower": br.lower,
        "upper": br.upper,
        "width": br.upper - br.lower,
        "tol": tol,
        "pass": bool(ok),
    }
