"""Lebesgue-measure brackets of attractors, boundary capacity and upper semi-continuity probes."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .dimension import limit_capacity
from .errors import DomainError, PreconditionError
from .geometry import GridSet, ball_net, epsilon_neighborhood, hausdorff_distance, hausdorff_slack
from .ifs import attractor, d0_distance, min_feasible_tol

_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class MeasureBracket:
    inner: float
    outer: float
    level: int

    def __post_init__(self):
        if not 0.0 <= self.inner <= self.outer * (1 + 1e-12):
            raise DomainError("bracket must satisfy 0 <= inner <= outer")

    @property
    def width(self):
        return self.outer - self.inner

    def contains(self, value):
        return self.inner <= value <= self.outer

    def natural(self, frame, dim=1):
        if frame is None:
            return self
        return MeasureBracket(frame.volume(self.inner, dim), frame.volume(self.outer, dim), self.level)

    def to_json(self):
        return json.dumps({"inner": self.inner, "outer": self.outer, "level": self.level}, sort_keys=True)


def _covered_1d(F, S):
    """Mask of cells of S contained in the union of the images f_j(S)."""
    lo = S.lows[:, 0]
    hi = lo + S.width
    starts, ends = [], []
    for f in F.maps:
        a, b = f(lo[:, None])[:, 0], f(hi[:, None])[:, 0]
        starts.append(np.minimum(a, b))
        ends.append(np.maximum(a, b))
    starts = np.concatenate(starts)
    ends = np.concatenate(ends)
    order = np.argsort(starts, kind="stable")
    ms, me = _accel.merge_intervals(
        np.ascontiguousarray(starts[order] - _MERGE_TOL), np.ascontiguousarray(ends[order])
    )
    i = np.searchsorted(ms, lo, side="right") - 1
    ok = i >= 0
    ok[ok] = me[i[ok]] >= hi[ok] - _MERGE_TOL
    return ok


def _covered_affine(F, S):
    """Conservative: a cell is covered when some preimage box lies inside occupied cells."""
    keys = set(map(tuple, S.cells.tolist()))
    lo = S.lows
    hi = lo + S.width
    covered = np.zeros(len(S), dtype=bool)
    from .geometry import box_index_range

    for f in F.maps:
        Ainv = np.linalg.inv(f.A)
        c = 0.5 * (lo + hi) - f.b
        w = 0.5 * (hi - lo)
        pc = c @ Ainv.T
        pw = w @ np.abs(Ainv).T
        ilo, ihi = box_index_range(pc - pw, pc + pw, S.level)
        raw_lo = np.floor((pc - pw + 1.0) / S.width).astype(np.int64)
        raw_hi = np.ceil((pc + pw + 1.0) / S.width).astype(np.int64) - 1
        inside = (raw_lo >= 0).all(axis=1) & (raw_hi < S.n_side).all(axis=1)
        for r in np.flatnonzero(inside & ~covered):
            ranges = [range(a, b + 1) for a, b in zip(ilo[r], ihi[r])]
            grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, S.dim)
            if all(tuple(x) in keys for x in grid.tolist()):
                covered[r] = True
    return covered


def inner_set(F, A, max_rounds=100000):
    """Largest S within A with S inside F(S) found by repeated removal; S lies in the attractor."""
    if not F.is_affine and F.dim > 1:
        return GridSet(A.dim, A.level, np.zeros((0, A.dim), dtype=np.int64))
    S = A
    for _ in range(max_rounds):
        if len(S) == 0:
            break
        ok = _covered_1d(F, S) if F.dim == 1 else _covered_affine(F, S)
        if ok.all():
            break
        S = GridSet(S.dim, S.level, S.cells[ok])
    return S


def measure_bracket(A, F):
    """[inner, outer] bracket of the attractor's Lebesgue measure (normalized units)."""
    outer_set = A if A.superset else epsilon_neighborhood(A, A.error)
    inner = inner_set(F, A).volume
    return MeasureBracket(float(inner), float(outer_set.volume), A.level)


def boundary_cells(A):
    """Occupied cells with an unoccupied face neighbour."""
    if len(A) == 0:
        raise DomainError("empty grid")
    keys = set(map(tuple, A.cells.tolist()))
    mask = np.zeros(len(A), dtype=bool)
    for axis in range(A.dim):
        for step in (-1, 1):
            nb = A.cells.copy()
            nb[:, axis] += step
            mask |= np.array([tuple(x) not in keys for x in nb.tolist()])
    return GridSet(A.dim, A.level, A.cells[mask], error=A.error, superset=False)


def boundary_capacity(A, levels, base=2, frame=None):
    return limit_capacity(boundary_cells(A), levels, base, frame)


def modulus_check(L0, L1, Delta, d, eps):
    """outer(L1) <= outer(L0) + eps * Delta**(n - d), given Hd(L1, L0) <= Delta."""
    hd = hausdorff_distance(L0, L1)
    if hd > Delta + hausdorff_slack(L0, L1):
        raise PreconditionError(f"Hd(L1, L0) = {hd:.6g} exceeds Delta = {Delta:.6g}")
    lhs = L1.volume
    rhs = L0.volume + eps * Delta ** (L0.dim - d)
    return {"lhs": float(lhs), "rhs": float(rhs), "Delta": Delta, "hd": hd, "pass": bool(lhs <= rhs)}


def modulus_ladder(L0, L1, d, eps, deltas):
    """modulus_check at every Delta of ``deltas`` that satisfies the Hausdorff precondition."""
    hd = hausdorff_distance(L0, L1) - hausdorff_slack(L0, L1)
    return [modulus_check(L0, L1, D, d, eps) for D in deltas if D >= hd]


@dataclass
class MeasureSweep:
    rows: list
    star_outer: float
    slack: float
    passed: bool
    stable: bool

    def to_csv(self):
        lines = [
            "# columns: t (parameter); d0 (length, natural frame); mu_inner, mu_outer (length, natural frame); "
            "hd_to_star (length, natural frame)",
            "t,d0,mu_inner,mu_outer,hd_to_star",
        ]
        for r in self.rows:
            lines.append(f"{r['t']!r},{r['d0']!r},{r['mu_inner']!r},{r['mu_outer']!r},{r['hd_to_star']!r}")
        lines.append(
            f"# star_outer={self.star_outer!r} slack={self.slack!r} pass={self.passed} stable={self.stable}"
        )
        return "\n".join(lines) + "\n"


def measure_semicontinuity_probe(family, t_star, radius, steps, level=12, net_eps=1e-3, workers=1):
    """Outer measures along a parameter sweep against the value at ``t_star`` plus slack.

    slack = (boundary cells of the t_star grid) * (cell volume + error-ball volume),
    in natural units.
    """
    from .families import parallel_map, sweep_values

    bounds = {"three_branch": (0.0, 0.5), "g_lambda": (1e-9, 0.25)}.get(family.name, (-math.inf, math.inf))
    ts = sweep_values(t_star, radius, steps, *bounds) if family.parameter else np.array([t_star])
    build = (lambda t: family.build(t)) if family.parameter else (lambda t: family.build())
    Fs = build(t_star)
    tol = 2 * min_feasible_tol(Fs, level)
    As = attractor(Fs, tol, level)
    frame = Fs.frame
    nat_len = frame.length if frame is not None else (lambda x: x)
    nat_vol = (lambda v: frame.volume(v, Fs.dim)) if frame is not None else (lambda v: v)
    star = measure_bracket(As, Fs)
    nb = len(boundary_cells(As))
    slack = nat_vol(nb * (As.cell_volume + (2 * As.error) ** As.dim))
    net = ball_net(Fs.dim, net_eps)

    def one(t):
        F = build(t)
        A = attractor(F, tol, level)
        br = measure_bracket(A, F)
        d0 = d0_distance(F, Fs, net)
        hd = hausdorff_distance(A, As)
        L = max(F.L, Fs.L)
        ok = hd <= (d0.value + d0.slack) / (1 - L) + A.error + As.error + hausdorff_slack(A, As)
        row = {
            "t": float(t),
            "d0": float(nat_len(d0.value)),
            "mu_inner": float(nat_vol(br.inner)),
            "mu_outer": float(nat_vol(br.outer)),
            "hd_to_star": float(nat_len(hd)),
        }
        return row, ok

    results = parallel_map(one, ts, workers)
    rows = [r for r, _ in results]
    stable = all(ok for _, ok in results)
    star_outer = nat_vol(star.outer)
    passed = max(r["mu_outer"] for r in rows) <= star_outer + slack
    return MeasureSweep(rows, float(star_outer), float(slack), bool(passed), stable)
