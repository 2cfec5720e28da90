"""Dynamic covers of an attractor by word images, disjoint subsystems and open-set checks.

Words follow :mod:`localscale.ifs`: ``(j1, ..., jm)`` is ``f_jm o ... o f_j1``.
Refining the image ``f_w(I)`` into ``f_w f_j(I)`` therefore prepends ``j``.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distortion import D_of_n, Q_of_n
from .errors import CapError, DomainError, PreconditionError
from .geometry import ball_net, sphere_directions
from .ifs import AffineMap, System, attractor, compose, min_feasible_tol

FRONTIER_CAP = 10**6
_REL = 1e-12


@dataclass(frozen=True)
class ContractionConstants:
    k: float
    K: float
    slack: float = 1.01

    def __post_init__(self):
        if not 0 < self.k <= self.K:
            raise DomainError(f"need 0 < k <= K, got k={self.k}, K={self.K}")


def contraction_constants(F, slack=1.01):
    """k = -ln(s * max sigma_max), K = -ln(min sigma_min / s) from certified bounds."""
    if slack < 1.0:
        raise DomainError("slack factor must be >= 1")
    return ContractionConstants(-math.log(slack * F.sigma_max), -math.log(F.sigma_min / slack), slack)


def _sampled_diameter(g, count=2048):
    from .geometry import _point_diameter

    dim = g.dim
    pts = g(sphere_directions(dim, count)) if dim > 1 else g(np.array([[-1.0], [1.0]]))
    return _point_diameter(pts)


def image_diameter(F, w):
    """[lo, hi] bracket on |f_w(I)|: exact for affine and for 1-D maps."""
    w = tuple(w)
    if not w:
        return 2.0, 2.0
    g = compose(F, w)
    if F.is_affine:
        d = 2.0 * float(np.linalg.norm(g.matrix, 2))
        return d, d
    if F.dim == 1:
        e = g(np.array([[-1.0], [1.0]]))[:, 0]
        d = float(abs(e[1] - e[0]))
        return d, d
    return _sampled_diameter(g), min(2.0 * g.lipschitz, 2.0)


def _affine_diameters(F, words):
    """Exact diameters 2*sigma_max for a batch of equal-length words of an affine system."""
    M = np.broadcast_to(np.eye(F.dim), (len(words), F.dim, F.dim)).copy()
    A = np.stack([f.A for f in F.maps])
    for k in range(words.shape[1]):
        M = A[words[:, k]] @ M
    if F.dim == 1:
        return 2.0 * np.abs(M[:, 0, 0])
    return 2.0 * np.linalg.svd(M, compute_uv=False)[:, 0]


@dataclass
class DynamicCover:
    n: int
    words: list
    lo: np.ndarray
    hi: np.ndarray
    constants: ContractionConstants
    Q: float
    D: float
    window_violations: list = field(default_factory=list)

    @property
    def upper_window(self):
        return 2.0 * math.exp(-self.n * self.constants.k)

    @property
    def lower_window(self):
        c = self.constants
        return 2.0 * math.exp(-2 * self.Q - 2 * self.D - c.K - self.n * c.k)

    @property
    def max_length(self):
        return max(len(w) for w in self.words)

    def window_ok(self):
        return bool(
            np.all(self.hi < self.upper_window)
            and np.all(self.lo >= self.lower_window * (1 - _REL))
        )

    def to_dict(self):
        return {
            "n": self.n,
            "k": self.constants.k,
            "K": self.constants.K,
            "Q": self.Q,
            "D": self.D,
            "words": [
                {"indices": list(w), "lo": float(a), "hi": float(b)}
                for w, a, b in zip(self.words, self.lo, self.hi)
            ],
        }


def _distortion_at(F, n, Q, D):
    if Q is None:
        Q = Q_of_n(F, n, max_words=min(10**5, 10**6)).Q[-1] if F.dim > 1 else 0.0
    if D is None:
        D = 0.0 if F.is_affine else D_of_n(F, n, max_words=2000).D[-1]
    return float(Q), float(D)


def build_dynamic_cover(F, n, constants=None, Q=None, D=None, cap=FRONTIER_CAP):
    """Refine word images breadth-first until every diameter is below 2 e^{-nk}.

    The lower window bound is not enforced; violations are recorded in
    ``window_violations`` as a diagnostic of inconsistent distortion constants.
    """
    if n < 1:
        raise DomainError("cover level n must be >= 1")
    constants = constants or contraction_constants(F)
    Q, D = _distortion_at(F, n, Q, D)
    top = 2.0 * math.exp(-n * constants.k)
    J = len(F)
    frontier = np.arange(J, dtype=np.int64)[:, None]
    accepted_w, accepted_lo, accepted_hi = [], [], []
    while len(frontier):
        if len(frontier) > cap:
            raise CapError(f"cover frontier of {len(frontier)} words exceeds the cap {cap}")
        if F.is_affine:
            lo = hi = _affine_diameters(F, frontier)
        else:
            br = np.array([image_diameter(F, w) for w in frontier])
            lo, hi = br[:, 0], br[:, 1]
        done = hi < top
        accepted_w.extend(tuple(int(j) for j in w) for w in frontier[done])
        accepted_lo.extend(lo[done])
        accepted_hi.extend(hi[done])
        rest = frontier[~done]
        if len(rest) * J > cap:
            raise CapError(f"cover frontier of {len(rest) * J} words exceeds the cap {cap}")
        frontier = np.concatenate(
            [np.repeat(np.arange(J), len(rest))[:, None], np.tile(rest, (J, 1))], axis=1
        ) if len(rest) else rest
    order = sorted(range(len(accepted_w)), key=lambda i: accepted_w[i])
    cover = DynamicCover(
        n,
        [accepted_w[i] for i in order],
        np.array([accepted_lo[i] for i in order]),
        np.array([accepted_hi[i] for i in order]),
        constants,
        Q,
        D,
    )
    lower = cover.lower_window * (1 - _REL)
    cover.window_violations = [w for w, a in zip(cover.words, cover.lo) if a < lower]
    return cover


def _word_affine(F, w):
    g = compose(F, w)
    return g.matrix, g.translation


def _batch_affine(F, words):
    """Linear parts and translations of f_w for a list of words, vectorized by length."""
    M = np.empty((len(words), F.dim, F.dim))
    t = np.empty((len(words), F.dim))
    A = np.stack([f.A for f in F.maps])
    b = np.stack([f.b for f in F.maps])
    lengths = np.array([len(w) for w in words])
    for m in np.unique(lengths):
        idx = np.flatnonzero(lengths == m)
        W = np.array([words[i] for i in idx], dtype=np.int64).reshape(len(idx), m)
        Mm = np.broadcast_to(np.eye(F.dim), (len(idx), F.dim, F.dim)).copy()
        tm = np.zeros((len(idx), F.dim))
        for k in range(m):
            Mm = A[W[:, k]] @ Mm
            tm = np.einsum("wab,wb->wa", A[W[:, k]], tm) + b[W[:, k]]
        M[idx], t[idx] = Mm, tm
    return M, t


def _intervals(F, words):
    if F.is_affine:
        M, t = _batch_affine(F, words)
        a = M[:, 0, 0]
        return np.stack([t[:, 0] - np.abs(a), t[:, 0] + np.abs(a)], axis=1)
    ends = []
    for w in words:
        e = compose(F, w)(np.array([[-1.0], [1.0]]))[:, 0]
        ends.append((min(e), max(e)))
    return np.array(ends).reshape(-1, 2)


def _ellipsoid_separation(M1, t1, M2, t2, dirs):
    """Largest g(u) = u.(t2-t1) - |M1^T u| - |M2^T u| over candidate directions."""
    d = t2 - t1
    nd = np.linalg.norm(d)
    cand = dirs if nd == 0 else np.vstack([d / nd, dirs])
    g = cand @ d - np.linalg.norm(cand @ M1, axis=1) - np.linalg.norm(cand @ M2, axis=1)
    i = int(np.argmax(g))
    u, best = cand[i], float(g[i])
    # local refinement by projected gradient ascent
    step = 0.1
    for _ in range(60):
        a, b = M1.T @ u, M2.T @ u
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        grad = d - (M1 @ a) / max(na, 1e-300) - (M2 @ b) / max(nb, 1e-300)
        nu = u + step * grad
        nu /= np.linalg.norm(nu)
        val = float(nu @ d - np.linalg.norm(M1.T @ nu) - np.linalg.norm(M2.T @ nu))
        if val > best:
            u, best = nu, val
        else:
            step *= 0.5
    return best


def _ellipsoids_meet(M1, t1, M2, t2):
    """True when a common point is found on the segment between the centers."""
    s = np.linspace(0.0, 1.0, 201)[:, None]
    pts = t1 + s * (t2 - t1)
    r1 = np.linalg.norm(np.linalg.solve(M1, (pts - t1).T), axis=0)
    r2 = np.linalg.norm(np.linalg.solve(M2, (pts - t2).T), axis=0)
    return bool(np.any((r1 <= 1.0) & (r2 <= 1.0)))


@dataclass
class DisjointSubsystem:
    n: int
    words: list
    ambiguous: list
    rejected: list
    min_margin: float
    maximal: bool

    @property
    def N(self):
        return len(self.words)

    def to_dict(self):
        return {
            "selected": [list(w) for w in self.words],
            "N_n": self.N,
            "ambiguous": len(self.ambiguous),
        }


def _enclosure_boxes(F, words):
    out = []
    for w in words:
        lo = -np.ones((1, F.dim))
        hi = np.ones((1, F.dim))
        for j in w:
            lo, hi = F.maps[j].image_box(lo, hi)
        out.append((lo[0], hi[0]))
    return out


def maximal_disjoint(F, cover, tol=1e-12, reading="closed"):
    """Greedy lexicographic selection of pairwise disjoint word images.

    ``reading="closed"`` compares closed images and sets aside pairs that
    touch within ``tol`` as ambiguous. ``reading="open"`` compares interiors,
    so touching images count as disjoint.
    """
    if reading not in ("closed", "open"):
        raise DomainError("reading must be 'closed' or 'open'")
    opened = reading == "open"
    words = list(cover.words)
    selected, ambiguous, rejected = [], [], []
    margin = math.inf
    if F.dim == 1:
        iv = _intervals(F, words)
        scale = tol * max(1.0, float(np.abs(iv).max()))
        starts, ends = [], []  # selected intervals, sorted by start
        for w, (a, b) in zip(words, iv):
            i = bisect.bisect_left(starts, a)
            gaps = []
            if i > 0:
                gaps.append(a - ends[i - 1])
            if i < len(starts):
                gaps.append(starts[i] - b)
            g = min(gaps) if gaps else math.inf
            if g > scale or (opened and g >= -scale):
                starts.insert(i, a)
                ends.insert(i, b)
                selected.append(w)
                margin = min(margin, g)
            elif g >= -scale:
                ambiguous.append(w)
            else:
                rejected.append(w)
        return DisjointSubsystem(cover.n, selected, ambiguous, rejected, margin, True)

    dirs = sphere_directions(F.dim, 256 if F.dim == 2 else 1024)
    if F.is_affine:
        Ms, ts = _batch_affine(F, words)
        parts = list(zip(Ms, ts))
        radius = np.array([np.linalg.norm(M, 2) for M, _ in parts])
        centers = np.array([t for _, t in parts])
        sel_idx = []
        for i, w in enumerate(words):
            M1, t1 = parts[i]
            verdict = "free"
            if sel_idx:
                idx = np.array(sel_idx)
                near = np.linalg.norm(centers[idx] - t1, axis=1) <= radius[idx] + radius[i] + tol
                for j in idx[near]:
                    M2, t2 = parts[j]
                    g = _ellipsoid_separation(M1, t1, M2, t2, dirs)
                    if g > tol or (opened and g >= -tol):
                        margin = min(margin, g)
                        continue
                    verdict = "meet" if _ellipsoids_meet(M1, t1, M2, t2) else "ambiguous"
                    break
            if verdict == "free":
                sel_idx.append(i)
                selected.append(w)
            elif verdict == "meet":
                rejected.append(w)
            else:
                ambiguous.append(w)
        return DisjointSubsystem(cover.n, selected, ambiguous, rejected, margin, True)

    boxes = _enclosure_boxes(F, words)
    chosen = []
    for w, (lo, hi) in zip(words, boxes):
        clash = False
        for slo, shi in chosen:
            gap = max(np.max(slo - hi), np.max(lo - shi))
            if gap <= tol and not (opened and gap >= -tol):
                clash = True
                break
            margin = min(margin, gap)
        if clash:
            ambiguous.append(w)
        else:
            chosen.append((lo, hi))
            selected.append(w)
    return DisjointSubsystem(cover.n, selected, ambiguous, rejected, margin, not ambiguous)


def subsystem(F, words):
    """The composed maps f_w for ``words`` as a new (affine) System."""
    if not F.is_affine:
        raise DomainError("subsystems are built for affine systems only")
    maps = []
    for w in words:
        M, t = _word_affine(F, w)
        maps.append(AffineMap(M, t))
    return System(tuple(maps))


def cover_dump(cover, disjoint=None):
    d = cover.to_dict()
    if disjoint is not None:
        d["disjoint"] = disjoint.to_dict()
    return json.dumps(d, sort_keys=True)


def cover_contains(F, cover, A):
    """Largest distance from an attractor cell center to the union of cover images, and the allowed slack."""
    slack = A.error + A.half_diag
    c = A.centers
    if F.dim == 1:
        iv = _intervals(F, cover.words)
        d = np.maximum(iv[None, :, 0] - c, c - iv[None, :, 1]).clip(0).min(axis=1)
        return float(d.max()), slack
    if F.is_affine:
        best = np.full(len(c), np.inf)
        Ms, ts = _batch_affine(F, cover.words)
        for M, t in zip(Ms, ts):
            best = np.minimum(best, ellipsoid_distance(M, t, c))
        return float(best.max()), slack
    eps = 0.05
    net = ball_net(F.dim, eps).points
    best = np.full(len(c), np.inf)
    grow = 0.0
    for w in cover.words:
        g = compose(F, w)
        pts = g(net)
        grow = max(grow, g.lipschitz * eps)
        d = np.linalg.norm(c[:, None] - pts[None], axis=-1).min(axis=1)
        best = np.minimum(best, d)
    return float(best.max()), slack + grow


def ellipsoid_distance(M, t, pts, iters=80):
    """Distance from each point to the ellipsoid {M x + t : |x| <= 1}."""
    U, sv, Vt = np.linalg.svd(M)
    q = (pts - t) @ U
    inside = np.linalg.norm(q / sv, axis=1) <= 1.0
    lo = np.zeros(len(pts))
    hi = np.full(len(pts), sv[0] * np.linalg.norm(q, axis=1).max() + 1.0)
    # |x(mu)| with x_i = s_i q_i / (s_i^2 + mu) decreases in mu; find |x| = 1
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        big = np.linalg.norm(sv * q / (sv**2 + mid[:, None]), axis=1) > 1.0
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    x = sv * q / (sv**2 + hi[:, None])
    x /= np.maximum(np.linalg.norm(x, axis=1), 1.0)[:, None]
    d = np.linalg.norm(sv * x - q, axis=1)
    return np.where(inside, 0.0, d)


def inflated_ball_check(cover, disjoint):
    """|V~| <= 4 e^{2Q+2D+K} |V| for every selected V, with |V~| = 8 e^{-nk}."""
    c = cover.constants
    big = 8.0 * math.exp(-cover.n * c.k)
    factor = 4.0 * math.exp(2 * cover.Q + 2 * cover.D + c.K)
    lo = dict(zip(cover.words, cover.lo))
    worst = max(big / (factor * lo[w]) for w in disjoint.words)
    return {"worst_ratio": worst, "pass": worst <= 1 + 1e-12}


def inflated_balls_cover(F, disjoint, A, n, k):
    """Balls of radius 4e^{-nk} about a point of each selected image cover the attractor grid."""
    r = 4.0 * math.exp(-n * k)
    centers = np.array([compose(F, w)(np.zeros(F.dim)) for w in disjoint.words])
    d = np.linalg.norm(A.centers[:, None] - centers[None], axis=-1).min(axis=1)
    return bool(d.max() <= r + A.error + A.half_diag)


def _box_images(F, lo, hi):
    out = []
    for f in F.maps:
        if f.is_affine:
            corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")).reshape(F.dim, -1).T
            out.append(("poly", f(corners)))
        else:
            ilo, ihi = f.image_box(lo[None], hi[None])
            out.append(("box", (ilo[0], ihi[0])))
    return out


def _poly_axes(pts, dim):
    """Candidate separating axes for the parallelotope spanned by ``pts`` (its corners)."""
    if dim == 1:
        return [np.array([1.0])]
    base = pts[0]
    edges = [p - base for p in pts[1:] if np.linalg.norm(p - base) > 0]
    if dim == 2:
        return [np.array([-e[1], e[0]]) for e in edges]
    axes = []
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            axes.append(np.cross(edges[i], edges[j]))
    return axes


def _separation_margin(a, b, dim):
    """Signed separation of two convex images (positive: a gap of that width)."""
    (ka, pa), (kb, pb) = a, b
    if ka == "box" or kb == "box":
        la, ha = (pa if ka == "box" else (pa.min(axis=0), pa.max(axis=0)))
        lb, hb = (pb if kb == "box" else (pb.min(axis=0), pb.max(axis=0)))
        return float(max(np.max(lb - ha), np.max(la - hb)))
    axes = _poly_axes(pa, dim) + _poly_axes(pb, dim)
    if dim == 3:
        ea = [p - pa[0] for p in pa[1:]]
        eb = [p - pb[0] for p in pb[1:]]
        axes += [np.cross(x, y) for x in ea for y in eb]
    best = -math.inf
    for ax in axes:
        n = np.linalg.norm(ax)
        if n < 1e-14:
            continue
        ax = ax / n
        sa, sb = pa @ ax, pb @ ax
        best = max(best, float(max(sb.min() - sa.max(), sa.min() - sb.max())))
    return best


def check_osc(F, V, A=None, margin=1e-9):
    """Open set condition for the box ``V = (lo, hi)`` via strict separation of closed images.

    ``certified`` requires every pair of images of the closed box to be
    separated by more than ``margin``; pairs within ``margin`` are reported as
    touching.
    """
    lo = np.atleast_1d(np.asarray(V[0], dtype=float))
    hi = np.atleast_1d(np.asarray(V[1], dtype=float))
    if lo.shape != (F.dim,) or hi.shape != (F.dim,) or np.any(hi <= lo):
        raise DomainError("V must be a nondegenerate box of the system's dimension")
    if A is None:
        level = {1: 12, 2: 7, 3: 5}[F.dim]
        A = attractor(F, 2 * min_feasible_tol(F, level), level)
    c = A.centers
    slack = A.error + A.half_diag
    if np.any(c < lo - slack) or np.any(c > hi + slack):
        raise PreconditionError("V does not contain the attractor estimate")
    imgs = _box_images(F, lo, hi)
    margins = {}
    touching, overlapping = [], []
    for i in range(len(imgs)):
        for j in range(i + 1, len(imgs)):
            m = _separation_margin(imgs[i], imgs[j], F.dim)
            margins[(i, j)] = m
            if abs(m) <= margin:
                touching.append((i, j))
            elif m < 0:
                overlapping.append((i, j))
    certified = all(m > margin for m in margins.values())
    witness = None
    if not certified:
        witness = (touching + overlapping)[0]
    return {
        "certified": certified,
        "touching": touching,
        "overlapping": overlapping,
        "margins": margins,
        "witness": witness,
    }
