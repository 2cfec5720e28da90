"""Distortion calculus for compositions: condition logs, distortion matrices and scaling checks.

``Q(n)`` is the largest log condition number of a composed Jacobian over
words of length at most ``n``; ``D(n)`` is the largest ``|ln ||C||``` where
``C = J(x0)^-1 J(y0)`` compares the composed Jacobian at two base points.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapError, DomainError, SingularityError
from .geometry import Ball, ball_net, sphere_directions
from .ifs import compose

WORD_CAP = 10**6
_SINGULAR = 1e-14


def _check_singular(sv):
    if np.any(sv[..., -1] < _SINGULAR * sv[..., 0]):
        raise SingularityError("composed Jacobian is numerically singular")


def cond_log(F, w, x):
    """ln(sigma_max / sigma_min) of the composed Jacobian at ``x``."""
    if len(w) == 0:
        raise DomainError("cond_log needs a nonempty word")
    J = compose(F, w).jacobian(np.asarray(x, dtype=float).reshape(-1, F.dim))
    sv = np.linalg.svd(J, compute_uv=False)
    _check_singular(sv)
    out = np.log(sv[:, 0] / sv[:, -1])
    return float(out[0]) if out.size == 1 else out


def C_matrix(F, w, x0, y0):
    """Distortion matrix ``J(x0)^-1 J(y0)`` of the composition along ``w``."""
    g = compose(F, w)
    Jx = g.jacobian(np.asarray(x0, dtype=float))
    Jy = g.jacobian(np.asarray(y0, dtype=float))
    for J in (Jx, Jy):
        _check_singular(np.linalg.svd(J, compute_uv=False))
    return np.linalg.solve(Jx, Jy)


def words_of_length(count, m):
    """All words of length ``m`` in lexicographic order, as an (count**m, m) array."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(count), repeat=m)), dtype=np.int64)


def _affine_products(F, n, cap):
    """Yield (m, stacked product matrices of all words of length m) for m = 1..n."""
    if len(F) ** n > cap:
        raise CapError(f"{len(F)}**{n} words exceed the cap {cap}; use a smaller n")
    A = np.stack([f.A for f in F.maps])
    M = np.eye(F.dim)[None]
    for m in range(1, n + 1):
        M = np.einsum("jab,wbc->wjac", A, M).reshape(-1, F.dim, F.dim)
        yield m, M


def _word_batches(F, m, max_words, rng, batch=2048):
    total = len(F) ** m
    if total <= max_words:
        words = words_of_length(len(F), m)
        exhaustive = True
    else:
        words = rng.integers(0, len(F), size=(max_words, m))
        exhaustive = False
    return [words[i:i + batch] for i in range(0, len(words), batch)], exhaustive


def _batch_jacobians(F, words, pts):
    """Composed Jacobians for every (word, point): shape (W, P, n, n)."""
    W, P, n = len(words), len(pts), F.dim
    x = np.broadcast_to(pts, (W, P, n)).copy()
    J = np.broadcast_to(np.eye(n), (W, P, n, n)).copy()
    for k in range(words.shape[1]):
        for j, f in enumerate(F.maps):
            sel = words[:, k] == j
            if not sel.any():
                continue
            xs = x[sel].reshape(-1, n)
            Df = f._jac(xs).reshape(-1, P, n, n)
            J[sel] = Df @ J[sel]
            x[sel] = f._eval(xs).reshape(-1, P, n)
    return J


@dataclass
class DistortionReport:
    n_max: int
    Q: list
    D: list
    exhaustive: list
    sampling: dict = field(default_factory=dict)
    net_slack: float = 0.0

    def to_dict(self, F=None):
        out = {
            "n": self.n_max,
            "Q": self.Q,
            "D": self.D,
            "exhaustive": self.exhaustive,
            "sampling": self.sampling,
            "net_slack": self.net_slack,
        }
        if F is not None:
            from .cover import contraction_constants

            cc = contraction_constants(F)
            out["constants"] = {
                "K": cc.K,
                "k": cc.k,
                "C": distortion_constant(F),
                "H_alpha": F.holder_const,
                "alpha": F.alpha,
            }
        return out

    def to_json(self, F=None):
        return json.dumps(self.to_dict(F), sort_keys=True)


def _default_eps(dim):
    return {1: 0.01, 2: 0.2, 3: 0.5}[dim]


def _running_max(vals):
    return [float(v) for v in np.maximum.accumulate(np.asarray(vals, dtype=float))]


def Q_of_n(F, n, net_eps=None, seed=0, max_words=WORD_CAP):
    """Q(1..n). Exact by enumeration for affine systems; a sampled lower estimate otherwise."""
    if n < 1:
        raise DomainError("n must be >= 1")
    net_eps = net_eps or _default_eps(F.dim)
    sampling = {"seed": seed, "net_eps": net_eps, "words": []}
    if F.dim == 1:
        sampling["words"] = [min(len(F) ** m, max_words) for m in range(1, n + 1)]
        return DistortionReport(n, [0.0] * n, [], [True] * n, sampling)
    per_len = []
    exhaustive = []
    if F.is_affine:
        for m, M in _affine_products(F, n, max_words):
            sv = np.linalg.svd(M, compute_uv=False)
            _check_singular(sv)
            per_len.append(float(np.log(sv[:, 0] / sv[:, -1]).max()))
            exhaustive.append(True)
            sampling["words"].append(len(M))
        return DistortionReport(n, _running_max(per_len), [], exhaustive, sampling)
    rng = np.random.default_rng(seed)
    pts = ball_net(F.dim, net_eps).points
    for m in range(1, n + 1):
        batches, exh = _word_batches(F, m, max_words, rng)
        best = 0.0
        for words in batches:
            sv = np.linalg.svd(_batch_jacobians(F, words, pts), compute_uv=False)
            _check_singular(sv)
            best = max(best, float(np.log(sv[..., 0] / sv[..., -1]).max()))
        per_len.append(best)
        exhaustive.append(exh)
        sampling["words"].append(sum(len(b) for b in batches))
    rep = DistortionReport(n, _running_max(per_len), [], exhaustive, sampling)
    rep.net_slack = F.holder_const * net_eps**F.alpha
    return rep


def _pair_log_norms(J):
    """max over point pairs of |ln ||J_x^-1 J_y|||, J of shape (P, n, n)."""
    if J.shape[-1] == 1:
        d = np.abs(J[:, 0, 0])
        return float(math.log(d.max() / d.min()))
    inv = np.linalg.inv(J)
    C = np.einsum("xab,ybc->xyac", inv, J)
    norms = np.linalg.norm(C, ord=2, axis=(-2, -1))
    return float(np.abs(np.log(norms)).max())


def D_of_n(F, n, net_eps=None, seed=0, max_words=WORD_CAP, max_points=150):
    """D(1..n): exactly zero for affine systems, otherwise sampled over words and point pairs."""
    if n < 1:
        raise DomainError("n must be >= 1")
    net_eps = net_eps or _default_eps(F.dim)
    sampling = {"seed": seed, "net_eps": net_eps, "words": []}
    if F.is_affine:
        return DistortionReport(n, [], [0.0] * n, [True] * n, sampling)
    rng = np.random.default_rng(seed + 1)
    pts = ball_net(F.dim, net_eps).points
    if F.dim > 1 and len(pts) > max_points:
        pts = pts[np.linspace(0, len(pts) - 1, max_points).astype(int)]
    per_len, exhaustive = [], []
    for m in range(1, n + 1):
        batches, exh = _word_batches(F, m, max_words, rng, batch=256 if F.dim > 1 else 2048)
        best = 0.0
        for words in batches:
            J = _batch_jacobians(F, words, pts)
            _check_singular(np.linalg.svd(J, compute_uv=False))
            for Jw in J:
                best = max(best, _pair_log_norms(Jw))
        per_len.append(best)
        exhaustive.append(exh)
        sampling["words"].append(sum(len(b) for b in batches))
    rep = DistortionReport(n, [], _running_max(per_len), exhaustive, sampling)
    rep.net_slack = F.holder_const * net_eps**F.alpha
    return rep


def distortion_report(F, n, net_eps=None, seed=0, max_words=WORD_CAP):
    q = Q_of_n(F, n, net_eps, seed, max_words)
    d = D_of_n(F, n, net_eps, seed, max_words)
    sampling = dict(q.sampling)
    return DistortionReport(
        n, q.Q, d.D, [a and b for a, b in zip(q.exhaustive, d.exhaustive)], sampling,
        max(q.net_slack, d.net_slack),
    )


def distortion_constant(F):
    """Explicit constant H_alpha * sup ||(Df)^-1|| for the distortion bound."""
    return F.holder_const * F.inv_norm_bound


@dataclass
class CompositionTrace:
    """Orbit data of a word from two base points, with upper bounds on ball diameters."""

    word: tuple
    x0: np.ndarray
    y0: np.ndarray
    diameters: np.ndarray

    def __post_init__(self):
        if len(self.diameters) != len(self.word):
            raise DomainError("need one diameter per step")


def make_trace(F, word, x0, y0, ball=None):
    """Trace whose ball B_0 contains x0 and y0; |B_j| bounded by exact or Lipschitz products.

    ``diameters[j]`` bounds |B_j| for j = 0..len(word)-1.
    """
    x0 = np.asarray(x0, dtype=float).reshape(F.dim)
    y0 = np.asarray(y0, dtype=float).reshape(F.dim)
    if ball is None:
        ball = Ball((x0 + y0) / 2, max(np.linalg.norm(x0 - y0) / 2, 1e-300))
    word = tuple(int(j) for j in word)
    diam = []
    for j in range(len(word)):
        g = compose(F, word[:j])
        diam.append(ball.diameter * (float(np.linalg.norm(g.matrix, 2)) if F.is_affine else g.lipschitz))
    return CompositionTrace(word, x0, y0, np.array(diam))


def verify_distortion_bound(F, trace, v, Q=None):
    """|ln|C_n v|| against C * sum_{j<n} e^{Q(j)} |B_j|^alpha (with Q(0) = 0)."""
    v = np.asarray(v, dtype=float).reshape(F.dim)
    v = v / np.linalg.norm(v)
    n = len(trace.word)
    if n == 0:
        return {"lhs": 0.0, "rhs": 0.0, "pass": True}
    lhs = abs(math.log(np.linalg.norm(C_matrix(F, trace.word, trace.x0, trace.y0) @ v)))
    if Q is None:
        Q = Q_of_n(F, max(n - 1, 1)).Q if n > 1 else []
    q = np.concatenate([[0.0], np.asarray(Q, dtype=float)[: n - 1]])
    rhs = distortion_constant(F) * float(np.sum(np.exp(q) * trace.diameters ** F.alpha))
    return {"lhs": lhs, "rhs": rhs, "pass": lhs <= rhs * (1 + 1e-12) + 1e-15}


def _image_diameter_estimate(F, w, ball, count=4096):
    """(lo, hi) for |g(B)|: exact for affine, sampled-boundary bracket otherwise."""
    g = compose(F, w)
    if F.is_affine:
        d = ball.diameter * float(np.linalg.norm(g.matrix, 2)) if len(w) else ball.diameter
        return d, d
    from .geometry import _point_diameter

    pts = g(ball.boundary_samples(count))
    lo = _point_diameter(pts)
    spacing = 2 * math.pi / count if F.dim == 2 else (4.0 / math.sqrt(count) if F.dim == 3 else 0.0)
    return lo, lo + 2 * g.lipschitz * ball.radius * spacing


def verify_scaling(F, wa, wb, B, Q=None, D=None):
    """|ln(|f_a f_b(B)| / |f_a(B)| * |B| / |f_b(B)|)| against 2Q(n) + 2D(n), n = |wa|.

    ``f_a f_b`` applies ``f_b`` first, so its word is ``wb + wa``.
    """
    wa, wb = tuple(wa), tuple(wb)
    n = max(len(wa), 1)
    if Q is None:
        Q = Q_of_n(F, n).Q
    if D is None:
        D = D_of_n(F, n).D
    ab = _image_diameter_estimate(F, wb + wa, B)
    a = _image_diameter_estimate(F, wa, B)
    b = _image_diameter_estimate(F, wb, B)
    mid = math.log(ab[0] / a[0] * B.diameter / b[0])
    slack = math.log(ab[1] / ab[0]) + math.log(a[1] / a[0]) + math.log(b[1] / b[0])
    bound = 2 * Q[n - 1] + 2 * D[n - 1]
    lhs = abs(mid)
    return {"lhs": lhs, "bound": bound, "slack": slack, "pass": lhs <= bound + slack + 1e-12}


def composition_jacobian_lipschitz(F, m):
    """Bound on the Lipschitz constant of x -> D(f_w)|_x for words of length m."""
    L, H = F.L, F.holder_const
    if m == 0 or H == 0:
        return 0.0
    return H * L ** (m - 1) * sum(L**i for i in range(m))


def mean_value_check(F, w, A, net_eps=None, directions=64):
    """|g(A)|/|A| must lie between the smallest and largest stretch |Dg v|/|v| over A."""
    g = compose(F, w)
    net_eps = net_eps or A.radius * _default_eps(F.dim) * 2
    net = ball_net(F.dim, net_eps / A.radius)
    pts = A.center + A.radius * net.points
    J = g.jacobian(pts).reshape(-1, F.dim, F.dim)
    sv = np.linalg.svd(J, compute_uv=False)
    dmin, dmax = float(sv[:, -1].min()), float(sv[:, 0].max())
    slack = composition_jacobian_lipschitz(F, len(w)) * net_eps
    lo, hi = _image_diameter_estimate(F, tuple(w), A)
    ratio = lo / A.diameter
    ratio_hi = hi / A.diameter
    ok = ratio <= dmax + slack + 1e-12 and ratio_hi >= dmin - slack - 1e-12
    return {"ratio": ratio, "dmin": dmin, "dmax": dmax, "slack": slack, "pass": ok}


CONFORMAL = "CONFORMAL"
DECREASING = "DECREASING"
FLAT_POSITIVE = "FLAT-POSITIVE"
INCONCLUSIVE = "INCONCLUSIVE"


def semi_conformality_diagnostic(F, n_max, threshold=0.02, **kw):
    """Empirical verdict on whether Q(n)/n tends to zero (never a proof)."""
    if n_max < 2:
        raise DomainError("n_max must be >= 2")
    Q = np.asarray(Q_of_n(F, n_max, **kw).Q)
    ns = np.arange(1, n_max + 1)
    seq = Q / ns
    if np.all(seq <= 1e-12):
        verdict = CONFORMAL
    else:
        slope = float(np.polyfit(ns, seq, 1)[0])
        rel = slope / float(seq.mean())
        if rel < -threshold:
            verdict = DECREASING
        elif abs(rel) <= threshold:
            verdict = FLAT_POSITIVE
        else:
            verdict = INCONCLUSIVE
    return {"sequence": [float(s) for s in seq], "verdict": verdict}
