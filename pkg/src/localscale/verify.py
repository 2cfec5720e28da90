"""Seeded property suites over the library's invariants.

Each suite returns a :class:`SuiteResult` whose JSON form depends only on the
seed, so repeated runs are byte-identical.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cover import (
    build_dynamic_cover,
    contraction_constants,
    cover_contains,
    inflated_ball_check,
    inflated_balls_cover,
    maximal_disjoint,
)
from .dimension import box_counts, falconer_bracket, hdim_bracket, limit_capacity, moran_dimension
from .distortion import C_matrix, D_of_n, Q_of_n, make_trace, verify_distortion_bound, verify_scaling
from .errors import DomainError
from .families import classify_rational, make_cantor, make_g_lambda, make_three_branch, make_tiling
from .geometry import Ball, PointCloud, ball_net, hausdorff_distance, union_subadditivity_check
from .ifs import AffineMap, PerturbedMap, System, attractor, attractor_distance, d0_distance, hutchinson
from .ifs import min_feasible_tol
from .measure import measure_bracket

TOL = 1e-12


@dataclass
class Check:
    name: str
    trials: int
    failures: int
    worst: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.failures == 0

    def to_dict(self):
        return {"name": self.name, "trials": self.trials, "failures": self.failures,
                "worst": self.worst, "pass": self.passed, **self.detail}


@dataclass
class SuiteResult:
    name: str
    seed: int
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"suite": self.name, "seed": self.seed, "pass": self.passed,
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _tally(name, margins, **detail):
    """Check from a list of margins; a margin > 0 is a failure."""
    m = np.asarray(margins, dtype=float)
    return Check(name, int(m.size), int(np.sum(m > 0)), float(m.max()) if m.size else 0.0, detail)


def diag_system():
    """diag(1/2, 1/4) and diag(1/4, 1/2): non-conformal with swapped stretch axes."""
    return System((AffineMap(np.diag([0.5, 0.25]), [0.4, 0.0]), AffineMap(np.diag([0.25, 0.5]), [-0.4, 0.0])))


def rotation_system():
    r = np.array([[0.0, -1.0], [1.0, 0.0]]) / 3
    return System((AffineMap(r, [0.5, 0.0]), AffineMap(np.eye(2) / 3, [-0.5, 0.0])))


def quadratic():
    """The single map x/3 + 0.02 x^2."""
    return System((PerturbedMap([[1 / 3]], [0.0], [{"exps": [2], "coef": [0.02]}]),))


def quadratic_pair():
    return System((
        PerturbedMap([[1 / 3]], [-0.5], [{"exps": [2], "coef": [0.02]}]),
        PerturbedMap([[1 / 3]], [0.5], [{"exps": [2], "coef": [-0.02]}]),
    ))


def random_affine(rng, dim, count=3, scale=0.2):
    """Maps U diag(s) + b with U orthogonal and singular values in [scale/2, scale]."""
    maps = []
    for _ in range(count):
        U, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        A = U * rng.uniform(scale / 2, scale, dim)
        maps.append(AffineMap(A, rng.uniform(-0.35, 0.35, dim) / math.sqrt(dim)))
    return System(tuple(maps))


def _cloud(rng, dim, size, r=0.7):
    return PointCloud(rng.uniform(-r, r, (size, dim)) / math.sqrt(dim))


def suite_metric(rng, trials=200):
    sym, ident, tri, sub = [], [], [], []
    for _ in range(trials):
        dim = int(rng.integers(1, 4))
        A, B, C = (_cloud(rng, dim, int(rng.integers(1, 13))) for _ in range(3))
        ab, ba = hausdorff_distance(A, B), hausdorff_distance(B, A)
        sym.append(abs(ab - ba) - TOL)
        ident.append(hausdorff_distance(A, A) - TOL)
        tri.append(hausdorff_distance(A, C) - ab - hausdorff_distance(B, C) - TOL)
        parts_a = [_cloud(rng, dim, 4) for _ in range(3)]
        parts_b = [_cloud(rng, dim, 4) for _ in range(3)]
        sub.append(union_subadditivity_check(parts_a, parts_b) - TOL)
    return [_tally("symmetry", sym), _tally("identity", ident), _tally("triangle", tri),
            _tally("union_subadditivity", sub)]


def _perturb(rng, F, size):
    maps = []
    for f in F.maps:
        dim = len(f.b)
        A = f.A + rng.uniform(-size, size, (dim, dim)) / (2 * dim)
        b = f.b + rng.uniform(-size, size, dim)
        if rng.random() < 0.5:
            exps = [0] * dim
            exps[int(rng.integers(dim))] = 2
            terms = [{"exps": exps, "coef": list(rng.uniform(-size, size, dim))}]
            maps.append(PerturbedMap(A, b, terms))
        else:
            maps.append(AffineMap(A, b))
    return System(tuple(maps))


def suite_contraction(rng, instances=24):
    """Hutchinson contraction on finite sets and attractor stability under d0 perturbation."""
    contr, stab = [], []
    for i in range(instances):
        dim = 1 if i % 2 == 0 else 2
        F = random_affine(rng, dim, scale=0.25 if dim == 1 else 0.2)
        G = _perturb(rng, F, 0.02)
        for H in (F, G):
            A, B = _cloud(rng, dim, 8), _cloud(rng, dim, 5)
            lhs = hausdorff_distance(hutchinson(H, A), hutchinson(H, B))
            contr.append(lhs - H.L * hausdorff_distance(A, B) - TOL)
        net = ball_net(dim, 0.01 if dim == 1 else 0.02)
        d0 = d0_distance(F, G, net)
        L = max(F.L, G.L)
        hd, slack = attractor_distance(F, G, 12 if dim == 1 else 7)
        stab.append(hd - (d0.value + d0.slack) / (1 - L) - slack)
    return [_tally("hutchinson_contraction", contr),
            _tally("attractor_stability", stab, instances=instances)]


def suite_distortion(rng, affine_trials=1000, trials=100, n_max=6):
    """Affine C_n = Id, the explicit distortion inequality, and the composition scaling bound."""
    systems = [diag_system(), rotation_system(), random_affine(rng, 2), random_affine(rng, 3, scale=0.15)]
    ident = []
    for _ in range(affine_trials):
        F = systems[int(rng.integers(len(systems)))]
        w = tuple(int(j) for j in rng.integers(0, len(F), int(rng.integers(1, 11))))
        x, y = (_cloud(rng, F.dim, 1, 0.9).points[0] for _ in range(2))
        ident.append(float(np.abs(C_matrix(F, w, x, y) - np.eye(F.dim)).max()) - TOL)
    F = quadratic()
    Q = Q_of_n(F, 10).Q
    ineq = []
    for _ in range(trials):
        w = (0,) * int(rng.integers(1, 11))
        x, y = rng.uniform(-1, 1, 2)
        r = verify_distortion_bound(F, make_trace(F, w, [x], [y]), [1.0], Q=Q)
        ineq.append(0.0 if r["pass"] else r["lhs"] - r["rhs"])
    G = diag_system()
    Qd, Dd = Q_of_n(G, n_max), D_of_n(G, n_max)
    scal = []
    for _ in range(trials):
        wa = tuple(int(j) for j in rng.integers(0, 2, int(rng.integers(1, n_max + 1))))
        wb = tuple(int(j) for j in rng.integers(0, 2, int(rng.integers(1, n_max + 1))))
        c = rng.uniform(-0.3, 0.3, 2)
        B = Ball(c, float(rng.uniform(0.05, 0.6)))
        r = verify_scaling(G, wa, wb, B, Qd.Q, Dd.D)
        scal.append(0.0 if r["pass"] else r["lhs"] - r["bound"] - r["slack"])
    return [
        _tally("affine_identity", ident),
        _tally("distortion_inequality", ineq, system="x/3+0.02x^2"),
        _tally("composition_scaling", scal, system="diag(1/2,1/4)", exhaustive=bool(all(Qd.exhaustive))),
    ]


def cover_systems():
    return [
        ("cantor", make_cantor(), 5),
        ("three_branch_0.3", make_three_branch(0.3), 5),
        ("g_lambda_0.2", make_g_lambda(0.2), 4),
        ("tiling", make_tiling(), 6),
        ("diag", diag_system(), 5),
        ("rotation", rotation_system(), 4),
        ("quadratic_pair", quadratic_pair(), 4),
    ]


def suite_cover(rng=None):
    """Zero-slack F_0 cover plus window, length, inflated-ball and covering checks."""
    F = make_three_branch(0.0)
    cover = build_dynamic_cover(F, 3, contraction_constants(F, slack=1.0))
    exact = sorted(cover.words) == sorted(tuple(int(d) for d in np.base_repr(i, 3).zfill(4)) for i in range(81))
    n16 = maximal_disjoint(F, cover).N
    checks = [Check("cantor_n3_words", 1, int(not exact), 0.0, {"words": len(cover.words)}),
              Check("cantor_n3_disjoint", 1, int(n16 != 16), 0.0, {"N": n16})]
    window, length, inflated, covers = [], [], [], []
    for name, G, n in cover_systems():
        c = build_dynamic_cover(G, n)
        window.append(0.0 if c.window_ok() else 1.0)
        length.append(float(c.max_length - n))
        dis = maximal_disjoint(G, c)
        inflated.append(inflated_ball_check(c, dis)["worst_ratio"] - 1 - TOL)
        level = 12 if G.dim == 1 else 6
        A = attractor(G, 2 * min_feasible_tol(G, level), level)
        worst, slack = cover_contains(G, c, A)
        covers.append(max(worst - slack, 0.0 if inflated_balls_cover(G, dis, A, n, c.constants.k) else 1.0))
    names = [s[0] for s in cover_systems()]
    return checks + [
        _tally("diameter_window", window, systems=names),
        _tally("length_at_most_n", length),
        _tally("inflated_ball", inflated),
        _tally("covers_attractor", covers),
    ]


def suite_dimension(rng=None):
    """Moran/bracket agreement, doubling bound and capacity inside the bracket."""
    moran = []
    for F, r in ((make_cantor(), 1 / 3), (make_g_lambda(0.2), 0.2), (make_tiling(), 0.5)):
        lo, hi = falconer_bracket(len(F), math.log(r), math.log(r))
        m = moran_dimension([r] * len(F))
        moran.append(max(abs(lo - m), abs(hi - m)) - 1e-10)
    doubling = []
    for F in (make_cantor(), make_three_branch(0.3), make_g_lambda(0.2)):
        A = attractor(F, 2 * min_feasible_tol(F, 12), 12)
        c = box_counts(A, range(0, 12)).counts
        doubling.append(max(c[i + 1] - 2 * c[i] for i in range(len(c) - 1)))
    F = make_three_branch(0.0)
    br = hdim_bracket(F, 7, slack=1.0)
    A = attractor(F, 2 * min_feasible_tol(F, 12), 12)
    cap = limit_capacity(A, range(2, 7), base=3, frame=F.frame).slope
    inside = max(br.lower - cap, cap - br.upper) - 0.03
    return [_tally("moran_equals_bracket", moran), _tally("doubling", doubling),
            Check("capacity_in_bracket", 1, int(inside > 0), inside, {"capacity": cap})]


def suite_measure(rng=None):
    """Bracket ordering, monotonicity in the grid level and the t = 1/2 value."""
    order, mono = [], []
    for t in (0.0, 0.2, 0.3, 0.5):
        F = make_three_branch(t)
        prev = None
        for level in (8, 10, 12):
            br = measure_bracket(attractor(F, 2 * min_feasible_tol(F, level), level), F)
            order.append(br.inner - br.outer)
            if prev is not None:
                mono.append(max(br.outer - prev.outer, prev.inner - br.inner) - TOL)
            prev = br
    F = make_three_branch(0.5)
    br = measure_bracket(attractor(F, 2 * min_feasible_tol(F, 12), 12), F).natural(F.frame)
    half = 0.0 if br.contains(0.5) and br.width <= 0.02 else 1.0
    return [_tally("inner_le_outer", order), _tally("level_monotone", mono),
            Check("half_contains_value", 1, int(half), half, {"inner": br.inner, "outer": br.outer})]


def suite_families(rng):
    """Constant contraction rates, zero distortion and lowest-terms classification."""
    rates = []
    for t in np.linspace(0, 0.5, 11):
        F = make_three_branch(float(t))
        cc = contraction_constants(F, slack=1.0)
        q = max(Q_of_n(F, 4).Q + D_of_n(F, 4).D)
        rates.append(max(abs(cc.k - math.log(3)), abs(cc.K - math.log(3)), q) - TOL)
    scaling = []
    for _ in range(200):
        q = int(rng.integers(1, 40))
        p = int(rng.integers(0, q // 2 + 1))
        c = int(rng.integers(2, 9))
        scaling.append(float(classify_rational(p, q).label != classify_rational(c * p, c * q).label))
    trip = []
    for F in (make_three_branch(0.3), make_g_lambda(0.2), make_cantor()):
        x = np.linspace(F.frame.lo, F.frame.hi, 17)
        trip.append(float(np.abs(F.frame.to_natural(F.frame.to_normalized(x)) - x).max()) - TOL)
    return [_tally("contraction_rates", rates), _tally("classify_scaling", scaling),
            _tally("frame_round_trip", trip)]


SUITES = {
    "metric": suite_metric,
    "contraction": suite_contraction,
    "distortion": suite_distortion,
    "cover": suite_cover,
    "dimension": suite_dimension,
    "measure": suite_measure,
    "families": suite_families,
}


def run_suite(name, seed=0):
    if name not in SUITES:
        raise DomainError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    rng = np.random.default_rng(seed)
    return SuiteResult(name, seed, SUITES[name](rng))


def run_all(seed=0):
    return [run_suite(name, seed) for name in SUITES]
