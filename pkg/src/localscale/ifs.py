"""Contraction maps, finite systems, the Hutchinson operator and its fixed point.

A word ``(j1, ..., jm)`` denotes the composition ``f_jm o ... o f_j1``: ``j1``
acts first. The empty word is the identity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, MapInvariantError, ResolutionError
from .geometry import GridSet, PointCloud, hausdorff_distance, sphere_directions

_CONTAIN_TOL = 1e-12


def _as_points(x, dim):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1 or (x.ndim == 0)
    x = x.reshape(-1, dim)
    return x, single


class ContractionMap:
    """Diffeomorphism of the unit ball onto a subset of it with certified constants.

    Subclasses set ``lipschitz`` (bound on the Jacobian operator norm),
    ``sigma_min`` (lower bound on the smallest singular value),
    ``holder_alpha`` and ``holder_const`` (Hölder data of the derivative).
    """

    dim: int
    lipschitz: float
    sigma_min: float
    holder_alpha: float = 1.0
    holder_const: float = 0.0
    is_affine = False

    def __call__(self, x):
        pts, single = _as_points(x, self.dim)
        out = self._eval(pts)
        return out[0] if single else out

    def jacobian(self, x):
        pts, single = _as_points(x, self.dim)
        out = self._jac(pts)
        return out[0] if single else out

    @property
    def inv_norm_bound(self):
        """Upper bound on ||(Df)^-1|| over the ball."""
        return 1.0 / self.sigma_min

    def _certify(self):
        if not self.lipschitz < 1.0:
            raise MapInvariantError(f"Lipschitz bound {self.lipschitz:.6g} is not < 1")
        if not self.sigma_min > 0.0:
            raise MapInvariantError("Jacobian not certifiably invertible on the ball")
        worst = self._max_image_norm()
        if worst > 1.0 + _CONTAIN_TOL:
            raise MapInvariantError(f"map leaves the unit ball (|f(x)| up to {worst:.6g})")


class AffineMap(ContractionMap):
    is_affine = True

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
            raise DomainError("affine map needs square A and matching b")
        self.A = A
        self.b = b
        self.dim = A.shape[0]
        sv = np.linalg.svd(A, compute_uv=False)
        self.lipschitz = float(sv[0])
        self.sigma_min = float(sv[-1])
        if abs(np.linalg.det(A)) == 0.0:
            raise MapInvariantError("singular linear part")
        self._certify()

    def _eval(self, x):
        return x @ self.A.T + self.b

    def _jac(self, x):
        return np.broadcast_to(self.A, (len(x), self.dim, self.dim)).copy()

    def _max_image_norm(self):
        if self.dim == 1:
            return float(max(abs(self.A[0, 0] + self.b[0]), abs(-self.A[0, 0] + self.b[0])))
        quick = self.lipschitz + float(np.linalg.norm(self.b))
        if quick <= 1.0:
            return quick
        # max of a convex function over the ball sits on the sphere
        count = 8192 if self.dim == 2 else 40000
        dirs = sphere_directions(self.dim, count)
        spacing = 2 * math.pi / count if self.dim == 2 else 4.0 / math.sqrt(count)
        return float(np.linalg.norm(self._eval(dirs), axis=1).max() + self.lipschitz * spacing)

    def image_box(self, lo, hi):
        """Bounding box of the image of each box ``[lo_i, hi_i]`` (exact for a parallelotope)."""
        c = 0.5 * (lo + hi)
        w = 0.5 * (hi - lo)
        ic = self._eval(c)
        iw = w @ np.abs(self.A).T
        return ic - iw, ic + iw

    def to_dict(self):
        return {"kind": "affine", "A": self.A.tolist(), "b": self.b.tolist()}

    def __repr__(self):
        return f"AffineMap(A={self.A.tolist()}, b={self.b.tolist()})"


def _ipow(lo, hi, e):
    """Interval power [lo, hi]**e for integer e >= 0."""
    if e == 0:
        return np.ones_like(lo), np.ones_like(hi)
    a, b = lo**e, hi**e
    plo, phi = np.minimum(a, b), np.maximum(a, b)
    if e % 2 == 0:
        plo = np.where((lo < 0) & (hi > 0), 0.0, plo)
    return plo, phi


def _imul(alo, ahi, blo, bhi):
    c = np.stack([alo * blo, alo * bhi, ahi * blo, ahi * bhi])
    return c.min(axis=0), c.max(axis=0)


class PerturbedMap(ContractionMap):
    """Affine map plus a polynomial perturbation ``sum_t coef_t * x**exps_t``.

    Bounds on the perturbation's derivative over the cube [-1, 1]^n give the
    Lipschitz bound, the smallest-singular-value bound and the Lipschitz
    (alpha = 1) constant of the derivative; all are then spot-checked on a grid.
    """

    def __init__(self, A, b, terms):
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        b = np.atleast_1d(np.asarray(b, dtype=np.float64))
        self.A, self.b, self.dim = A, b, A.shape[0]
        parsed = []
        for t in terms:
            exps = np.asarray(t["exps"], dtype=np.int64).reshape(self.dim)
            coef = np.atleast_1d(np.asarray(t["coef"], dtype=np.float64))
            if coef.shape == (1,) and self.dim > 1:
                raise DomainError("coef must be a vector of length dim")
            if np.any(exps < 0):
                raise DomainError("negative exponent")
            parsed.append((exps, coef.reshape(self.dim)))
        self.terms = parsed

        d1 = np.zeros((self.dim, self.dim))  # entrywise bound on |d P_o / d x_i|
        d2 = np.zeros((self.dim, self.dim))  # entrywise Lipschitz bound of d P_o / d x_i
        for exps, coef in parsed:
            for i in range(self.dim):
                if exps[i] == 0:
                    continue
                d1[:, i] += np.abs(coef) * exps[i]
                grad = np.array([exps[i] * (exps[k] - (k == i)) for k in range(self.dim)], dtype=float)
                d2[:, i] += np.abs(coef) * np.linalg.norm(np.maximum(grad, 0.0))
        self.perturbation_bound = float(np.linalg.norm(d1))
        sv = np.linalg.svd(A, compute_uv=False)
        self.lipschitz = float(sv[0]) + self.perturbation_bound
        self.sigma_min = float(sv[-1]) - self.perturbation_bound
        self.holder_alpha = 1.0
        self.holder_const = float(np.linalg.norm(d2))
        self._certify()
        self._spot_check()

    def _poly(self, x):
        out = np.zeros_like(x)
        for exps, coef in self.terms:
            mono = np.prod(x**exps, axis=1)
            out += mono[:, None] * coef
        return out

    def _eval(self, x):
        return x @ self.A.T + self.b + self._poly(x)

    def _jac(self, x):
        J = np.broadcast_to(self.A, (len(x), self.dim, self.dim)).copy()
        for exps, coef in self.terms:
            for i in range(self.dim):
                if exps[i] == 0:
                    continue
                e = exps.copy()
                e[i] -= 1
                d = exps[i] * np.prod(x**e, axis=1)
                J[:, :, i] += d[:, None] * coef[None, :]
        return J

    def _verification_grid(self):
        per_axis = {1: 2001, 2: 161, 3: 41}[self.dim]
        axis = np.linspace(-1.0, 1.0, per_axis)
        spacing = axis[1] - axis[0]
        grids = np.meshgrid(*([axis] * self.dim), indexing="ij")
        pts = np.stack([g.reshape(-1) for g in grids], axis=1)
        reach = 0.5 * spacing * math.sqrt(self.dim)
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0 + reach]
        return pts, reach

    def _max_image_norm(self):
        pts, reach = self._verification_grid()
        return float(np.linalg.norm(self._eval(pts), axis=1).max() + self.lipschitz * reach)

    def _spot_check(self):
        pts, _ = self._verification_grid()
        J = self._jac(pts)
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[:, 0].max() > self.lipschitz * (1 + 1e-9):
            raise MapInvariantError("derivative bound violated on verification grid")
        det = np.linalg.det(J)
        if not (np.all(det > 0) or np.all(det < 0)):
            raise MapInvariantError("Jacobian determinant changes sign on the ball")

    def jacobian_enclosure(self, lo, hi):
        """Entrywise interval bounds of the Jacobian over each box (shape (N, n, n) twice)."""
        lo = np.atleast_2d(lo)
        hi = np.atleast_2d(hi)
        n = len(lo)
        Jlo = np.broadcast_to(self.A, (n, self.dim, self.dim)).copy()
        Jhi = Jlo.copy()
        for exps, coef in self.terms:
            for i in range(self.dim):
                if exps[i] == 0:
                    continue
                mlo, mhi = np.ones(n), np.ones(n)
                for k in range(self.dim):
                    e = exps[k] - (k == i)
                    plo, phi = _ipow(lo[:, k], hi[:, k], int(e))
                    mlo, mhi = _imul(mlo, mhi, plo, phi)
                mlo, mhi = mlo * exps[i], mhi * exps[i]
                for o in range(self.dim):
                    a, b = mlo * coef[o], mhi * coef[o]
                    Jlo[:, o, i] += np.minimum(a, b)
                    Jhi[:, o, i] += np.maximum(a, b)
        return Jlo, Jhi

    def image_box(self, lo, hi):
        """Mean-value interval enclosure of the image of each box."""
        c = 0.5 * (lo + hi)
        w = 0.5 * (hi - lo)
        Jlo, Jhi = self.jacobian_enclosure(lo, hi)
        mag = np.maximum(np.abs(Jlo), np.abs(Jhi))
        iw = np.einsum("noi,ni->no", mag, w)
        ic = self._eval(c)
        return ic - iw, ic + iw

    def to_dict(self):
        return {
            "kind": "perturbed",
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "poly": {"terms": [{"exps": e.tolist(), "coef": c.tolist()} for e, c in self.terms]},
        }

    def __repr__(self):
        return f"PerturbedMap(A={self.A.tolist()}, b={self.b.tolist()}, terms={len(self.terms)})"


_MAP_KEYS = {"affine": {"kind", "A", "b"}, "perturbed": {"kind", "A", "b", "poly"}}


def map_from_dict(d):
    kind = d.get("kind", "affine")
    extra = set(d) - _MAP_KEYS.get(kind, set(d))
    if extra:
        raise DomainError(f"unknown keys for a {kind} map: {sorted(extra)}")
    if kind == "affine":
        return AffineMap(d["A"], d["b"])
    if kind == "perturbed":
        return PerturbedMap(d["A"], d["b"], d.get("poly", {}).get("terms", []))
    raise DomainError(f"unknown map kind {kind!r}")


@dataclass(frozen=True, eq=False)
class System:
    """Finite ordered family of contraction maps on the unit ball of R^dim.

    ``frame`` optionally records how the maps were conjugated from natural
    coordinates (see :mod:`localscale.families`).
    """

    maps: tuple
    frame: object = field(default=None, compare=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        if not maps:
            raise DomainError("a system needs at least one map")
        if len({m.dim for m in maps}) != 1:
            raise DomainError("maps of different dimensions")
        object.__setattr__(self, "maps", maps)
        if not self.L < 1.0:
            raise MapInvariantError("common Lipschitz bound is not < 1")

    @property
    def dim(self):
        return self.maps[0].dim

    @property
    def L(self):
        return max(m.lipschitz for m in self.maps)

    @property
    def alpha(self):
        return min(m.holder_alpha for m in self.maps)

    @property
    def holder_const(self):
        return max(m.holder_const for m in self.maps)

    @property
    def inv_norm_bound(self):
        return max(m.inv_norm_bound for m in self.maps)

    @property
    def sigma_max(self):
        return max(m.lipschitz for m in self.maps)

    @property
    def sigma_min(self):
        return min(m.sigma_min for m in self.maps)

    @property
    def is_affine(self):
        return all(m.is_affine for m in self.maps)

    def __len__(self):
        return len(self.maps)

    def to_dict(self):
        return {"dim": self.dim, "maps": [m.to_dict() for m in self.maps]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        maps = tuple(map_from_dict(m) for m in d["maps"])
        if "dim" in d and any(m.dim != int(d["dim"]) for m in maps):
            raise DomainError("declared dim does not match the maps")
        return cls(maps)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class Composition:
    """The composed map of a word, evaluated along the orbit."""

    def __init__(self, system, word):
        word = tuple(int(j) for j in word)
        if any(j < 0 or j >= len(system) for j in word):
            raise DomainError(f"word {word} has an invalid index")
        self.system = system
        self.word = word
        self.dim = system.dim

    def __len__(self):
        return len(self.word)

    def orbit(self, x):
        """Points x_0, ..., x_m along the word (shape (m+1, N, n))."""
        pts, _ = _as_points(x, self.dim)
        out = [pts]
        for j in self.word:
            pts = self.system.maps[j]._eval(pts)
            out.append(pts)
        return out

    def __call__(self, x):
        pts, single = _as_points(x, self.dim)
        for j in self.word:
            pts = self.system.maps[j]._eval(pts)
        return pts[0] if single else pts

    def jacobian(self, x):
        """Chain-rule product D f_jm(x_{m-1}) ... D f_j1(x_0)."""
        pts, single = _as_points(x, self.dim)
        J = np.broadcast_to(np.eye(self.dim), (len(pts), self.dim, self.dim)).copy()
        for j in self.word:
            f = self.system.maps[j]
            J = f._jac(pts) @ J
            pts = f._eval(pts)
        return J[0] if single else J

    def jacobians_along(self, x):
        """Prefix Jacobians D(f_ji...f_j1)|x for i = 0..m (shape (m+1, N, n, n))."""
        pts, _ = _as_points(x, self.dim)
        J = np.broadcast_to(np.eye(self.dim), (len(pts), self.dim, self.dim)).copy()
        out = [J]
        for j in self.word:
            f = self.system.maps[j]
            J = f._jac(pts) @ J
            pts = f._eval(pts)
            out.append(J)
        return np.stack(out)

    @property
    def matrix(self):
        """Exact linear part (affine systems only)."""
        M, _ = self._affine_parts()
        return M

    @property
    def translation(self):
        _, t = self._affine_parts()
        return t

    def _affine_parts(self):
        if not self.system.is_affine:
            raise DomainError("exact product matrix is only defined for affine systems")
        M = np.eye(self.dim)
        t = np.zeros(self.dim)
        for j in self.word:
            f = self.system.maps[j]
            M = f.A @ M
            t = f.A @ t + f.b
        return M, t

    @property
    def lipschitz(self):
        return math.prod(self.system.maps[j].lipschitz for j in self.word)


def compose(system, word):
    return Composition(system, word)


def _grid_image(system, A):
    lo = A.lows
    hi = lo + A.width
    los, his = [], []
    for f in system.maps:
        ilo, ihi = f.image_box(lo, hi)
        los.append(ilo)
        his.append(ihi)
    return GridSet.from_boxes(
        np.concatenate(los),
        np.concatenate(his),
        A.level,
        error=system.L * A.error + 2 * A.half_diag,
        superset=A.superset,
    )


def hutchinson(system, A):
    """Union of the images f_j(A) in the representation of ``A``.

    Grids: every occupied cell is pushed through each map as a box enclosure
    and rasterised back onto the same level, so the union of result cells
    contains the true image.
    """
    if len(A) == 0:
        raise DomainError("Hutchinson operator needs a nonempty set")
    if A.dim != system.dim:
        raise DomainError("dimension mismatch between set and system")
    if isinstance(A, PointCloud):
        pts = np.concatenate([f._eval(A.points) for f in system.maps])
        return PointCloud(pts, max(system.L * A.resolution, 1e-300))
    return _grid_image(system, A)


def iterations_for(L, tol, diam=2.0):
    """Smallest n with L**n * diam / (1 - L) <= tol."""
    if L == 0.0:
        return 1
    return max(1, math.ceil(math.log(tol * (1.0 - L) / diam) / math.log(L)))


def min_feasible_tol(system, level):
    diag = 2.0 ** -level * math.sqrt(system.dim)
    return diag / (1.0 - system.L)


def attractor(system, tol, level=10, max_steps=None):
    """Grid outer approximation of the attractor, iterated from the full ball.

    At least the a-priori number of steps is taken; iteration then continues
    until the grid is stationary (or ``max_steps``). The returned grid contains
    the attractor and its ``error`` bounds the Hausdorff distance to it:
    ``L**n * 2 / (1 - L) + diag / (1 - L)``, or ``diag / (1 - L)`` once stationary.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    floor = min_feasible_tol(system, level)
    if tol < floor:
        raise ResolutionError(
            f"tol {tol:g} is below the grid resolution at level {level}; minimum feasible tol is {floor:.6g}"
        )
    L = system.L
    n = iterations_for(L, tol)
    cap = max_steps if max_steps is not None else max(4 * n, 64)
    diag = 2.0 ** -level * math.sqrt(system.dim)
    G = GridSet.full(system.dim, level)
    stationary = False
    steps = 0
    while steps < cap:
        nxt = _grid_image(system, G)
        steps += 1
        if nxt == G:
            stationary = True
            break
        G = nxt
    tail = 0.0 if stationary else L**steps * 2.0 / (1.0 - L)
    return GridSet(G.dim, G.level, G.cells, error=tail + diag / (1.0 - L), superset=True)


class D0(NamedTuple):
    value: float
    slack: float


def images_at(system, x):
    """Array (N, |J|, n) of the finite sets F(x) for each sample point."""
    pts, _ = _as_points(x, system.dim)
    return np.stack([f._eval(pts) for f in system.maps], axis=1)


def d0_distance(F, G, sample):
    """max over sample points of Hd(F(x), G(x)), with slack (L_F + L_G + 1) * eps."""
    if len(sample) == 0:
        raise DomainError("empty sample")
    if F.dim != G.dim:
        raise DomainError("dimension mismatch")
    a = images_at(F, sample.points)
    b = images_at(G, sample.points)
    d = np.linalg.norm(a[:, :, None, :] - b[:, None, :, :], axis=-1)
    directed = np.maximum(d.min(axis=2).max(axis=1), d.min(axis=1).max(axis=1))
    return D0(float(directed.max()), (F.L + G.L + 1.0) * sample.resolution)


def attractor_distance(F, G, level, tol=None):
    """Grid Hausdorff distance between two attractors with its total slack."""
    tol = tol or 2 * max(min_feasible_tol(F, level), min_feasible_tol(G, level))
    a = attractor(F, tol, level)
    b = attractor(G, tol, level)
    return hausdorff_distance(a, b), a.error + b.error + 2 * a.half_diag
