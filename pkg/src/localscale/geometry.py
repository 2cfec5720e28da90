"""Compact subsets of the closed unit ball: dyadic grids, point clouds, and the Hausdorff metric.

Grids tile the cube [-1, 1]^n with cells of side 2**-level; cells that miss
the unit ball are dropped. A GridSet stands for the union of its closed cells.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.distance import pdist

from . import _accel
from .errors import DomainError, EmptySetError, RepresentationMismatch

MAX_DIM = 3
KDTREE_THRESHOLD = 10_000
_DENSE_LIMIT = 1 << 24


def _canonical_cells(cells, dim):
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, dim)
    if len(cells) == 0:
        return cells
    return np.unique(cells, axis=0)


def _ball_mask(cells, level):
    """True for cells whose closed box meets the closed unit ball."""
    h = 2.0 ** -level
    lo = -1.0 + cells * h
    hi = lo + h
    nearest = np.clip(0.0, lo, hi)
    return np.einsum("ij,ij->i", nearest, nearest) <= 1.0


@dataclass(frozen=True, eq=False)
class GridSet:
    """Occupied cells of the level-``level`` dyadic grid.

    ``error`` bounds the Hausdorff distance between the union of cells and the
    set it approximates; ``superset`` records that the union is certified to
    contain that set.
    """

    dim: int
    level: int
    cells: np.ndarray
    error: float = 0.0
    superset: bool = False

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise DomainError(f"dimension {self.dim} not in 1..{MAX_DIM}")
        if self.level < 0:
            raise DomainError("grid level must be >= 0")
        cells = _canonical_cells(self.cells, self.dim)
        if len(cells) and (cells.min() < 0 or cells.max() >= self.n_side):
            raise DomainError("cell index outside the grid")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_cells(cls, dim, level, cells, *, error=0.0, superset=False, clip=True):
        cells = _canonical_cells(cells, dim)
        if clip and len(cells):
            cells = cells[_ball_mask(cells, level)]
        return cls(dim, level, cells, error=error, superset=superset)

    @classmethod
    def full(cls, dim, level):
        """All cells meeting the unit ball."""
        side = np.arange(2 ** (level + 1), dtype=np.int64)
        grids = np.meshgrid(*([side] * dim), indexing="ij")
        cells = np.stack([g.reshape(-1) for g in grids], axis=1)
        return cls.from_cells(dim, level, cells, superset=True)

    @classmethod
    def from_points(cls, points, level):
        """Cells whose closed box contains one of ``points`` (both sides of a shared face)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dim = pts.shape[1]
        h = 2.0 ** -level
        u = (pts + 1.0) / h
        lo = np.floor(u).astype(np.int64)
        on_face = (u == np.floor(u)) & (lo > 0)
        lo_idx = np.where(on_face, lo - 1, lo)
        hi_idx = lo.copy()
        n_side = 2 ** (level + 1)
        lo_idx = np.clip(lo_idx, 0, n_side - 1)
        hi_idx = np.clip(hi_idx, 0, n_side - 1)
        cells = _accel.rasterize_boxes(np.ascontiguousarray(lo_idx), np.ascontiguousarray(hi_idx))
        return cls.from_cells(dim, level, cells, superset=True)

    @classmethod
    def from_boxes(cls, lo, hi, level, **kw):
        """Cells whose interior meets one of the closed boxes ``[lo_i, hi_i]``."""
        lo = np.atleast_2d(np.asarray(lo, dtype=np.float64))
        hi = np.atleast_2d(np.asarray(hi, dtype=np.float64))
        dim = lo.shape[1]
        lo_idx, hi_idx = box_index_range(lo, hi, level)
        cells = _accel.rasterize_boxes(lo_idx, hi_idx)
        return cls.from_cells(dim, level, cells, **kw)

    @property
    def n_side(self):
        return 2 ** (self.level + 1)

    @property
    def width(self):
        return 2.0 ** -self.level

    @property
    def half_diag(self):
        return 0.5 * self.width * math.sqrt(self.dim)

    @property
    def cell_volume(self):
        return self.width ** self.dim

    @property
    def volume(self):
        return len(self.cells) * self.cell_volume

    @property
    def centers(self):
        return -1.0 + (self.cells + 0.5) * self.width

    @property
    def lows(self):
        return -1.0 + self.cells * self.width

    def __len__(self):
        return len(self.cells)

    def __eq__(self, other):
        if not isinstance(other, GridSet):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.level == other.level
            and self.cells.shape == other.cells.shape
            and bool(np.all(self.cells == other.cells))
        )

    def __hash__(self):
        return hash((self.dim, self.level, self.cells.tobytes()))

    def cell_keys(self):
        """Scalar key per cell (row-major over the full grid) for fast set operations."""
        key = np.zeros(len(self.cells), dtype=np.int64)
        for k in range(self.dim):
            key = key * self.n_side + self.cells[:, k]
        return key

    def contains_cells(self, cells):
        """Boolean mask: which of ``cells`` are occupied."""
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, self.dim)
        inside = np.all((cells >= 0) & (cells < self.n_side), axis=1)
        key = np.zeros(len(cells), dtype=np.int64)
        for k in range(self.dim):
            key = key * self.n_side + np.clip(cells[:, k], 0, self.n_side - 1)
        return inside & np.isin(key, self.cell_keys())

    def union(self, other):
        _check_same_grid(self, other)
        return GridSet(
            self.dim,
            self.level,
            np.concatenate([self.cells, other.cells]),
            error=max(self.error, other.error),
            superset=self.superset and other.superset,
        )

    def dense(self):
        arr = np.zeros((self.n_side,) * self.dim, dtype=bool)
        if len(self.cells):
            arr[tuple(self.cells.T)] = True
        return arr

    def coarsen(self, level):
        """Occupied cells of the coarser grid at ``level`` (exact parent map)."""
        if level > self.level:
            raise DomainError("cannot coarsen to a finer level")
        shift = self.level - level
        coarse_diag = 2.0 ** -level * math.sqrt(self.dim)
        return GridSet(self.dim, level, self.cells >> shift, error=self.error + coarse_diag, superset=self.superset)

    def to_json(self):
        return json.dumps(
            {"dim": self.dim, "level": self.level, "cells": self.cells.tolist()},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(int(data["dim"]), int(data["level"]), np.asarray(data["cells"], dtype=np.int64).reshape(-1, int(data["dim"])))

    def to_pgm(self):
        """Binary PGM (P5) raster, one pixel per cell; occupied 0, empty 255; +y points up."""
        if self.dim != 2:
            raise RepresentationMismatch("PGM export needs a 2-D grid")
        img = np.full((self.n_side, self.n_side), 255, dtype=np.uint8)
        if len(self.cells):
            img[self.n_side - 1 - self.cells[:, 1], self.cells[:, 0]] = 0
        header = f"P5\n{self.n_side} {self.n_side}\n255\n".encode("ascii")
        return header + img.tobytes()


def box_index_range(lo, hi, level):
    """Index ranges of cells whose interior meets each closed box; degenerate boxes get one cell."""
    h = 2.0 ** -level
    n_side = 2 ** (level + 1)
    ulo = (lo + 1.0) / h
    uhi = (hi + 1.0) / h
    lo_idx = np.floor(ulo).astype(np.int64)
    hi_idx = np.ceil(uhi).astype(np.int64) - 1
    hi_idx = np.maximum(hi_idx, lo_idx)
    lo_idx = np.clip(lo_idx, 0, n_side - 1)
    hi_idx = np.clip(hi_idx, 0, n_side - 1)
    return np.ascontiguousarray(lo_idx), np.ascontiguousarray(hi_idx)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite sample of a compact set; ``resolution`` is the net radius it guarantees."""

    points: np.ndarray
    resolution: float = 1e-12

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if pts.size == 0:
            pts = pts.reshape(0, max(pts.shape[-1], 1))
        if not 1 <= pts.shape[1] <= MAX_DIM:
            raise DomainError(f"dimension {pts.shape[1]} not in 1..{MAX_DIM}")
        if len(pts) and np.max(np.linalg.norm(pts, axis=1)) > 1.0 + 1e-12:
            raise DomainError("point outside the closed unit ball")
        if not self.resolution > 0:
            raise DomainError("resolution must be positive")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    def __hash__(self):
        return hash(self.points.tobytes())

    def union(self, other):
        if self.dim != other.dim:
            raise RepresentationMismatch("dimension mismatch")
        return PointCloud(np.concatenate([self.points, other.points]), max(self.resolution, other.resolution))

    def to_json(self):
        return json.dumps(
            {"dim": self.dim, "resolution": self.resolution, "points": self.points.tolist()},
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        pts = np.asarray(data["points"], dtype=np.float64).reshape(-1, int(data["dim"]))
        return cls(pts, float(data["resolution"]))


def ball_net(dim, eps):
    """Points of the eps/2-spaced cube lattice inside the unit ball, plus a boundary layer.

    Every point of the closed ball lies within ``eps`` of the returned cloud.
    """
    step = eps / math.sqrt(dim)
    k = int(math.ceil(1.0 / step))
    axis = np.linspace(-1.0, 1.0, 2 * k + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    norms = np.linalg.norm(pts, axis=1)
    outside = norms > 1.0
    pts[outside] /= norms[outside, None]
    pts = np.unique(pts, axis=0)
    return PointCloud(pts, eps)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray = field(hash=False)
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=np.float64))
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "center", c)

    @property
    def dim(self):
        return len(self.center)

    @property
    def diameter(self):
        return 2.0 * self.radius

    def boundary_samples(self, count):
        """Deterministic points on the sphere of the ball (1-D: the two endpoints)."""
        return self.center + self.radius * sphere_directions(self.dim, count)


def sphere_directions(dim, count):
    """Deterministic, roughly uniform unit vectors."""
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        theta = np.linspace(0.0, 2 * math.pi, count, endpoint=False)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    i = np.arange(count) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / count)
    golden = math.pi * (1.0 + math.sqrt(5.0))
    theta = golden * i
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)


def _check_same_grid(a, b):
    if a.dim != b.dim or a.level != b.level:
        raise RepresentationMismatch(f"grids differ: dim {a.dim}/{b.dim}, level {a.level}/{b.level}")


def _points_of(a, b):
    if isinstance(a, GridSet) and isinstance(b, GridSet):
        _check_same_grid(a, b)
        return a.centers, b.centers
    if isinstance(a, PointCloud) and isinstance(b, PointCloud):
        if a.dim != b.dim:
            raise RepresentationMismatch(f"dimension mismatch {a.dim}/{b.dim}")
        return a.points, b.points
    raise RepresentationMismatch(f"cannot compare {type(a).__name__} with {type(b).__name__}")


def directed_distance(pa, pb):
    """max over ``pa`` of the distance to ``pb``."""
    if len(pa) == 0 or len(pb) == 0:
        raise EmptySetError("empty set in Hausdorff distance")
    if max(len(pa), len(pb)) > KDTREE_THRESHOLD:
        d, _ = cKDTree(pb).query(pa, k=1)
        return float(d.max())
    return float(_accel.directed_hausdorff(np.ascontiguousarray(pa), np.ascontiguousarray(pb)))


def hausdorff_distance(a, b):
    """Hausdorff distance between two sets of the same kind.

    Grids are compared through cell centers; see :func:`hausdorff_slack` for
    the uncertainty this carries.
    """
    pa, pb = _points_of(a, b)
    return max(directed_distance(pa, pb), directed_distance(pb, pa))


def hausdorff_slack(a, b):
    """Bound on |hausdorff_distance(a, b) - Hd(represented sets)| from discretisation alone."""
    if isinstance(a, GridSet):
        return a.half_diag + b.half_diag
    return a.resolution + b.resolution


def epsilon_neighborhood(a, eps):
    """N_eps(a) in the same representation.

    Grid: cells whose center lies within ``eps`` of an occupied center, clipped
    to the ball. Cloud: same points with the net radius grown by ``eps``.
    """
    if eps < 0:
        raise DomainError("negative neighborhood radius")
    if isinstance(a, PointCloud):
        if eps == 0:
            return a
        return PointCloud(a.points, a.resolution + eps)
    if eps == 0 or len(a) == 0:
        return a
    r = eps / a.width
    margin = int(math.floor(r)) + 1
    lo = np.maximum(a.cells.min(axis=0) - margin, 0)
    hi = np.minimum(a.cells.max(axis=0) + margin, a.n_side - 1)
    shape = tuple(int(x) for x in hi - lo + 1)
    if np.prod(shape, dtype=np.float64) > _DENSE_LIMIT:
        raise DomainError("neighborhood too large for a dense distance transform at this level")
    occ = np.zeros(shape, dtype=bool)
    occ[tuple((a.cells - lo).T)] = True
    dist = ndimage.distance_transform_edt(~occ)
    sel = np.argwhere(dist <= r + 1e-9) + lo
    return GridSet.from_cells(a.dim, a.level, sel, error=a.error + eps, superset=a.superset)


def diameter(a):
    """Largest pairwise distance; for grids, between farthest cell corners (an upper estimate)."""
    if len(a) == 0:
        raise EmptySetError("diameter of the empty set")
    if isinstance(a, GridSet):
        if a.dim == 1:
            return float((a.cells[-1, 0] - a.cells[0, 0] + 1) * a.width)
        offs = np.stack(np.meshgrid(*([[0, 1]] * a.dim), indexing="ij"), axis=-1).reshape(-1, a.dim)
        pts = (-1.0 + (a.cells[:, None, :] + offs[None]) * a.width).reshape(-1, a.dim)
    else:
        pts = a.points
    return _point_diameter(pts)


def _point_diameter(pts):
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    if len(pts) > 2000:
        pts = np.unique(pts, axis=0)
        try:
            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # degenerate (collinear/coplanar) clouds
            pass
    if len(pts) > 6000:
        # fall back to chunked exact evaluation
        best = 0.0
        for s in range(0, len(pts), 2000):
            block = pts[s:s + 2000]
            d = np.sqrt(((block[:, None, :] - pts[None]) ** 2).sum(-1))
            best = max(best, float(d.max()))
        return best
    return float(pdist(pts).max())


def _union(parts):
    out = parts[0]
    for p in parts[1:]:
        out = out.union(p)
    return out


def union_subadditivity_check(parts_a, parts_b):
    """Hd(union A_i, union B_i) - max_i Hd(A_i, B_i); non-positive up to discretisation slack."""
    if len(parts_a) != len(parts_b) or not parts_a:
        raise RepresentationMismatch("part lists must be nonempty and of equal length")
    whole = hausdorff_distance(_union(parts_a), _union(parts_b))
    worst = max(hausdorff_distance(x, y) for x, y in zip(parts_a, parts_b))
    return whole - worst
