import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localscale import _pure
from localscale._accel import BACKEND
from localscale.errors import DomainError, EmptySetError, RepresentationMismatch
from localscale.geometry import (
    Ball,
    GridSet,
    PointCloud,
    ball_net,
    diameter,
    epsilon_neighborhood,
    hausdorff_distance,
    hausdorff_slack,
    union_subadditivity_check,
)


def cloud(pts, res=1e-12):
    return PointCloud(np.asarray(pts, dtype=float).reshape(len(pts), -1), res)


def test_hausdorff_identity_and_singletons():
    a = cloud([[0.1], [0.3]])
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(cloud([[0.0]]), cloud([[0.5]])) == pytest.approx(0.5)
    assert hausdorff_distance(cloud([[-0.5], [0.5]]), cloud([[-0.5]])) == pytest.approx(1.0)


def test_grid_hausdorff_within_one_diagonal():
    a = GridSet.from_points([[0.0]], 6)
    b = GridSet.from_points([[0.5]], 6)
    d = hausdorff_distance(a, b)
    assert abs(d - 0.5) <= hausdorff_slack(a, b)
    assert hausdorff_distance(a, a) == 0.0


def test_mismatched_representations_raise():
    with pytest.raises(RepresentationMismatch):
        hausdorff_distance(GridSet.full(1, 3), GridSet.full(1, 4))
    with pytest.raises(RepresentationMismatch):
        hausdorff_distance(GridSet.full(1, 3), cloud([[0.0]]))
    with pytest.raises(RepresentationMismatch):
        hausdorff_distance(cloud([[0.0]]), cloud([[0.0, 0.0]]))


def test_epsilon_neighborhood_examples():
    a = GridSet.from_points([[0.0]], 4)
    assert epsilon_neighborhood(a, 0.0) == a
    n = epsilon_neighborhood(a, 0.25)
    lo = -1 + n.cells.min() * n.width
    hi = -1 + (n.cells.max() + 1) * n.width
    assert lo <= -0.25 and hi >= 0.25
    assert lo >= -0.25 - 2 * n.width and hi <= 0.25 + 2 * n.width
    assert n.contains_cells(a.cells).all()
    with pytest.raises(DomainError):
        epsilon_neighborhood(a, -0.1)


def random_grid(rng, dim, level, count):
    pts = rng.uniform(-0.7, 0.7, size=(count, dim))
    return GridSet.from_points(pts, level)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_neighborhoods_nest(rng, dim):
    level = {1: 8, 2: 5, 3: 4}[dim]
    a = random_grid(rng, dim, level, 7)
    small = epsilon_neighborhood(a, 1 / 8)
    big = epsilon_neighborhood(a, 1 / 4)
    assert big.contains_cells(small.cells).all()
    assert big.contains_cells(epsilon_neighborhood(small, 1 / 8).cells).all()


def test_diameter_examples():
    assert diameter(cloud([[0.2]])) == 0.0
    assert diameter(cloud([[-1.0], [1.0]])) == pytest.approx(2.0)
    sq = cloud([[0, 0], [0.5, 0], [0, 0.5], [0.5, 0.5]])
    assert diameter(sq) == pytest.approx(math.sqrt(2) * 0.5)
    assert diameter(GridSet.full(1, 5)) == pytest.approx(2.0)
    with pytest.raises(EmptySetError):
        diameter(PointCloud(np.zeros((0, 1)), 1.0))


def test_union_subadditivity_examples(rng):
    parts = [cloud(rng.uniform(-0.5, 0.5, (5, 2))) for _ in range(3)]
    assert union_subadditivity_check(parts, parts) <= 0
    shifted = [cloud(p.points + rng.uniform(-0.01, 0.01, p.points.shape)) for p in parts]
    assert union_subadditivity_check(parts, shifted) <= 1e-12
    other = [cloud(rng.uniform(-0.5, 0.5, (6, 2))) for _ in range(3)]
    assert union_subadditivity_check(parts, other) <= 1e-12


def test_union_subadditivity_on_grids(rng):
    pa = [random_grid(rng, 2, 5, 4) for _ in range(3)]
    pb = [random_grid(rng, 2, 5, 4) for _ in range(3)]
    assert union_subadditivity_check(pa, pb) <= 1e-12


point_lists = st.lists(
    st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7)), min_size=1, max_size=12
)


@settings(max_examples=60, deadline=None)
@given(point_lists, point_lists, point_lists)
def test_metric_axioms(a, b, c):
    A, B, C = cloud(a), cloud(b), cloud(c)
    assert hausdorff_distance(A, B) == hausdorff_distance(B, A)
    assert hausdorff_distance(A, C) <= hausdorff_distance(A, B) + hausdorff_distance(B, C) + 1e-12
    assert hausdorff_distance(A, A) == 0.0


def test_grid_canonical_form():
    g = GridSet.from_cells(1, 3, [[9], [7], [9]])
    assert g.cells.tolist() == [[7], [9]]
    assert g == GridSet.from_cells(1, 3, [[7], [9]])
    with pytest.raises(DomainError):
        GridSet(1, 3, np.array([[16]]))
    with pytest.raises(DomainError):
        GridSet.full(4, 1)


def test_grid_clipped_to_ball():
    g = GridSet.full(2, 3)
    corners = np.abs(g.centers).max(axis=1)
    assert len(g) < 16 * 16
    lows = g.lows
    nearest = np.clip(np.zeros_like(lows), lows, lows + g.width)
    assert (np.linalg.norm(nearest, axis=1) <= 1.0).all()
    assert corners.max() < 1.0


def test_json_round_trips(rng):
    g = random_grid(rng, 2, 4, 5)
    d = json.loads(g.to_json())
    assert d["cells"] == sorted(d["cells"])
    assert GridSet.from_json(g.to_json()) == g
    c = cloud(rng.uniform(-0.5, 0.5, (4, 3)), 0.01)
    assert PointCloud.from_json(c.to_json()) == c


def test_pgm_export():
    g = GridSet.from_cells(2, 1, [[0, 1], [2, 2]], clip=False)
    data = g.to_pgm()
    header, _, body = data.partition(b"\n255\n")
    assert header.startswith(b"P5")
    assert len(body) == 16
    assert body.count(b"\x00") == 2
    with pytest.raises(RepresentationMismatch):
        GridSet.full(1, 2).to_pgm()


def test_ball_net_is_a_net(rng):
    net = ball_net(2, 0.1)
    probe = rng.normal(size=(300, 2))
    probe /= np.linalg.norm(probe, axis=1)[:, None]
    probe *= rng.uniform(0, 1, (300, 1)) ** 0.5
    d = np.linalg.norm(probe[:, None] - net.points[None], axis=-1).min(axis=1)
    assert d.max() <= 0.1
    assert (np.linalg.norm(net.points, axis=1) <= 1 + 1e-12).all()


def test_ball_validation():
    with pytest.raises(DomainError):
        Ball(np.zeros(2), 0.0)
    b = Ball([0.0, 0.0], 0.5)
    assert np.allclose(np.linalg.norm(b.boundary_samples(16), axis=1), 0.5)


def test_kernels_agree_with_fallback(rng):
    from localscale import _accel

    a = rng.normal(size=(400, 2))
    b = rng.normal(size=(300, 2))
    assert _accel.directed_hausdorff(a, b) == pytest.approx(_pure.directed_hausdorff(a, b), abs=0)
    lo = rng.integers(0, 20, size=(50, 2))
    hi = lo + rng.integers(0, 4, size=(50, 2))
    assert np.array_equal(_accel.rasterize_boxes(lo, hi), _pure.rasterize_boxes(lo, hi))
    s = np.sort(rng.uniform(0, 10, 40))
    e = s + rng.uniform(0, 0.5, 40)
    ks, ke = _accel.merge_intervals(s, e)
    ps, pe = _pure.merge_intervals(s, e)
    assert np.array_equal(ks, ps) and np.array_equal(ke, pe)


def test_backend_reported():
    assert BACKEND in ("cython", "python")


def test_kdtree_path_matches_direct(rng):
    from localscale.geometry import directed_distance, KDTREE_THRESHOLD

    a = rng.uniform(-1, 1, (KDTREE_THRESHOLD + 5, 1))
    b = rng.uniform(-1, 1, (200, 1))
    assert directed_distance(a, b) == pytest.approx(_pure.directed_hausdorff(a, b), rel=1e-12)
