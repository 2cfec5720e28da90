import json
import math

import numpy as np
import pytest

from localscale.cover import build_dynamic_cover, check_osc, contraction_constants, maximal_disjoint, subsystem
from localscale.dimension import (
    DimensionBracket,
    box_counts,
    bracket_from,
    capacity_equals_hdim_probe,
    falconer_bracket,
    hdim_bracket,
    limit_capacity,
    moran_dimension,
)
from localscale.errors import BracketDegenerateError, DomainError, ResolutionError
from localscale.families import make_cantor, make_g_lambda, make_three_branch, make_tiling
from localscale.geometry import GridSet
from localscale.ifs import attractor, min_feasible_tol

from systems import one_map

LN2_LN3 = math.log(2) / math.log(3)
LN3_LN5 = math.log(3) / math.log(5)


def grid(F, level=12):
    return attractor(F, 2 * min_feasible_tol(F, level), level)


def test_box_counts_examples():
    full = GridSet.full(1, 10)
    assert box_counts(full, range(0, 8)).counts == [2 ** (j + 1) for j in range(8)]
    point = GridSet.from_points([[0.3]], 10)
    assert box_counts(point, range(0, 11)).counts == [1] * 11
    A = grid(make_cantor())
    assert box_counts(A, range(1, 7), base=3, frame=make_cantor().frame).counts == [2**j for j in range(1, 7)]
    with pytest.raises(ResolutionError):
        box_counts(full, [11])


def test_doubling_bound():
    for F in (make_cantor(), make_three_branch(0.3), make_g_lambda(0.2)):
        c = box_counts(grid(F), range(0, 12)).counts
        assert all(c[i + 1] <= 2 * c[i] for i in range(len(c) - 1))
        assert all(c[i + 1] >= c[i] for i in range(len(c) - 1))


def test_limit_capacity_examples():
    assert limit_capacity(GridSet.full(1, 12), range(2, 11)).slope == pytest.approx(1.0, abs=0.01)
    est = limit_capacity(grid(make_cantor()), range(2, 7), base=3, frame=make_cantor().frame)
    assert est.slope == pytest.approx(LN2_LN3, abs=0.03)
    G = make_g_lambda(0.2)
    assert limit_capacity(grid(G), range(1, 5), base=5, frame=G.frame).slope == pytest.approx(LN3_LN5, abs=0.03)
    flat = limit_capacity(GridSet.from_points([[0.3]], 10), range(2, 9))
    assert flat.flat and flat.slope == 0.0
    with pytest.raises(ResolutionError):
        limit_capacity(GridSet.full(1, 6), range(4, 7))


def test_capacity_csv():
    text = limit_capacity(GridSet.full(1, 8), range(1, 6)).to_csv()
    assert text.startswith("#") and "scale,count" in text


def test_falconer_examples():
    assert falconer_bracket(2, -math.log(3), -math.log(3)) == pytest.approx((LN2_LN3, LN2_LN3))
    assert falconer_bracket(3, -math.log(5), -math.log(5)) == pytest.approx((LN3_LN5, LN3_LN5))
    assert falconer_bracket(1, -1.0, -0.5) == (0.0, 0.0)
    with pytest.raises(DomainError):
        falconer_bracket(2, -0.5, -1.0)
    with pytest.raises(DomainError):
        falconer_bracket(2, -1.0, 0.1)


def test_moran_examples():
    assert moran_dimension([1 / 3, 1 / 3]) == pytest.approx(LN2_LN3, abs=1e-12)
    assert moran_dimension([0.2] * 3) == pytest.approx(LN3_LN5, abs=1e-12)
    assert moran_dimension([0.4]) == 0.0
    assert moran_dimension([0.5, 0.25, 0.25]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        moran_dimension([1.2])


def test_moran_matches_falconer_with_osc():
    for F, r in ((make_cantor(), 1 / 3), (make_g_lambda(0.2), 0.2)):
        assert check_osc(F, ([-1.0], [1.0]))["certified"]
        lo, hi = falconer_bracket(len(F), math.log(r), math.log(r))
        m = moran_dimension([r] * len(F))
        assert abs(lo - m) <= 1e-10 and abs(hi - m) <= 1e-10


def test_hdim_bracket_cantor_closed_form():
    F = make_three_branch(0.0)
    b3 = hdim_bracket(F, 3, slack=1.0)
    assert b3.N == 16
    assert b3.lower == pytest.approx(LN2_LN3, rel=1e-14)
    assert b3.upper == pytest.approx(4 * math.log(2) / (3 * math.log(3)), rel=1e-14)
    b7 = hdim_bracket(F, 7, slack=1.0)
    assert b7.upper == pytest.approx(8 * math.log(2) / (7 * math.log(3)), rel=1e-14)
    assert b7.upper < b3.upper
    again = bracket_from(b7.N, b7.n, b7.k, b7.K, b7.Q, b7.D)
    assert again == (b7.lower, b7.upper)


def test_hdim_bracket_single_map_and_degenerate():
    b = hdim_bracket(one_map(0.5), 4)
    assert (b.lower, b.upper) == (0.0, 0.0)
    with pytest.raises(BracketDegenerateError):
        bracket_from(4, 1, 0.1, 0.2, 0.05, 0.06)
    d = json.loads(b.to_json())
    assert d["ingredients"]["k"] == b.k


def test_capacity_probe_examples():
    assert capacity_equals_hdim_probe(make_cantor(), 7, range(2, 7), base=3)["pass"]
    assert capacity_equals_hdim_probe(make_tiling(), 10, range(2, 11), reading="open")["pass"]
    assert capacity_equals_hdim_probe(make_g_lambda(0.2), 6, range(1, 5), base=5)["pass"]


def test_subsystem_capacity_not_above_parent():
    F = make_three_branch(0.3)
    cover = build_dynamic_cover(F, 4)
    G = subsystem(F, maximal_disjoint(F, cover).words)
    cf = limit_capacity(grid(F), range(3, 10)).slope
    cg = limit_capacity(grid(G), range(3, 10)).slope
    assert cg <= cf + 0.03
