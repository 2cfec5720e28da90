import json
import math

import numpy as np
import pytest

from localscale.errors import DomainError, PreconditionError
from localscale.families import FamilySpec, make_cantor, make_three_branch, make_tiling
from localscale.geometry import GridSet, epsilon_neighborhood
from localscale.ifs import AffineMap, System, attractor, min_feasible_tol
from localscale.measure import (
    MeasureBracket,
    boundary_capacity,
    boundary_cells,
    measure_bracket,
    measure_semicontinuity_probe,
    modulus_check,
    modulus_ladder,
)

LN2_LN3 = math.log(2) / math.log(3)


def grid(F, level=12):
    return attractor(F, 2 * min_feasible_tol(F, level), level)


def test_half_interval_bracket():
    F = make_three_branch(0.5)
    br = measure_bracket(grid(F), F).natural(F.frame)
    assert br.contains(0.5) and br.width <= 0.02


def test_cantor_outer_decays():
    F = make_cantor()
    outs = []
    for level in (6, 8, 10, 12):
        br = measure_bracket(grid(F, level), F)
        assert br.inner == 0.0
        outs.append(br.outer)
    assert all(b < a for a, b in zip(outs, outs[1:]))
    assert outs[-1] <= 2 * (2 / 3) ** 6


def test_tiling_inner_is_everything():
    F = make_tiling()
    br = measure_bracket(grid(F, 10), F)
    assert br.inner == pytest.approx(2.0) and br.outer == pytest.approx(2.0)


def test_tiling_2d_inner_positive():
    maps = tuple(AffineMap(np.eye(2) * 0.5, [sx * 0.25, sy * 0.25]) for sx in (-1, 1) for sy in (-1, 1))
    F = System(maps)
    br = measure_bracket(grid(F, 6), F)
    assert br.inner == pytest.approx(1.0) and br.contains(1.0) and br.outer <= 1.07


def test_bracket_monotone_in_level():
    F = make_three_branch(0.3)
    prev = None
    for level in (8, 9, 10):
        br = measure_bracket(grid(F, level), F)
        if prev is not None:
            assert br.outer <= prev.outer + 1e-12 and br.inner >= prev.inner - 1e-12
        prev = br


def test_bracket_validation_and_json():
    with pytest.raises(DomainError):
        MeasureBracket(0.3, 0.2, 4)
    d = json.loads(MeasureBracket(0.1, 0.2, 4).to_json())
    assert d == {"inner": 0.1, "outer": 0.2, "level": 4}


def test_boundary_capacity_examples():
    assert boundary_capacity(GridSet.full(1, 12), range(2, 10)).slope == pytest.approx(0.0, abs=1e-12)
    F = make_cantor()
    assert boundary_capacity(grid(F), range(2, 7), 3, F.frame).slope == pytest.approx(LN2_LN3, abs=0.03)
    H = make_three_branch(0.5)
    assert len(boundary_cells(grid(H))) == 2
    assert boundary_capacity(grid(H), range(2, 10)).slope == pytest.approx(0.0, abs=1e-12)


def test_modulus_examples():
    H = make_three_branch(0.5)
    L0 = grid(H)
    assert modulus_check(L0, L0, 0.01, 0.1, 1e-6)["pass"]
    L1 = grid(make_three_branch(0.49))
    ladder = modulus_ladder(L0, L1, 0.1, 10.0, [0.02 * 2.0**-i for i in range(4)] + [0.05, 0.1])
    assert ladder and all(r["pass"] for r in ladder)
    with pytest.raises(PreconditionError):
        modulus_check(L0, L1, 1e-5, 0.1, 10.0)
    N = epsilon_neighborhood(L0, 0.01)
    r = modulus_check(L0, N, 0.01 + N.width, 0.1, 10.0)
    assert r["lhs"] - L0.volume <= 2 * (0.01 + N.width)


def test_measure_probe_half():
    s = measure_semicontinuity_probe(FamilySpec("three_branch", {"t": 0.5}), 0.5, 0.05, 21)
    assert s.passed and s.stable
    outs = [r["mu_outer"] for r in s.rows]
    assert outs[-1] == pytest.approx(0.5) and min(outs) < 0.45
    assert "t,d0,mu_inner,mu_outer,hd_to_star" in s.to_csv()


def test_measure_probe_radius_zero():
    s = measure_semicontinuity_probe(FamilySpec("three_branch", {"t": 0.3}), 0.3, 0.0, 5, level=10)
    assert s.passed and len(s.rows) == 1


def test_quarter_outer_decays_with_level():
    F = make_three_branch(0.25)
    outs = [measure_bracket(grid(F, lv), F).outer for lv in (6, 9, 12)]
    assert outs[0] > outs[1] > outs[2]
