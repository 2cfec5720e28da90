import math

import numpy as np
import pytest

from localscale.cover import contraction_constants
from localscale.distortion import D_of_n, Q_of_n
from localscale.errors import DomainError
from localscale.families import (
    DIMENSION_DEFICIT,
    FULL_MEASURE,
    FamilySpec,
    Frame,
    classify_rational,
    dimension_semicontinuity_probe,
    make_cantor,
    make_custom,
    make_g_lambda,
    make_three_branch,
    sweep_values,
)
from localscale.geometry import GridSet
from localscale.ifs import attractor, min_feasible_tol
from localscale.measure import measure_bracket

LN2_LN3 = math.log(2) / math.log(3)


def test_three_branch_range_and_constants():
    for t in np.linspace(0, 0.5, 11):
        F = make_three_branch(t)
        cc = contraction_constants(F, slack=1.0)
        assert cc.k == pytest.approx(math.log(3)) and cc.K == pytest.approx(math.log(3))
        assert Q_of_n(F, 3).Q == [0.0] * 3 and D_of_n(F, 3).D == [0.0] * 3
    with pytest.raises(DomainError):
        make_three_branch(0.6)
    with pytest.raises(DomainError):
        make_three_branch(-0.1)


def test_three_branch_zero_duplicates_map():
    F = make_three_branch(0.0)
    assert np.allclose(F.maps[0].b, F.maps[1].b)


def test_half_is_full_hull():
    F = make_three_branch(0.5)
    A = attractor(F, 1e-3, 12)
    assert F.frame.volume(measure_bracket(A, F).outer) == pytest.approx(0.5)


def test_classify_examples():
    assert classify_rational(1, 2).label == FULL_MEASURE
    assert classify_rational(1, 2).measure == 0.5
    assert classify_rational(1, 4).label == DIMENSION_DEFICIT
    assert classify_rational(1, 3).label == DIMENSION_DEFICIT
    two_four = classify_rational(2, 4)
    assert two_four.label == FULL_MEASURE and (two_four.p, two_four.q) == (1, 2)
    assert str(two_four) == "FULL_MEASURE(1/2)"
    for p, q in ((1, 2), (1, 4), (1, 5), (2, 5), (1, 8), (0, 1)):
        for c in (2, 3, 7):
            assert classify_rational(c * p, c * q).label == classify_rational(p, q).label
    with pytest.raises(DomainError):
        classify_rational(1, 0)
    with pytest.raises(DomainError):
        classify_rational(3, 4)


def test_g_lambda_range():
    F = make_g_lambda(0.25)
    assert len(F) == 3
    with pytest.raises(DomainError, match="1/4"):
        make_g_lambda(0.3)
    with pytest.raises(DomainError):
        make_g_lambda(0.0)


def test_denormalization_round_trip():
    for F in (make_three_branch(0.3), make_g_lambda(0.2), make_cantor()):
        fr = F.frame
        x = np.linspace(fr.lo, fr.hi, 7)
        assert np.allclose(fr.to_natural(fr.to_normalized(x)), x, atol=1e-12)
        assert fr.length(2.0) == pytest.approx(fr.hi - fr.lo, abs=1e-12)
    F = make_g_lambda(0.2)
    natural = [(0.2, 0.0), (0.2, 0.2), (0.2, 0.6)]
    x = np.linspace(0, 0.75, 9)
    for f, (a, c) in zip(F.maps, natural):
        y = F.frame.to_normalized(x)
        assert np.allclose(F.frame.to_natural(f(y[:, None])[:, 0]), a * x + c, atol=1e-12)


def test_custom_family():
    F = make_custom({"pairs": [[0.5, 0.0], [0.25, 0.75]], "frame": [0.0, 1.0]})
    assert len(F) == 2
    spec = {"dim": 1, "maps": [{"kind": "affine", "A": [[0.3]], "b": [0.1]}]}
    assert make_custom(spec).to_dict() == spec


def test_family_spec():
    s = FamilySpec.from_dict({"family": "three_branch", "t": 0.2})
    assert s.parameter == "t" and len(s.build()) == 3
    assert s.with_value(0.4).params["t"] == 0.4
    assert FamilySpec("cantor").build().L == pytest.approx(1 / 3)
    with pytest.raises(DomainError):
        FamilySpec("bogus")


def test_sweep_values():
    assert sweep_values(0.5, 0.05, 21, 0, 0.5).max() == 0.5
    assert len(sweep_values(0.5, 0.05, 21, 0, 0.5)) == 11
    assert sweep_values(0.3, 0.0, 9).tolist() == [0.3]


def test_dimension_probe_at_cantor():
    s = dimension_semicontinuity_probe(FamilySpec("three_branch", {"t": 0.0}), 0.0, 0.05, 11, 5,
                                       baseline=LN2_LN3)
    assert s.passed
    assert min(r["lower"] for r in s.rows) >= LN2_LN3 - 0.05
    assert "t,lower,upper,capacity" in s.to_csv()


def test_dimension_probe_constant_family():
    s = dimension_semicontinuity_probe(FamilySpec("cantor"), 0.0, 0.1, 5, 4)
    assert s.passed and len(s.rows) == 1


def test_dimension_probe_capacity_column():
    s = dimension_semicontinuity_probe(FamilySpec("three_branch", {"t": 0.0}), 0.0, 0.02, 3, 4,
                                       levels=range(3, 10), level=11)
    assert all(r["capacity"] >= LN2_LN3 - 0.05 for r in s.rows)
