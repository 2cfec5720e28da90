"""Acceptance criteria 1-9, one pass/fail line each.

Run under pytest or directly with ``python3 tests/test_acceptance.py``.
Each criterion returns a JSON payload; criterion 9 reruns 1-8 and compares
the payloads byte for byte.
"""
import json
import math
import time

import pytest

from localscale.cover import check_osc
from localscale.dimension import bracket_from, falconer_bracket, hdim_bracket, limit_capacity, moran_dimension
from localscale.families import (
    DIMENSION_DEFICIT,
    FamilySpec,
    classify_rational,
    dimension_semicontinuity_probe,
    make_g_lambda,
    make_three_branch,
)
from localscale.ifs import attractor, min_feasible_tol
from localscale.measure import measure_bracket, measure_semicontinuity_probe
from localscale.verify import run_suite

LN2_LN3 = math.log(2) / math.log(3)
LN3_LN5 = math.log(3) / math.log(5)
SEED = 20240601


def _grid(F, level=12):
    return attractor(F, 2 * min_feasible_tol(F, level), level)


def criterion_1():
    F = make_three_branch(0.5)
    br = measure_bracket(_grid(F), F).natural(F.frame)
    return {"inner": br.inner, "outer": br.outer, "width": br.width,
            "pass": br.contains(0.5) and br.width <= 0.02}


def criterion_2():
    F = make_three_branch(0.0)
    est = limit_capacity(_grid(F), range(2, 7), base=3, frame=F.frame)
    br = hdim_bracket(F, 7, slack=1.0)
    again = bracket_from(br.N, br.n, br.k, br.K, br.Q, br.D)
    closed = (math.log(2) / math.log(3), 8 * math.log(2) / (7 * math.log(3)))
    cap_ok = abs(est.slope - LN2_LN3) <= 0.03
    exact = again == (br.lower, br.upper)
    closed_ok = (br.lower, br.upper) == closed
    return {"capacity": est.slope, "lower": br.lower, "upper": br.upper, "N": br.N,
            "ingredients": [br.k, br.K, br.Q, br.D], "closed_form": list(closed),
            "pass": cap_ok and exact and closed_ok}


def criterion_3():
    F = make_g_lambda(0.2)
    est = limit_capacity(_grid(F), range(1, 5), base=5, frame=F.frame)
    osc = check_osc(F, ([-1.0], [1.0]))
    r = math.log(0.2)
    lo, hi = falconer_bracket(len(F), r, r)
    m = moran_dimension([0.2] * 3)
    collapse = max(abs(lo - m), abs(hi - m))
    return {"capacity": est.slope, "osc": osc["certified"], "falconer": [lo, hi], "moran": m,
            "pass": abs(est.slope - LN3_LN5) <= 0.03 and osc["certified"] and collapse <= 1e-10}


def _suite(name):
    r = run_suite(name, SEED)
    return {"suite": r.to_dict(), "pass": r.passed}


def criterion_4():
    return _suite("distortion")


def criterion_5():
    a, b = run_suite("metric", SEED), run_suite("contraction", SEED)
    stab = next(c for c in b.checks if c.name == "attractor_stability")
    return {"metric": a.to_dict(), "contraction": b.to_dict(),
            "pass": a.passed and b.passed and stab.trials >= 20}


def criterion_6():
    return _suite("cover")


def criterion_7():
    m = measure_semicontinuity_probe(FamilySpec("three_branch", {"t": 0.5}), 0.5, 0.05, 21, level=12)
    d = dimension_semicontinuity_probe(FamilySpec("three_branch", {"t": 0.0}), 0.0, 0.05, 21, 7,
                                       slack=1.0, tolerance=0.05, baseline=LN2_LN3)
    return {"measure_csv": m.to_csv(), "dimension_csv": d.to_csv(), "pass": m.passed and d.passed}


def criterion_8():
    # n = 12 is the largest cover level that finishes in seconds (3^13 candidate words)
    br = hdim_bracket(make_three_branch(0.25), 12)
    label = classify_rational(1, 4)
    return {"n": br.n, "lower": br.lower, "upper": br.upper, "label": str(label),
            "pass": br.upper < 1.0 and label.label == DIMENSION_DEFICIT}


CRITERIA = {
    1: ("measure bracket at t = 1/2 contains 1/2", criterion_1, 10.0),
    2: ("Cantor capacity and closed-form bracket at n = 7", criterion_2, 30.0),
    3: ("G_1/5 capacity and OSC collapse to Moran", criterion_3, None),
    4: ("distortion suite", criterion_4, 60.0),
    5: ("metric and contraction suite", criterion_5, None),
    6: ("dynamic covers", criterion_6, None),
    7: ("semi-continuity probes", criterion_7, 300.0),
    8: ("t = 1/4 upper bound below 1", criterion_8, None),
}

_results = {}


def _run(k):
    if k not in _results:
        _, fn, _ = CRITERIA[k]
        t0 = time.perf_counter()
        out = fn()
        _results[k] = (out, time.perf_counter() - t0)
    return _results[k]


def _report(capsys, k, ok, elapsed, note=""):
    title = CRITERIA[k][0] if k in CRITERIA else "determinism of criteria 1-8"
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({title}; {elapsed:.1f} s){note}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def _check(k, capsys=None):
    out, elapsed = _run(k)
    limit = CRITERIA[k][2]
    ok = bool(out["pass"]) and (limit is None or elapsed <= limit)
    _report(capsys, k, ok, elapsed)
    return ok, out, elapsed


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    ok, out, elapsed = _check(k, capsys)
    limit = CRITERIA[k][2]
    assert limit is None or elapsed <= limit, f"runtime {elapsed:.1f} s over {limit} s"
    assert out["pass"], json.dumps(out, sort_keys=True)[:2000]


def _determinism(capsys=None):
    t0 = time.perf_counter()
    diffs = []
    for k, (_, fn, _) in CRITERIA.items():
        first = json.dumps(_run(k)[0], sort_keys=True)
        if json.dumps(fn(), sort_keys=True) != first:
            diffs.append(k)
    ok = not diffs
    _report(capsys, 9, ok, time.perf_counter() - t0, f"; differing: {diffs}" if diffs else "")
    return ok, diffs


def test_criterion_9_determinism(capsys):
    ok, diffs = _determinism(capsys)
    assert ok, f"criteria with differing output: {diffs}"


if __name__ == "__main__":
    results = [_check(k)[0] for k in sorted(CRITERIA)]
    results.append(_determinism()[0])
    raise SystemExit(0 if all(results) else 1)
