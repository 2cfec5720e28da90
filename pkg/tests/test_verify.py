import pytest

from localscale.errors import DomainError
from localscale.verify import SUITES, run_suite


@pytest.mark.parametrize("name", ["metric", "distortion", "cover", "dimension", "measure", "families"])
def test_suite_passes(name):
    r = run_suite(name, seed=3)
    assert r.passed, [c.to_dict() for c in r.checks if not c.passed]


def test_suite_json_deterministic():
    assert run_suite("metric", 11).to_json() == run_suite("metric", 11).to_json()
    assert run_suite("metric", 11).to_json() != run_suite("metric", 12).to_json()


def test_unknown_suite():
    with pytest.raises(DomainError):
        run_suite("nope")
    assert "contraction" in SUITES
