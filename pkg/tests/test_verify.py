import json
import math

import pytest

from xifunc import verify
from xifunc.errors import ParameterError


def test_report_pass_fail_and_json_is_strict():
    rep = verify.Report("demo", 1e-8)
    rep.add({"i": 0}, 1e-9)
    assert rep.passed
    rep.add({"i": 1}, math.inf, note="boom")
    rep.add({"i": 2}, 1e-12, converged=False)
    d = rep.to_dict()
    assert not d["passed"] and not d["converged"]
    assert [f["params"]["i"] for f in d["failures"]] == [1, 2]
    assert d["failures"][0]["residual"] is None
    json.dumps(d, allow_nan=False)
    assert d["schema_version"] == verify.SCHEMA_VERSION and d["tolerance"] == 1e-8


def test_unknown_suite():
    with pytest.raises(ParameterError):
        verify.run_suite("nope")


@pytest.mark.parametrize("name", ["lemma1", "s-recurrence", "whipple", "rank2-ddr"])
def test_fast_suites_pass(name):
    rep = verify.run_suite(name)
    assert rep.passed, rep.to_dict()["failures"][:3]


def test_whipple_injected_case_lists_parameters():
    rep = verify.run_suite("whipple", inject_unbalanced=True)
    assert not rep.passed
    (bad,) = rep.to_dict()["failures"]
    assert "not balanced" in bad["note"] and bad["params"]["C"] == pytest.approx(9.501)


def test_contiguous_draws_are_seeded():
    a = verify.contiguous_draws(5, 10)
    assert a == verify.contiguous_draws(5, 10)
    assert a != verify.contiguous_draws(6, 10)
    assert all(-0.9 <= d[-1] < 0 for d in a)


def test_calibration_report_rank2():
    d = verify.run_suite("calibration", rank=2).to_dict()
    assert d["passed"]
    assert d["extra"]["constant"] == pytest.approx(1.0, rel=1e-12)
    assert d["extra"]["spread"] < 1e-6
