import json

import numpy as np
import pytest

from relinv import checks
from relinv.projective_core import degeneracy
from relinv.reports import PropertyReport, format_kv, format_value, parse_kv
from relinv.sampling import MAX_CONDITION, make_rng, random_config, random_homography


def test_format_value():
    assert format_value(np.bool_(True)) == "true"
    assert format_value(0.1) == "0.1"
    assert format_value([1, 2.5]) == "1,2.5"
    assert format_kv({"a": 1, "b": None}) == "a: 1\n"


def test_report_round_trip():
    report = PropertyReport("x", 3, 7, 1e-12, True, 1e-9, None)
    assert parse_kv(report.to_text()) == {"name": "x", "trials": "3", "seed": "7",
                                          "max_residual": "1e-12", "pass": "true", "tolerance": "1e-09"}
    assert json.loads(report.to_json())["pass"] is True


def test_random_instances_are_conditioned():
    rng = make_rng(90)
    for _ in range(50):
        assert np.linalg.cond(random_homography(rng).m) < MAX_CONDITION
        assert degeneracy(random_config(rng, 6), rel=1e-2) is None


def test_run_property_accounting():
    calls = []

    def trial(rng):
        calls.append(1)
        return (0.0 if len(calls) < 3 else 1.0), f"call {len(calls)}"

    report = checks.run_property("demo", trial, 5, 1, 0.5)
    assert len(calls) == 5 and report.trials == 5
    assert not report.passed and report.counterexample.startswith("call 3")
    with pytest.raises(ValueError):
        checks.run_property("demo", trial, 0, 1, 0.5)


def test_errors_become_infinite_residuals():
    def trial(rng):
        raise ZeroDivisionError("boom")

    report = checks.run_property("demo", trial, 2, 1, 1.0)
    assert report.max_residual == float("inf") and "boom" in report.counterexample


@pytest.mark.parametrize("suite", ["cocycle", "frame", "weight", "extended"])
def test_suites_pass_with_few_trials(suite):
    reports = checks.run_suite(suite, trials=3)
    assert reports and all(r.passed for r in reports)


def test_injected_fault_fails():
    reports = checks.run_suite("cocycle", trials=5, inject_fault=True)
    assert not reports[0].passed and reports[0].counterexample


def test_unknown_suite():
    with pytest.raises(ValueError):
        checks.run_suite("nope")
