"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import pytest

from striplab.acceptance import CRITERIA, run_criterion

RESULTS = {}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion-{n:02d}")
def test_criterion(number, acceptance_context, capsys):
    result = run_criterion(number, acceptance_context)
    RESULTS[number] = result
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.summary
