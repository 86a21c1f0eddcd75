"""Acceptance criteria, one test per criterion, with a PASS/FAIL line each."""

import pytest

from conftest import ACCEPTANCE_LINES
from lagfree.verification import CRITERIA, run_criterion


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA])
def test_criterion(number):
    result = run_criterion(number)
    line = f"{result.line()}  {result.details}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, result.details
