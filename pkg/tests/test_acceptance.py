"""Every acceptance criterion at its stated tolerance, one pass/fail line each in the terminal summary."""
import pytest

from thetalift import acceptance

BY_NUMBER = dict(enumerate(acceptance.CRITERIA, start=1))


@pytest.mark.parametrize("number", acceptance.ORDER)
def test_criterion(number, report_criterion):
    result = BY_NUMBER[number]()
    report_criterion(result.line())
    assert result.number == number
    assert result.passed, result.details
