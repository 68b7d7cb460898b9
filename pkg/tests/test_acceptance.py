"""One test per acceptance criterion; each prints a single PASS/FAIL line.

Tolerances and runtime limits live in ``fusedfocus.acceptance`` and are shared
with ``fusedfocus verify``.  Criteria that cannot be met are reported as
failures rather than skipped.
"""
import pytest

from fusedfocus import acceptance


@pytest.mark.parametrize("number", [c[0] for c in acceptance.CRITERIA],
                         ids=[f"{c[0]:02d}-{c[1].replace(' ', '-')}" for c in acceptance.CRITERIA])
def test_criterion(number, acceptance_log):
    res = acceptance.run_criterion(number)
    acceptance_log.append(res.line())
    if number == 10:
        acceptance_log.extend("    " + r.line() for r in acceptance.invariant_suites.last_results)
    print(res.line())
    assert res.passed, res.line()


def test_every_criterion_registered():
    assert [c[0] for c in acceptance.CRITERIA] == list(range(1, 11))
