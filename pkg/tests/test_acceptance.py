"""The fifteen acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; run with ``pytest tests/test_acceptance.py``.
"""
import pytest

from edgex.acceptance import CRITERIA, run_criterion

SEED = 0


@pytest.mark.parametrize("number,name", [(c[0], c[1]) for c in CRITERIA],
                         ids=[f"{c[0]:02d}-{c[1]}" for c in CRITERIA])
def test_criterion(number, name, capsys):
    verdict = run_criterion(number, SEED)
    mark = "PASS" if verdict.passed else "FAIL"
    line = (f"[{mark}] criterion {number:>2} {name}: statistic={verdict.statistic!r} "
            f"threshold={verdict.threshold!r} ({verdict.details['seconds']}s)")
    with capsys.disabled():
        print("\n" + line)
    assert verdict.passed, line
