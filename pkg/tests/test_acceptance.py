"""Acceptance criteria 1-8, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also repeated in the
terminal summary) and asserts that all of its checks pass. Runnable on its
own with ``python tests/test_acceptance.py``.
"""

import sys

import pytest

from qjfluor.verify import Matrix, format_table, run_suite

CRITERIA = {
    1: ("pedestal linewidth and runtime", ["fig4"]),
    2: ("height ratio and weight ratio", ["fig4"]),
    3: ("no-jump control", ["control"]),
    4: ("dark-time statistics", ["fig3"]),
    5: ("oracle equivalence", ["oracle"]),
    6: ("bright-only suppression", ["bright-only"]),
    7: ("rate model", ["rate-model"]),
    8: ("property suites", ["properties"]),
}

_suite_cache = {}
REPORT = []


def _checks(number, matrix):
    out = []
    for suite in CRITERIA[number][1]:
        if suite not in _suite_cache:
            _suite_cache[suite] = run_suite(suite, matrix)
        out.extend(c for c in _suite_cache[suite] if c.criterion == number)
    return out


def summary_line(number, checks):
    ok = bool(checks) and all(c.passed for c in checks)
    failed = [c.name for c in checks if not c.passed]
    tail = f"; failed: {', '.join(failed)}" if failed else ""
    return ok, (f"criterion {number}: {'PASS' if ok else 'FAIL'}  {CRITERIA[number][0]} "
                f"({len(checks)} checks{tail})")


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, matrix, capsys):
    checks = _checks(number, matrix)
    ok, line = summary_line(number, checks)
    REPORT.append(line)
    with capsys.disabled():
        print(f"\n{line}\n{format_table(checks)}")
    assert ok, "\n" + format_table(checks)


if __name__ == "__main__":
    m = Matrix(seed=1)
    all_ok = True
    for n in sorted(CRITERIA):
        ok, line = summary_line(n, _checks(n, m))
        all_ok &= ok
        print(line)
    sys.exit(0 if all_ok else 1)
