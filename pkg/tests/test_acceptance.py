"""Acceptance gate: every numbered check at its stated tolerance.

Each test prints one pass/fail line (visible with -s, and in the failure
report otherwise). Two checks are known to fail and are left failing on
purpose: the 8-point model-vs-simulation grid (check 5) and the velocity
leg of the trend scan (check 6). Their printed details carry the measured
distances; the module docstring of uavcsma.acceptance explains the
structural reasons.
"""

import pytest

from uavcsma import format_result, run_check
from uavcsma.acceptance import CHECK_IDS


@pytest.mark.parametrize("check_id", CHECK_IDS, ids=lambda i: f"check{i}")
def test_acceptance_check(check_id):
    result = run_check(check_id)
    line = format_result(result)
    print(line)
    assert result.passed, line
