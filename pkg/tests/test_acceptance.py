"""The acceptance gate: every criterion runs at its stated tolerance and
prints one pass/fail line."""

import json

import pytest

from regulab.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("cid,name", [(c, n) for c, n, _ in CRITERIA],
                         ids=[c for c, _, _ in CRITERIA])
def test_criterion(cid, name, capsys):
    result = run_criterion(cid)
    status = "PASS" if result["passed"] else "FAIL"
    with capsys.disabled():
        print(f"\n[{status}] {cid}: {name}")
        if not result["passed"]:
            print(json.dumps(result["details"], indent=2, default=str))
    assert result["passed"], f"{cid} failed: {result['details']}"
