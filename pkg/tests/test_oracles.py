from __future__ import annotations

import pytest

from oracles import CASES, run_case


@pytest.mark.parametrize("case", CASES, ids=[c.name for c in CASES])
def test_oracle_matches_library(case):
    ok, detail = run_case(case)
    assert ok, detail
