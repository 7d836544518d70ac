"""Acceptance criteria 1-10 on the benchmark (SYM2 2-shock, epsilon 0.1, M 4001, T 200).

Each criterion prints one PASS/FAIL line; the lines are repeated in the
terminal summary.  Expensive runs are shared through one suite instance.
"""
import json

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from shocklab.verify import CRITERIA, AcceptanceSuite


@pytest.fixture(scope="module")
def suite():
    return AcceptanceSuite()


def _fmt(measured: dict) -> str:
    return json.dumps(measured, default=float, sort_keys=True)[:400]


@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(suite, cid):
    res = getattr(suite, CRITERIA[cid])()
    line = f"{res.line()} | {res.tolerance} | {_fmt(res.measured)}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, line


def test_projection_and_fit_shift_agree(suite):
    r = suite.nonlinear
    dp, dfit = r.deltas["projection"].delta, r.deltas["fit"].delta
    diff = float(np.max(np.abs(dp - dfit)))
    bound = 0.2 * float(np.max(np.abs(dfit)))
    print(f"shift agreement: sup|d_proj - d_fit| = {diff:.3e}, bound {bound:.3e}")
    assert diff <= bound
