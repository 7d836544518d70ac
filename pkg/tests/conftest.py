import numpy as np
import pytest

from shocklab import builtin_model, compute_profile, shock_from_strength
from shocklab.kernel import build_kernel

# filled by test_acceptance, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sym2():
    return builtin_model("SYM2")


@pytest.fixture(scope="session")
def ns():
    return builtin_model("isentropic-NS")


@pytest.fixture(scope="session")
def sym2_shock(sym2):
    return shock_from_strength(sym2, np.zeros(2), 2, 0.1)


@pytest.fixture(scope="session")
def coarse_profile(sym2, sym2_shock):
    """Benchmark shock on a coarse grid, cheap enough for unit tests."""
    return compute_profile(sym2, sym2_shock, {"M": 801})


@pytest.fixture(scope="session")
def coarse_kernel(sym2, coarse_profile):
    return build_kernel(sym2, coarse_profile)
