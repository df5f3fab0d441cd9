import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from basket_mem.core import PriorConfig, TrialData  # noqa: E402
from basket_mem.ingest import load_vemu_wide  # noqa: E402

VEMU_S = (8, 0, 1, 1, 6, 2)
VEMU_N = (19, 10, 26, 8, 14, 7)


@pytest.fixture(scope="session")
def vemu():
    return load_vemu_wide()


@pytest.fixture(scope="session")
def vemu_prior():
    return PriorConfig.build(6)


def make_data(S, n):
    return TrialData(tuple(f"B{k + 1}" for k in range(len(S))), tuple(S), tuple(n))


@pytest.fixture(scope="session")
def vemu_exact_fit(vemu, vemu_prior):
    from basket_mem.core import AnalysisConfig
    from basket_mem.summaries import fit

    return fit(vemu, vemu_prior, AnalysisConfig(method="exact", p0=0.25))


@pytest.fixture(scope="session")
def vemu_mcmc_fit(vemu, vemu_prior):
    """The default MCMC analysis at p0 = 0.25, shared across modules."""
    from basket_mem.core import AnalysisConfig
    from basket_mem.summaries import fit

    return fit(vemu, vemu_prior, AnalysisConfig(p0=0.25))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
