import pytest

from bimerton.harness import CASES, case_grid
from bimerton.model import ModelParams, Payoff, PayoffKind, build_grid, validate

CASE_I = CASES["CaseI"].params


@pytest.fixture(scope="session")
def case_i():
    return CASE_I


@pytest.fixture(scope="session")
def derived_i():
    return validate(CASE_I)


@pytest.fixture
def small_grid():
    return build_grid(CASE_I, (90, 90), (1.5, 1.5), 16, 16, 10)


@pytest.fixture(scope="session")
def put_min():
    return Payoff(PayoffKind.PUT_ON_MIN, 100.0)


def symmetric_params(**kw):
    base = dict(sigma_x=0.2, sigma_y=0.2, rho=0.4, r=0.05, lam=1.0, mu_jx=-0.1,
                mu_jy=-0.1, sigma_jx=0.2, sigma_jy=0.2, rho_j=0.3, T=1.0)
    base.update(kw)
    return ModelParams(**base)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
