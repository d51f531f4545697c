import math

import pytest

from execrisk.params import ModelParams, phi0_from_p0

Y = 1e6
KAPPA = 2.5e-6
GAMMA = 2.5e-7


def desk_params(p0=0.1, lam=1000 * KAPPA, **kw) -> ModelParams:
    """The one-day desk case: 1e6 shares, unit horizon, zero drift and correlation."""
    base = dict(
        initial_shares=Y,
        horizon=1.0,
        initial_price=50.0,
        drift=0.0,
        permanent_impact=GAMMA,
        temporary_impact=KAPPA,
        terminal_penalty=lam,
        market_vol=0.945,
        exec_risk_strategy=phi0_from_p0(p0, Y, 1.0),
        exec_risk_price=0.945,
        correlation=0.0,
    )
    base.update(kw)
    return ModelParams(**base)


@pytest.fixture
def easy():
    return desk_params(0.1)


@pytest.fixture
def difficult():
    return desk_params(0.3)


@pytest.fixture
def fuel():
    return desk_params(0.3, lam=math.inf)


def quiet(p: ModelParams) -> ModelParams:
    """Same constants with every noise source switched off."""
    return p.replace(market_vol=0.0, exec_risk_strategy=0.0, exec_risk_price=0.0)


# One summary line per acceptance criterion, filled in by test_acceptance.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
