import numpy as np
import pytest

from merton_cournot.model import ConstantVol, ControlBounds, MarketParams, Preferences, Scenario, validate_market


def make_scenario(theta=(1.0, 1.0), sigma=0.5, delta=(4.0, 1.0), s=0.0, T=5.0, s0=10.0,
                  pi0=(0.6, -1.0), bounds=(-50.0, 50.0), w0=(0.0, 0.0)):
    market = MarketParams(theta[0], theta[1], ConstantVol(sigma), s, T, s0, w0[0], w0[1], pi0[0], pi0[1])
    return validate_market(market, Preferences(*delta), ControlBounds(*bounds))


def deterministic(sc: Scenario) -> Scenario:
    """Same scenario with the noise switched off (skips validation on purpose)."""
    m = sc.market
    market = MarketParams(m.theta_1, m.theta_2, ConstantVol(0.0), m.s, m.T, m.s0, m.w1_0, m.w2_0, m.pi1_0, m.pi2_0)
    return Scenario(market, sc.prefs, sc.bounds)


@pytest.fixture
def base_sc():
    return make_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, title: str, ok: bool, detail: str, seconds: float) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:2d} {title}: {detail} ({seconds:.2f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
