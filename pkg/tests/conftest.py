import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chainent.chain import ChainConfig  # noqa: E402
from chainent.control import OptimizerConfig, optimize  # noqa: E402
from chainent.simulation import simulate  # noqa: E402


@pytest.fixture(scope="session")
def headline():
    """Optimized protocol for N = 8, omega0 = 1, c in [0, 0.05], squeezing stage to t = 20."""
    cfg = ChainConfig(8)
    opt = OptimizerConfig()
    result = optimize(None, cfg, opt)
    trace = simulate(cfg, result.protocol, opt.sample_dt)
    return cfg, opt, result, trace


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion, then assert it."""

    def check(label, ok, detail):
        _CRITERIA.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        print(_CRITERIA[-1])
        assert ok, f"{label}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
