import numpy as np
import pytest

from twowayrelay.channel import SystemConfig, draw_channels, stream

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def crand(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(rng, n):
    q, r = np.linalg.qr(crand(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def cfg():
    return SystemConfig(n_t=2, n_r=4, n_c=2, p_t1=4.0, p_t2=3.0, p_r1=5.0, p_r2=2.0)


@pytest.fixture
def channel(cfg):
    return draw_channels(cfg, stream(7, 0, "H"), stream(7, 0, "G"))
