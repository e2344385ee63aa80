import numpy as np
import pytest

from drmst.instance import gen_erdos_renyi

ACCEPTANCE_LINES: list[str] = []


def small_instances(count, n_range=(4, 8), p_range=(0.4, 0.9), seed=0):
    """Deterministic stream of small connected instances with their (n, p, seed)."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        p = float(np.round(rng.uniform(*p_range), 1))
        out.append((gen_erdos_renyi(n, p, seed * 100_000 + i), n, p))
    return out


@pytest.fixture
def tiny():
    return gen_erdos_renyi(6, 0.6, 3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
