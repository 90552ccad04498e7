import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from g2filter.operators import build_system_operators
from g2filter.params import ModelParams

settings.register_profile(
    "numerics",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("numerics")


@pytest.fixture(scope="session")
def ops8():
    return build_system_operators(8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return m + m.conj().T


@pytest.fixture(scope="session")
def default_sweep():
    """Full default 60 x 60 grid; shared by the acceptance and invariant tests."""
    from g2filter.sweep import SweepGrid, run_sweep

    grid = SweepGrid()
    return grid, run_sweep(grid, workers=None)


def at(**kw):
    return ModelParams(**kw)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
