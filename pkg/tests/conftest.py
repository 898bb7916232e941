import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from euclid_mcs.swsh import SpectralCoeffs, SpinField

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_field(s, L, grid, rng):
    """Band-limited field with Gaussian random coefficients up to j = L."""
    c = SpectralCoeffs.zeros(s, L)
    c.data[:] = (rng.normal(size=c.data.shape) + 1j * rng.normal(size=c.data.shape)) * c.valid_mask()
    return SpinField.from_coeffs(c, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per acceptance criterion for the run summary."""
    def record(line: str) -> None:
        _ACCEPTANCE.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda t: int(t.split()[0][2:])):
            terminalreporter.write_line(line)
