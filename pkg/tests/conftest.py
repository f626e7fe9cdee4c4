import numpy as np
import pytest

from adiabatic_pdf.schedule import ScheduleParams


@pytest.fixture
def rng():
    return np.random.default_rng(20231019)


def random_schedule(rng, p_max=6, total_time=50.0, lo=0.2, hi=2.0):
    p = int(rng.integers(1, p_max + 1))
    return ScheduleParams(tuple(rng.uniform(lo, hi, p)), total_time)


def random_hermitian(rng, scale=1.0):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return scale * 0.5 * (a + a.conj().T)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
