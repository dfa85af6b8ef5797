import numpy as np
import pytest

from u1proc.programs import THETA_GRID
from u1proc.statevec import StateVector, random_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def data_states(rng):
    """Basis states, |+>, and a handful of random qubits."""
    fixed = [
        StateVector(1, [1, 0]),
        StateVector(1, [0, 1]),
        StateVector(1, np.array([1, 1]) / np.sqrt(2)),
    ]
    return fixed + [random_state(1, rng) for _ in range(5)]


@pytest.fixture(params=THETA_GRID, ids=lambda t: f"theta={t:.3f}")
def theta(request):
    return request.param


_acceptance_lines = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    _acceptance_lines.append((number, f"criterion {number:>2} {status}  {title}  ({report.duration:.2f}s)"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_acceptance_lines):
        terminalreporter.write_line(line)
