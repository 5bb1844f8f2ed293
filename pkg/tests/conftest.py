import numpy as np
import pytest

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e| in the (g, e) basis


def detector_matrices(alpha, mu, gamma=1.0):
    """C_A and C_B on the emitter with the LO mode replaced by its amplitude."""
    eye = np.eye(2, dtype=complex)
    c_a = np.sqrt(1 - mu) * alpha * eye + np.sqrt(mu * gamma) * SIGMA_MINUS
    c_b = np.sqrt(mu) * alpha * eye - np.sqrt((1 - mu) * gamma) * SIGMA_MINUS
    return c_a, c_b


@pytest.fixture
def matrices():
    return detector_matrices


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
