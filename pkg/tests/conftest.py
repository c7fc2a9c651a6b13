import numpy as np
import pytest

from ekdisp import spectral as sp
from ekdisp.model import normalize, preset_model

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def quantum_params():
    return normalize(preset_model("quantum", "power", rho_c=1.0, kappa=1.0, c=2.0, gamma=1.0))


@pytest.fixture(scope="session")
def constant_params():
    return normalize(preset_model("constant", "power", rho_c=1.0, K0=1.0, c=2.0, gamma=1.0))


@pytest.fixture
def grid1d():
    return sp.make_grid(1, 256, 32 * np.pi)


@pytest.fixture
def record_criterion():
    def record(number, label, passed, detail):
        status = "PASS" if passed is True else ("WARN" if passed == "warn" else "FAIL")
        line = f"criterion {number:>2} [{status}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
