import math

import pytest

from gridspec.devices import DroopParams
from gridspec.network import LineParams
from gridspec.sysid import ProbeTemplate
from gridspec.testbench import DeviceUnderTest, TestbenchConfig

W0 = 2 * math.pi * 50

# one "PASS/FAIL" line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail=""):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {title}" + (f" [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


@pytest.fixture
def line5():
    """SCR 5 line with R/X = 0.1."""
    return LineParams.from_scr(5.0, 0.1 * W0, 1.0, W0)


@pytest.fixture
def droop_bench(line5):
    return TestbenchConfig(line5, DeviceUnderTest(DroopParams(0.05, 0.1)), 0.5)


@pytest.fixture
def probe_template():
    return ProbeTemplate(A_V=0.01, A_omega=1e-3, V_star=1.0, omega0=W0, dt=1e-4,
                         settle_periods=10, measure_periods=4, min_settle_time=60.0)
