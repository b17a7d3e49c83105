import math

import pytest

from dppentropy.geometry import Disk
from dppentropy.kernels import KernelSpec

ACCEPTANCE_LINES = []


def disk_of_area(area):
    return Disk(math.sqrt(area / math.pi))


@pytest.fixture
def ginibre():
    return KernelSpec.ginibre()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
