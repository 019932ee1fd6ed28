import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

C = "0x000000000000000000000000000000000000000c"
A = "0x000000000000000000000000000000000000000a"
S = "0x0000000000000000000000000000000000000005"
X, Y = 1, 2


@pytest.fixture(scope="session")
def figure1_path():
    return Path(str(resources.files("uat20") / "scenarios" / "figure1.scn"))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
