import numpy as np
import pytest

from srampuf.fingerprint import Fingerprint, Reading

ACCEPTANCE_LINES: list[str] = []


def make_reading(bits, device_id="dev0", temp=25, run=0, board="SIM", sensor=None):
    fp = bits if isinstance(bits, Fingerprint) else (
        Fingerprint.from_string(bits) if isinstance(bits, str) else Fingerprint(bits)
    )
    return Reading(fp, device_id, board, temp, float(temp if sensor is None else sensor), run)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
