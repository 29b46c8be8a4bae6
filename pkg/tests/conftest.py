import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from upsu.field import DEFAULT_PRIME, PrimeField  # noqa: E402

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SMALL_PRIMES = (97, 101, 7681)


@pytest.fixture(scope="session")
def F():
    return PrimeField(DEFAULT_PRIME)


@pytest.fixture(scope="session")
def F101():
    return PrimeField(101)


# acceptance verdicts, printed once at the end of the run
VERDICTS = []


def record_verdict(label, ok, detail):
    line = f"{label}: {'PASS' if ok is True else ('FAIL' if ok is False else ok)}  {detail}"
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
