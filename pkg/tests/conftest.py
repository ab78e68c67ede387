from fractions import Fraction

import pytest

from carmech import CarMechanism, Cover, SampleSpace, Subset, partition_mechanism

HALF = Fraction(1, 2)


def S(*elements, n=3):
    return Subset.of(elements, n)


def car(n, entries):
    """``car(3, {(1, 2): "1/2", ...})`` -> CarMechanism."""
    return CarMechanism(SampleSpace(n), {Subset.of(k, n): Fraction(v) for k, v in entries.items()})


def part(n, *blocks):
    return partition_mechanism(Cover.of(SampleSpace(n), blocks))


@pytest.fixture
def space3():
    return SampleSpace(3)


@pytest.fixture
def triangle():
    return car(3, {(1, 2): HALF, (2, 3): HALF, (1, 3): HALF})


@pytest.fixture
def triangle_table():
    """The six conditional entries of the triangle mechanism, all 1/2."""
    return {
        (1, S(1, 2)): HALF, (2, S(1, 2)): HALF,
        (2, S(2, 3)): HALF, (3, S(2, 3)): HALF,
        (3, S(1, 3)): HALF, (1, S(1, 3)): HALF,
    }


# Acceptance verdicts, one line per criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
