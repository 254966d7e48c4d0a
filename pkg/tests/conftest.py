import random

import pytest

from amrgec.penman import parse_penman

FIGURE_AMR = """\
# ::snt I don't want to go to school on Sunday.
# ::tok I do n't want to go to school on Sunday .
(w / want-01
    :polarity -
    :ARG0 (i / i)
    :ARG1 (g / go-02
        :ARG0 i
        :ARG4 (s / school)
        :time (d / date-entity
            :weekday (s2 / sunday))))
"""

REENTRANT = "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))"


@pytest.fixture
def rng():
    return random.Random(20230415)


@pytest.fixture
def figure_graph():
    return parse_penman(FIGURE_AMR)


@pytest.fixture
def reentrant():
    return parse_penman(REENTRANT)


# acceptance verdicts, filled in by test_acceptance.py
VERDICTS: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS, key=lambda k: int(k.split()[0])):
            terminalreporter.write_line(VERDICTS[key])
