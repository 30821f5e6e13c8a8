import random

import pytest

from bootperc.lattice import Configuration, GridShape


@pytest.fixture
def rng():
    return random.Random(20240607)


def random_config(rng, shape: GridShape, p: float) -> Configuration:
    return Configuration.from_indices(shape, [i for i in range(shape.n_cells) if rng.random() < p])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
