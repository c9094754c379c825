import json

import numpy as np
import pytest

from qso.modelfile import example_file

ACCEPTANCE_LINES = []

ZAKHAREVICH = [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]


@pytest.fixture
def example_path():
    return example_file()


@pytest.fixture
def write_model(tmp_path):
    def _write(doc, name="model.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return p

    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
