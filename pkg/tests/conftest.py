import numpy as np
import pytest

from hemihelix import BISTRIP_CONSTANTS, TOY_CONSTANTS, CardanPath
from hemihelix.bifurcation import random_smooth_fields


@pytest.fixture
def toy():
    return TOY_CONSTANTS


@pytest.fixture
def bistrip():
    return BISTRIP_CONSTANTS


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_path(rng, n_elems, length, amp=0.3):
    x = random_smooth_fields(rng, n_elems, length)
    x *= amp / np.abs(x).max()
    return CardanPath.from_interior(x, length)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("tests.test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
