import math

import numpy as np
import pytest

from aperiodic_spectrum.models import ClosedFormModel


def step(lam):
    return ClosedFormModel.step(lam).to_model()


def kp(lam):
    return ClosedFormModel.kronig_penney(lam).to_model()


def free():
    return ClosedFormModel.free().to_model()


PI2 = math.pi ** 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
