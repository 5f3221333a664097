import numpy as np
import pytest
from hypothesis import settings

from depcag import experiments as ex
from depcag.functions import Harmonic, QuasiPeriodicMatrixFunction as QP

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

PI = np.pi


@pytest.fixture(scope="session")
def solved():
    """Solved bundled examples, computed once per session."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = ex.solve(ex.load_example(name))
        return cache[name]

    return get


def counterexample_B():
    """Diagonal coefficient ``diag(-2/pi, 2/pi) + diag(1, -1) sin(2 pi t)``."""
    return QP(np.diag([-2 / PI, 2 / PI]), [Harmonic(np.diag([1.0, -1.0]), 2 * PI)])


def trig_forcing():
    return QP(np.zeros(2), [Harmonic([1, 0], 1.0), Harmonic([0, 1], 1.0, PI / 2)])
