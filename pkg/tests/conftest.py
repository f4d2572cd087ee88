import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import numpy as np
import pytest

from fca import backend


def pytest_addoption(parser):
    parser.addoption("--backend", default=None, choices=["auto", "numba", "numpy"],
                     help="force a kernel backend for the whole test run")


@pytest.fixture(autouse=True, scope="session")
def _configure_backend(request):
    choice = request.config.getoption("--backend")
    if choice:
        backend.set_backend(choice)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
