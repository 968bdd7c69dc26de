import warnings

import numpy as np
import pytest
from hypothesis import settings

from heatcontent.geometry import BoundaryJet

settings.register_profile("ci", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("ci")

JET_FIELDS = ("phi0", "phi1", "phi2", "rho0", "rho1", "rho2", "Laa", "LabLab", "LaaLbb",
              "Ricmm", "E", "S", "tau", "grad_pair")


def random_jet(rng, scale=1.0):
    return BoundaryJet(**{f: float(scale * rng.uniform(-1, 1)) for f in JET_FIELDS})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", {}) if mod else {}
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
