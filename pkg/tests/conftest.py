import functools
import warnings

import numpy as np
import pytest
from hypothesis import settings

from hypcaloron.geometry import PhysicalParams
from hypcaloron.pipeline import RunConfig, run_pipeline
from hypcaloron.sources import SourceData, VortexConfig

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

PARAMS = PhysicalParams(2.0, 2.0)

# configurations used by the flux/action criteria; the double point is listed twice
CONFIGS = {
    "n1": ((1.0, 0.0),),
    "n2": ((1.0, 0.0), (1.0, 1.0)),
    "n3": ((1.0, 0.0), (1.0, 2.0 / 3.0), (1.0, 4.0 / 3.0)),
    "double": ((1.0, 0.5), (1.0, 0.5)),
    "mixed3": ((1.0, 0.0), (1.5, 1.0), (1.5, 1.0)),
}


def vortices(name):
    return VortexConfig(CONFIGS[name], PARAMS.beta)


@functools.lru_cache(maxsize=None)
def solved(name, Nr=512, Nt=128, sensitivity=False):
    """Pipeline result, cached for the whole session."""
    cfg = RunConfig(PARAMS, vortices(name), Nr=Nr, Nt=Nt, sensitivity=sensitivity)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        return run_pipeline(cfg)


@pytest.fixture(scope="session")
def params():
    return PARAMS


@pytest.fixture(scope="session")
def n1_sources():
    return SourceData(vortices("n1"))


@pytest.fixture(scope="session")
def n1_bundle():
    return solved("n1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, ok, detail):
    ACCEPTANCE[number] = (bool(ok), detail)
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
