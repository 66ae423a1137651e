import warnings

import numpy as np
import pytest

from circle_response import ResponseContext, preset


@pytest.fixture(scope="session")
def doubling():
    return preset("doubling")


@pytest.fixture(scope="session")
def sticky():
    return preset("sticky2x")


@pytest.fixture(scope="session")
def gapmap():
    return preset("gapmap12")


@pytest.fixture(scope="session")
def gapmap_smooth():
    return preset("gapmap12-smooth")


@pytest.fixture(scope="session")
def sticky_ctx(sticky):
    return ResponseContext.build(sticky, 512)


@pytest.fixture(scope="session")
def gap_ctx(gapmap_smooth):
    return ResponseContext.build(gapmap_smooth, 512, eigen_target=0.7)


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def random_real(rng, N, decay=0.0):
    """Random real-valued coefficient vector, optionally decaying like |n|^-decay."""
    from circle_response import FourierVector
    from circle_response.fourier import frequencies

    n = frequencies(N)
    z = (rng.standard_normal(N) + 1j * rng.standard_normal(N)) / (1.0 + np.abs(n)) ** decay
    return FourierVector(z).real_part()


def band_limited(rng, N, K):
    """Random real trigonometric polynomial of degree K on N modes."""
    from circle_response import FourierVector

    return FourierVector.from_trig(N, rng.standard_normal(), rng.standard_normal(K), rng.standard_normal(K))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
