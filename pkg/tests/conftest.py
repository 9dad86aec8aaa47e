import numpy as np
import pytest

from dfdreg.grid import Grid
from dfdreg.heat import HeatOperator, MeyerWavelet, build_band_dfd, build_wvd, meyer_frame

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE = {}


def record(num: int, ok: bool, detail: str):
    ACCEPTANCE[num] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(1024, 8.0)


@pytest.fixture(scope="session")
def meyer_small(small_grid):
    return meyer_frame(small_grid, MeyerWavelet(), (0, 3))


@pytest.fixture(scope="session")
def wvd_small(small_grid):
    return build_wvd(HeatOperator(0.5, 1.0, small_grid), MeyerWavelet(), (0, 3))


@pytest.fixture(scope="session")
def band_small():
    return build_band_dfd(HeatOperator(1.0, 1.0, Grid(512, 16.0)), MeyerWavelet(), (0, 1), 40)


@pytest.fixture(scope="session")
def wvd_full():
    return build_wvd(HeatOperator(0.5, 1.0, Grid(4096, 32.0)), MeyerWavelet(), (0, 5))


@pytest.fixture(scope="session")
def band_full():
    return build_band_dfd(HeatOperator(1.0, 1.0, Grid(4096, 32.0)), MeyerWavelet(), (0, 1), 40)
