import numpy as np
import pytest

from ldgpoly.geometry import make_domain, triangulate
from ldgpoly.seeds import conformal_map


@pytest.fixture(scope="session")
def hex_mesh_coarse():
    return triangulate(make_domain("regular", K=6), 1.0 / 8)


@pytest.fixture(scope="session")
def square_mesh_coarse():
    return triangulate(make_domain("regular", K=4), 1.0 / 8)


@pytest.fixture(scope="session")
def hex_map():
    return conformal_map(6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# --- acceptance reporting -----------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one acceptance line and returns ``ok``."""

    def record(n, ok, detail=""):
        _ACCEPTANCE[n] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
