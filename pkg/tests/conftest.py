from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ppclone.core import Sort  # noqa: E402
from ppclone.fixtures import affine_algebra, boolean_majority  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture(scope="session")
def z2():
    return affine_algebra(2)


@pytest.fixture(scope="session")
def z3():
    return affine_algebra(3)


@pytest.fixture(scope="session")
def z4():
    return affine_algebra(4)


@pytest.fixture(scope="session")
def maj():
    return boolean_majority()


@pytest.fixture(scope="session")
def s2(z2):
    return Sort.base(z2)


@pytest.fixture(scope="session")
def s3(z3):
    return Sort.base(z3)


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def maj4_subpowers(maj):
    from ppclone.subpowers import enumerate_subpowers

    return enumerate_subpowers(maj, 4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
