import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ctreserve.triangle import Triangle, builtin_dataset, from_rows


@pytest.fixture(scope="session")
def taylor_ashe() -> Triangle:
    return builtin_dataset("taylor_ashe")


@pytest.fixture(scope="session")
def mortgage() -> Triangle:
    return builtin_dataset("mortgage")


def multiplicative(n=6, factor=2.0, first=(100.0, 120.0, 90.0, 150.0, 80.0, 110.0, 70.0, 130.0)):
    rows = []
    for i in range(n):
        rows.append([first[i % len(first)] * factor**j for j in range(n - i)])
    return from_rows(rows, label="multiplicative")


@pytest.fixture
def doubling() -> Triangle:
    return multiplicative()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed at session end."""

    def record(label: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
