from __future__ import annotations

import sys
import time
from contextlib import contextmanager
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, str] = {}


class Criterion:
    def __init__(self, number: int, title: str, limit_s: float | None):
        self.number = number
        self.title = title
        self.limit_s = limit_s
        self.failures: list[str] = []
        self.notes: list[str] = []
        self.elapsed = 0.0

    def check(self, ok, message: str) -> bool:
        if not ok:
            self.failures.append(message)
        return bool(ok)

    def note(self, message: str) -> None:
        self.notes.append(message)


@contextmanager
def _criterion(number: int, title: str, limit_s: float | None = None):
    c = Criterion(number, title, limit_s)
    start = time.perf_counter()
    error = None
    try:
        yield c
    except Exception as exc:  # recorded as FAIL, then re-raised
        error = exc
    c.elapsed = time.perf_counter() - start
    if limit_s is not None:
        c.check(c.elapsed < limit_s, f"took {c.elapsed:.2f} s, limit {limit_s} s")
    if error is not None:
        c.failures.append(f"{type(error).__name__}: {error}")
    status = "PASS" if not c.failures else "FAIL"
    detail = "; ".join(c.failures or c.notes)
    line = f"{status}  criterion {number:>2}: {title} ({c.elapsed:.2f} s){' - ' + detail if detail else ''}"
    _CRITERIA[number] = line
    print(line)
    if error is not None:
        raise error
    assert not c.failures, "; ".join(c.failures)


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return Path(str(resources.files("localshare") / "data"))
