import contextlib
import time

import numpy as np
import pytest

_CRITERIA = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def criterion():
    """Record one acceptance criterion as PASS/FAIL for the terminal summary."""

    @contextlib.contextmanager
    def record(name, budget_s=None):
        t0 = time.perf_counter()
        try:
            yield
        except pytest.skip.Exception as exc:
            _CRITERIA.append((name, "SKIP", str(exc)))
            raise
        except BaseException as exc:
            _CRITERIA.append((name, "FAIL", f"{type(exc).__name__}: {exc}".splitlines()[0]))
            raise
        elapsed = time.perf_counter() - t0
        if budget_s is not None and elapsed >= budget_s:
            _CRITERIA.append((name, "FAIL", f"took {elapsed:.2f}s, budget {budget_s}s"))
            pytest.fail(f"{name}: took {elapsed:.2f}s, budget {budget_s}s")
        _CRITERIA.append((name, "PASS", f"{elapsed:.2f}s"))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in _CRITERIA:
        terminalreporter.write_line(f"[{status}] {name} ({detail})")
