"""Shared instance generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from stabaudit.data import Dataset


def heavy_or_normal(rng, size):
    """Mixed draws: normal, Student-t with 2 dof, or Laplace, chosen per call."""
    kind = rng.integers(3)
    if kind == 0:
        return rng.standard_normal(size)
    if kind == 1:
        return rng.standard_t(2, size)
    return rng.laplace(size=size)


def random_regression(rng, n, d, target=None, signal=0.5) -> Dataset:
    X = rng.standard_normal((n, d))
    y = X @ (signal * rng.standard_normal(d)) + heavy_or_normal(rng, n)
    t = int(rng.integers(d)) if target is None else target
    return Dataset.from_arrays(X, y, t)


def random_binary(rng, n, effect=None) -> Dataset:
    """Treatment column plus intercept, both groups nonempty."""
    t = np.zeros(n)
    n1 = int(rng.integers(1, n))
    t[rng.permutation(n)[:n1]] = 1.0
    eff = rng.normal(0.5, 1.0) if effect is None else effect
    y = eff * t + heavy_or_normal(rng, n)
    return Dataset.from_arrays(t[:, None], y, 0, ["t"], intercept=True)


def random_did(rng, N):
    before = rng.standard_normal(N)
    T = int(rng.integers(1, N))
    treated = np.zeros(N, dtype=bool)
    treated[rng.permutation(N)[:T]] = True
    after = before + rng.normal(0.3, 1.0) * treated + heavy_or_normal(rng, N)
    return before, after, treated


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


#: Acceptance outcomes, filled by ``tests/test_acceptance.py`` and printed at the end of the run.
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def record_criterion(number: int, ok: bool | None, detail: str) -> None:
    """Store a criterion outcome; ``ok=None`` marks it skipped."""
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE[number] = (status, detail)
    print(f"criterion {number}: {status} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
