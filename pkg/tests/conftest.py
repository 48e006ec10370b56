"""Shared fixtures for the test suite."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
import pytest

from src.core.config import get_settings


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch: pytest.MonkeyPatch):
    """Settings are cached per process; tests that touch the environment get a clean copy."""
    monkeypatch.delenv("HEAVYTAIL_CPT_THREADS", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture()
def zero_change() -> Callable[..., np.ndarray]:
    """Noiseless p x n matrix with mean base + delta on columns 1..t0 and base afterwards."""

    def build(
        p: int, n: int, t0: int, delta: np.ndarray, base: Optional[np.ndarray] = None
    ) -> np.ndarray:
        base = np.zeros(p) if base is None else np.asarray(base, dtype=float)
        X = np.repeat(base[:, None], n, axis=1)
        X[:, :t0] += np.asarray(delta, dtype=float)[:, None]
        return X

    return build
