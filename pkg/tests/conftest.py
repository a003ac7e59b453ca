"""Shared fixtures and the acceptance-criteria reporting hook."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

# (criterion, "PASS" | "FAIL") pairs appended by tests/test_acceptance.py.
ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def make_texture(height: int, width: int, seed: int, blur: float = 2.0) -> np.ndarray:
    """Smooth random field quantized to uint8; deterministic per seed."""
    rng = np.random.default_rng(seed)
    base = gaussian_filter(rng.random((height, width)), blur)
    base = base + 0.35 * gaussian_filter(rng.random((height, width)), blur * 3.0)
    lo, hi = base.min(), base.max()
    return np.clip(np.rint((base - lo) / (hi - lo) * 255), 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def texture_image() -> np.ndarray:
    return make_texture(60, 70, seed=31)


@pytest.fixture(scope="session")
def texture_patches(texture_image) -> list[np.ndarray]:
    """A spread of 16x16 windows from the session texture."""
    rng = np.random.default_rng(7)
    out = []
    for _ in range(24):
        x = int(rng.integers(0, texture_image.shape[0] - 16))
        y = int(rng.integers(0, texture_image.shape[1] - 16))
        out.append(texture_image[x : x + 16, y : y + 16])
    return out


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[acceptance] {name}: {verdict}")
