"""Pytest configuration and shared fixtures."""

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


@pytest.fixture(autouse=True)
def _fresh_settings():
    """Settings are cached per process; tests that patch the environment need a clean cache."""
    from tabulog.config import get_settings

    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
