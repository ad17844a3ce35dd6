"""
Shared pytest fixtures for all tests.
"""

import pytest
from loguru import logger

from config.settings import get_settings

# ============================================================
# Environment Fixtures
# ============================================================


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Settings built from a clean environment, outputs under tmp_path."""
    for name in ("ENVIRONMENT", "LOG_LEVEL", "MECP_MAX_WORKERS", "MECP_TRACE_ENABLED"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("MECP_OUTPUT_DIR", str(tmp_path / "results"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def quiet_logs():
    """Keep simulator logging off the test output; the CLI may re-add sinks."""
    logger.remove()
    yield
    logger.remove()


# ============================================================
# Protocol Fixtures
# ============================================================


@pytest.fixture
def reference_p_min_values() -> list[float]:
    """p_min settings whose iteration bounds are checked end to end."""
    return [1 / 16, 1 / 256, 1 / 1024]
