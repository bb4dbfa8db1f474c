"""Pytest configuration and fixtures."""
import pytest

from corpus import reset_corpus_cache
from radial_core import GridSpec
from settings import configure_logging


@pytest.fixture(autouse=True)
def reset_state():
    """Reset the corpus cache before each test and the log level after it."""
    reset_corpus_cache()
    yield
    configure_logging()


@pytest.fixture
def coarse_grid():
    """Smaller grid for checks that need only a few digits."""
    return GridSpec(points=2001)
