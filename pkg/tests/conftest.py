from pathlib import Path

import pytest

from patmine.embedding import get_provider
from patmine.knowledge_base import load_kb, seed_catalog

FIXTURES = Path(__file__).parent / "fixtures"
GOLDENS = Path(__file__).parent / "goldens"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def kb_csv() -> Path:
    return FIXTURES / "kb" / "knowledge_base.csv"


@pytest.fixture(scope="session")
def frameworks_dir() -> Path:
    return FIXTURES / "frameworks"


@pytest.fixture(scope="session")
def goldens_dir() -> Path:
    return GOLDENS


@pytest.fixture(scope="session")
def test_provider():
    return get_provider("test")


@pytest.fixture(scope="session")
def fixture_kb(kb_csv):
    return load_kb(kb_csv, seed_catalog())
