import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def dynamodb_source() -> str:
    return (FIXTURES / "dynamodb.js").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def dynamodb_annotated_source() -> str:
    return (FIXTURES / "dynamodb_annotated.ts").read_text(encoding="utf-8")
