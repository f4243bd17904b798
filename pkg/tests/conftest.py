import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def fixture_story_text() -> str:
    return (DATA_DIR / "fixture_story.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fixture_story_meta() -> dict:
    return json.loads((DATA_DIR / "fixture_story_meta.json").read_text(encoding="utf-8"))
