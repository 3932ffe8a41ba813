from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def golden_input() -> Path:
    return DATA_DIR / "golden_input"


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return DATA_DIR / "golden"
