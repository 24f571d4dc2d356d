from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def good_fixtures() -> list[Path]:
    return sorted((FIXTURES / "good").glob("*.cir"))


@pytest.fixture
def bad_fixtures() -> list[Path]:
    return sorted((FIXTURES / "bad").glob("*.cir"))
