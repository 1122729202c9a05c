import sys
from pathlib import Path

import pytest

from tuqa.io import read_tsv
from tuqa.jefferson import tokenize_transcript

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))


def load_fixture(name: str):
    return tokenize_transcript(read_tsv(FIXTURES / name).transcript)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def cooking():
    return load_fixture("cooking.tsv")


@pytest.fixture
def gelato():
    return load_fixture("gelato.tsv")


@pytest.fixture
def bangla():
    return load_fixture("bangla.tsv")


# acceptance criteria register their outcome here; printed after the run
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        name, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {name}")
