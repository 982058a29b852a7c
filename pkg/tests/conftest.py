from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dyna_analyze import corpus_path, parse_analysis_spec, parse_program  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"acceptance {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def load(name: str):
    return parse_program(corpus_path(name).read_text())


def load_spec(name: str):
    return parse_analysis_spec(corpus_path(name).read_text())


@pytest.fixture
def cky():
    return load("cky"), load_spec("cky.dtype")


@pytest.fixture
def path_program():
    return load("path"), load_spec("path.dtype")
