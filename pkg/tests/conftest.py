from __future__ import annotations

import pytest

from ark import Registry, load_program, stdlib_registry


@pytest.fixture(scope="session")
def stdlib() -> Registry:
    return stdlib_registry()


@pytest.fixture
def fresh(stdlib):
    """Copy of the stdlib registry plus an extra source text."""

    def load(text: str = "", base: bool = True) -> Registry:
        reg = stdlib.copy() if base else Registry()
        if text:
            load_program(text, reg)
        return reg

    return load


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
