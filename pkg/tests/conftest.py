"""Shared fixtures: the fuzz fleet, golden traces, and the criteria report.

The fleet of 1,000 random dialogues is expensive, so it is played once per
pytest run and shared by every test that needs it.  Acceptance tests record
one line per criterion through the `criterion` fixture; the lines are echoed
in the terminal summary so a pass/fail verdict per criterion is always
visible, even under output capture.
"""

from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

FLEET_SEED = 20260814
FLEET_SIZE = 1000
FLEET_MAX_TURNS = 50
FLEET_MAX_PARTICIPANTS = 6

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def fleet():
    from edg.simulate import play_fleet

    return play_fleet(
        FLEET_SIZE,
        seed=FLEET_SEED,
        max_turns=FLEET_MAX_TURNS,
        max_participants=FLEET_MAX_PARTICIPANTS,
    )


@pytest.fixture(scope="session")
def table4_trace():
    from edg.scripting import load_script, run_script

    return run_script(load_script(FIXTURES / "table4.script.json"))


@pytest.fixture(scope="session")
def table6_trace():
    from edg.scripting import load_script, run_script

    return run_script(load_script(FIXTURES / "table6.script.json"))


@pytest.fixture
def criterion():
    """Record a named acceptance criterion verdict, then assert it."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        _CRITERIA.append((name, ok, detail))
        assert ok, f"{name}: {detail or 'criterion not met'}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, ok, detail in _CRITERIA:
        verdict = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"  [{verdict}] {name}{suffix}")
