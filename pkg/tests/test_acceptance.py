"""Acceptance checks, one test per headline requirement.

Each test funnels its verdict through the `criterion` fixture, so the pytest
terminal summary always ends with an explicit pass/fail line per requirement.
The fuzz fleet fixture (1,000 random dialogues) is shared across the
politeness, termination, multilateral and replay checks.
"""

import copy
import json
import threading
import time

import uvicorn

from edg.locutions import DISCHARGING_REPLIES, LocutionKind, legal_replies
from edg.remote import RemoteStore
from edg.scripting import (
    LocalDriver,
    dump_trace,
    load_expectation,
    load_script,
    run_script,
    verify_trace,
)
from edg.service import create_app
from edg.session import Replayer, SessionStore, build_snapshot, replay_events
from edg.simulate import FleetStats

from conftest import FIXTURES, FLEET_SIZE

CORE_AGREEMENT_IDS = ["h1", "h2", "h3", "h4", "h5", "h6", "r1", "r2", "d3"]


def expand(trace: dict, idents: list[str]) -> set[str]:
    texts: set[str] = set()
    for ident in idents:
        texts.update(trace["corpus"][ident])
    return texts


def timed_run(script_name: str):
    script = load_script(FIXTURES / script_name)
    start = time.perf_counter()
    trace = run_script(script)
    return trace, time.perf_counter() - start


def test_clinic_dialogue_replay(criterion):
    trace, elapsed = timed_run("table4.script.json")
    report = verify_trace(trace, load_expectation(FIXTURES / "table4.expect.json"))
    final_as = set(trace["final"]["as"])
    problems = []
    if len(trace["turns"]) != 19:
        problems.append(f"{len(trace['turns'])} turns accepted")
    if not report.ok:
        problems.extend(line for line in report.lines if line.startswith("FAIL"))
    if report.noted != ["CLOSURE_RESIDUALS", "T16_F4"]:
        problems.append(f"deviations noted: {report.noted}")
    missing = expand(trace, CORE_AGREEMENT_IDS) - final_as
    if missing:
        problems.append(f"final agreement lacks {sorted(missing)}")
    if expand(trace, ["d1"]) & final_as:
        problems.append("withdrawn diagnosis survived into the agreement")
    if elapsed >= 1.0:
        problems.append(f"took {elapsed:.2f}s")
    criterion(
        "clinic-dialogue-replay",
        not problems,
        "; ".join(problems) or f"19 turns, 2 noted deviations, {elapsed * 1000:.0f}ms",
    )


def test_branch_dialogue_replay(criterion):
    trace, elapsed = timed_run("table6.script.json")
    report = verify_trace(trace, load_expectation(FIXTURES / "table6.expect.json"))
    problems = []
    if len(trace["turns"]) != 16:
        problems.append(f"{len(trace['turns'])} turns accepted")
    if not report.ok:
        problems.extend(line for line in report.lines if line.startswith("FAIL"))
    if report.noted != ["CLOSURE_RESIDUALS"]:
        problems.append(f"deviations noted: {report.noted}")
    branch = next(t for t in trace["turns"] if t["label"] == "T14'")
    if not expand(trace, ["f7", "f11"]) <= set(branch["as_delta"]["added"]):
        problems.append(f"T14' agreement delta is {branch['as_delta']['added']}")
    missing = expand(trace, CORE_AGREEMENT_IDS) - set(trace["final"]["as"])
    if missing:
        problems.append(f"final agreement lacks {sorted(missing)}")
    if elapsed >= 1.0:
        problems.append(f"took {elapsed:.2f}s")
    criterion(
        "branch-dialogue-replay",
        not problems,
        "; ".join(problems) or f"16 turns, branch agreed f7+f11, {elapsed * 1000:.0f}ms",
    )


def test_reply_matrix_oracle(criterion):
    fixture = json.loads(
        (FIXTURES / "table3_replies.json").read_text(encoding="utf-8")
    )
    mismatches = []
    pairs = 0
    for asked in LocutionKind:
        transcribed = set(fixture[asked.value])
        computed = legal_replies(asked)
        for reply in LocutionKind:
            pairs += 1
            if (reply.value in transcribed) != (reply in computed):
                mismatches.append(f"{asked.value} -> {reply.value}")
    criterion(
        "reply-matrix-oracle",
        pairs == 256 and not mismatches,
        f"{pairs} pairs, {len(mismatches)} mismatches"
        + (f": {mismatches[:4]}" if mismatches else ""),
    )


WH_KINDS = frozenset(
    (LocutionKind.WH_EXPLAIN, LocutionKind.WH_JUSTIFY, LocutionKind.WH_CLARIFY)
)


def scan_politeness(session) -> list[str]:
    """Re-derive obligations from the raw history and flag any accepted move
    (other than pass) by a debtor that does not discharge one of their open
    requests."""
    by_id = {loc.id: loc for loc in session.state.history}
    owed: dict[str, set[int]] = {}
    offences = []
    for loc in session.state.history:
        if loc.kind is LocutionKind.PASS:
            continue
        mine = owed.get(loc.speaker, set())
        request = by_id.get(loc.target) if loc.target else None
        discharges = (
            loc.target in mine
            and request is not None
            and loc.kind in DISCHARGING_REPLIES.get(request.kind, frozenset())
        )
        if mine and not discharges:
            offences.append(f"{session.id}: #{loc.id} {loc.kind.value} by {loc.speaker}")
        if discharges:
            mine.discard(loc.target)
        if loc.kind in WH_KINDS and request is not None:
            owed.setdefault(request.speaker, set()).add(loc.id)
    return offences


def test_politeness_enforcement(criterion, fleet):
    sessions, stats = fleet
    offences = [line for session in sessions for line in scan_politeness(session)]
    problems = []
    if stats.sessions != FLEET_SIZE:
        problems.append(f"played {stats.sessions} dialogues")
    if stats.politeness_injections < 1000:
        problems.append(f"only {stats.politeness_injections} injected violations")
    if stats.politeness_blocked != stats.politeness_injections:
        problems.append(
            f"{stats.politeness_injections - stats.politeness_blocked} injections slipped through"
        )
    if stats.politeness_wrong_code:
        problems.append(f"wrong refusal codes: {stats.politeness_wrong_code[:3]}")
    if offences:
        problems.append(f"{len(offences)} impolite accepted moves: {offences[:3]}")
    criterion(
        "politeness-enforcement",
        not problems,
        "; ".join(problems)
        or (
            f"{stats.sessions} dialogues clean, "
            f"{stats.politeness_injections}/{stats.politeness_injections} injections blocked"
        ),
    )


def test_termination_behaviour(criterion, fleet):
    _, stats = fleet
    problems = []
    if stats.closing_probes < 1000:
        problems.append(f"only {stats.closing_probes} closing probes")
    problems.extend(f"close failed: {line}" for line in stats.closing_failures[:3])
    if stats.reopen_probes < 1000:
        problems.append(f"only {stats.reopen_probes} reopen probes")
    problems.extend(f"reopen failed: {line}" for line in stats.reopen_failures[:3])

    # the worked dialogue's own wind-down: two consents, then a prompt
    script = load_script(FIXTURES / "table4.script.json")
    consensual = copy.deepcopy(script)
    consensual.turns = consensual.turns[:11]
    wound_down = run_script(consensual)["final"]
    if wound_down["stage"] != "termination":
        problems.append(f"after second consent stage is {wound_down['stage']}")
    if sorted(wound_down["consented"]) != ["β", "γ"]:
        problems.append(f"consents recorded: {wound_down['consented']}")
    reopened = copy.deepcopy(script)
    reopened.turns = reopened.turns[:12]
    resumed = run_script(reopened)["final"]
    if resumed["stage"] != "progress":
        problems.append(f"prompt left stage {resumed['stage']}")
    if resumed["consented"]:
        problems.append(f"prompt left consents {resumed['consented']}")
    criterion(
        "termination-behaviour",
        not problems,
        "; ".join(problems)
        or (
            f"{stats.closing_probes} closing + {stats.reopen_probes} reopen probes clean, "
            "worked wind-down reverts on prompt"
        ),
    )


def multilateral_gaps(trace: dict) -> list[str]:
    gaps = []
    for turn in trace["turns"][:-1]:  # the last turn folds in the closure merge
        stores = list(turn["cs_after"].values())
        for text in turn["as_after"]:
            holders = sum(1 for texts in stores if text in texts)
            if holders < 2:
                gaps.append(f"{turn['label']}: {text} held by {holders}")
    return gaps


def test_multilateral_agreement(criterion, fleet, table4_trace, table6_trace):
    _, stats = fleet
    problems = []
    expected_checks = stats.turns_accepted - stats.closed_sessions
    if stats.multilateral_checks != expected_checks:
        problems.append(
            f"{stats.multilateral_checks} checks for {expected_checks} open turns"
        )
    if stats.multilateral_violations:
        problems.append(f"violations: {stats.multilateral_violations[:3]}")
    gaps = multilateral_gaps(table4_trace) + multilateral_gaps(table6_trace)
    if gaps:
        problems.append(f"worked dialogues: {gaps[:3]}")
    criterion(
        "multilateral-agreement",
        not problems,
        "; ".join(problems)
        or f"{stats.multilateral_checks} per-turn checks, every agreement held by 2+",
    )


class CheckingDriver(LocalDriver):
    """After every operation, rebuild the session from its event log so far
    and compare against the live snapshot.  Each rebuild is a replay of a
    strict prefix of the eventual log, so a scripted run through this driver
    checks every externally visible truncation point."""

    def __init__(self, store: SessionStore):
        super().__init__(store)
        self.sid = None
        self.boundaries = 0
        self.mismatches: list[str] = []

    def _audit(self) -> None:
        live = self.store.snapshot(self.sid)
        wire = [event.to_wire() for event in self.store.events_since(self.sid)]
        self.boundaries += 1
        if build_snapshot(replay_events(wire)) != live:
            self.mismatches.append(f"replay diverged after seq {wire[-1]['seq']}")

    def create(self, config):
        self.sid = super().create(config)
        self._audit()
        return self.sid

    def join(self, sid, display_name, role="participant"):
        name = super().join(sid, display_name, role)
        self._audit()
        return name

    def submit_turn_wire(self, sid, speaker, wire_moves):
        result = super().submit_turn_wire(sid, speaker, wire_moves)
        self._audit()
        return result


def test_replay_determinism(criterion, fleet):
    _, stats = fleet
    problems = []
    if stats.replay_boundaries < stats.turns_accepted:
        problems.append(f"shadow covered only {stats.replay_boundaries} boundaries")
    if stats.replay_mismatches:
        problems.append(f"shadow mismatches: {stats.replay_mismatches[:3]}")

    driver = CheckingDriver(SessionStore())
    run_script(load_script(FIXTURES / "table4.script.json"), driver)
    if driver.mismatches:
        problems.append("; ".join(driver.mismatches[:3]))

    # between-operation boundaries too: an incremental fold must agree with
    # a fresh replay of every single-event truncation
    events = [event.to_wire() for event in driver.store.events_since(driver.sid)]
    if events[-1]["kind"] != "Closed":
        problems.append(f"log ends with {events[-1]['kind']}")
    mirror = Replayer()
    for cut, event in enumerate(events, start=1):
        incremental = build_snapshot(mirror.feed(event))
        truncated = build_snapshot(replay_events(events[:cut]))
        if incremental != truncated:
            problems.append(f"cut after seq {event['seq']}: fold and replay differ")
            break
        if truncated["last_seq"] != event["seq"]:
            problems.append(f"replay of {cut} events reports seq {truncated['last_seq']}")
            break
    if not build_snapshot(replay_events(events))["closed"]:
        problems.append("full replay is not closed")
    criterion(
        "replay-determinism",
        not problems,
        "; ".join(problems)
        or (
            f"{stats.replay_boundaries} fleet boundaries + "
            f"{driver.boundaries} live audits + {len(events)} truncations"
        ),
    )


def test_local_remote_equivalence(criterion, tmp_path):
    local = dump_trace(run_script(load_script(FIXTURES / "table4.script.json")))

    app = create_app(SessionStore(tmp_path / "logs"))
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started and time.time() < deadline:
        time.sleep(0.02)
    assert server.started, "gateway did not come up"
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        remote = RemoteStore(f"http://127.0.0.1:{port}")
        try:
            served = dump_trace(
                run_script(load_script(FIXTURES / "table4.script.json"), remote)
            )
        finally:
            remote.close()
    finally:
        server.should_exit = True
        thread.join(timeout=10)

    criterion(
        "local-remote-equivalence",
        served == local,
        "byte-identical traces"
        if served == local
        else f"traces differ ({len(local)} vs {len(served)} bytes)",
    )


def test_fleet_exercised_every_locution(fleet):
    _, stats = fleet
    assert isinstance(stats, FleetStats)
    assert sorted(stats.kind_counts) == sorted(k.value for k in LocutionKind)
    assert stats.moves_accepted > stats.turns_accepted
