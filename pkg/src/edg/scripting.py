"""Scripted dialogue runs, trace verification, and transcript export.

A script names participants, a formula corpus, a session config and the
turns to submit; targets are symbolic ("T1.verdict") and resolve to
locution ids in submission order.  Runs build their trace purely from
post-turn snapshots, so a local in-process run and a run through a served
instance produce byte-identical trace files.

An expectation file pins per-turn commitment and agreement deltas plus the
final agreement store; known, documented divergences (extra formulas a
strict reading of the update rules produces) must be listed by id and are
reported, not silently absorbed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .lang import (
    Corpus,
    FormulaSyntaxError,
    in_conflict,
    parse_corpus,
    parse_formula,
)
from .locutions import LABELS, LocutionKind
from .session import SessionStore, config_from_wire, move_from_wire

MANAGEMENT_KINDS = ("prompt", "end", "pass")
WH_KINDS = ("wh-explain", "wh-justify", "wh-clarify")


class ScriptError(Exception):
    """SCRIPT_PARSE: the script or expectation file is malformed."""


class RejectedAt(Exception):
    def __init__(self, label: str, violations: list[dict]):
        self.label = label
        self.violations = violations
        detail = "; ".join(f"{v['code']}: {v['message']}" for v in violations)
        super().__init__(f"rejected at {label}: {detail}")


@dataclass
class Script:
    participants: list[tuple[str, str]]
    corpus: Corpus
    corpus_text: str
    config: dict
    turns: list[dict]
    path: Path | None = None


def load_script(path: str | Path) -> Script:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScriptError(f"cannot read script: {exc}") from None

    participants = []
    for entry in raw.get("participants", []):
        try:
            participants.append((entry["name"], entry.get("role", "participant")))
        except (TypeError, KeyError):
            raise ScriptError(f"bad participant entry {entry!r}") from None
    if len(participants) < 2:
        raise ScriptError("script needs at least two participants")

    corpus_ref = raw.get("corpus")
    if not corpus_ref:
        raise ScriptError("script must name a corpus file")
    corpus_path = (path.parent / corpus_ref).resolve()
    try:
        corpus_text = corpus_path.read_text(encoding="utf-8")
        corpus = parse_corpus(corpus_text)
    except (OSError, FormulaSyntaxError) as exc:
        raise ScriptError(f"cannot load corpus {corpus_ref}: {exc}") from None

    config = dict(raw.get("config", {}))
    config.setdefault("min_participants", len(participants))
    config["corpus"] = corpus_text
    groups = []
    for group in (config.get("conflict_policy") or {}).get("exclusion_groups", []):
        texts = set()
        for ident in group:
            try:
                texts.update(f.render() for f in corpus.formulas(ident))
            except KeyError:
                raise ScriptError(f"exclusion group names unknown id {ident!r}") from None
        groups.append(sorted(texts))
    if groups:
        config["conflict_policy"] = {
            "mode": config["conflict_policy"].get("mode", "negation-only"),
            "exclusion_groups": groups,
        }

    turns = raw.get("turns")
    if not isinstance(turns, list) or not turns:
        raise ScriptError("script has no turns")
    for turn in turns:
        if not isinstance(turn, dict) or "speaker" not in turn or "moves" not in turn:
            raise ScriptError(f"bad turn entry {turn!r}")

    return Script(
        participants=participants,
        corpus=corpus,
        corpus_text=corpus_text,
        config=config,
        turns=turns,
        path=path,
    )


class LocalDriver:
    """In-process counterpart of RemoteStore for script runs."""

    def __init__(self, store: SessionStore | None = None):
        self.store = store or SessionStore()

    def create(self, config: dict) -> str:
        return self.store.create(config)

    def join(self, sid: str, display_name: str, role: str = "participant") -> str:
        return self.store.join(sid, display_name, role)

    def submit_turn_wire(self, sid: str, speaker: str, wire_moves: list[dict]):
        moves = [move_from_wire(raw) for raw in wire_moves]
        accepted, violations = self.store.submit_turn(sid, speaker, moves)
        return accepted, [
            {"code": v.code, "message": v.message, "move_index": v.move_index}
            for v in violations
        ]

    def snapshot(self, sid: str) -> dict:
        return self.store.snapshot(sid)

    def legal_replies(self, sid: str, target: int) -> dict:
        return self.store.legal_replies(sid, target)


def _expand_ids(corpus: Corpus, idents: list) -> list[str]:
    texts: set[str] = set()
    for ident in idents:
        texts.update(f.render() for f in corpus.formulas(ident))
    return sorted(texts)


def _resolve_target(ref, assigned: dict) -> int | None:
    if ref is None or isinstance(ref, int):
        return ref
    if isinstance(ref, str):
        if ref not in assigned:
            raise ScriptError(f"unresolved target reference {ref!r}")
        return assigned[ref]
    raise ScriptError(f"bad target reference {ref!r}")


def _compile_moves(corpus: Corpus, turn: dict, label: str, assigned: dict) -> list[dict]:
    wire_moves = []
    for raw in turn["moves"]:
        kind = raw.get("kind")
        if kind is None:
            raise ScriptError(f"{label}: move without kind")
        try:
            content = _expand_ids(corpus, raw.get("content", []))
        except KeyError as exc:
            raise ScriptError(f"{label}: unknown formula id {exc}") from None
        wire_moves.append(
            {
                "kind": kind,
                "content": content,
                "target": _resolve_target(raw.get("target"), assigned),
                "prompt_targets": sorted(
                    _resolve_target(ref, assigned)
                    for ref in raw.get("prompt_targets", [])
                ),
            }
        )
    return wire_moves


def compile_turns(script: Script) -> list[dict]:
    """Wire-format turns: corpus ids expanded, symbolic targets resolved."""
    assigned: dict[str, int] = {}
    next_id = 1
    compiled = []
    for index, turn in enumerate(script.turns):
        label = turn.get("label") or f"T{index + 1}"
        moves = _compile_moves(script.corpus, turn, label, assigned)
        for offset, raw in enumerate(turn["moves"]):
            assigned.setdefault(f"{label}.{raw['kind']}", next_id + offset)
        next_id += len(moves)
        compiled.append({"label": label, "speaker": turn["speaker"], "moves": moves})
    return compiled


def run_script(script: Script, driver=None) -> dict:
    """Submit every turn; halts with RejectedAt on the first refusal."""
    driver = driver or LocalDriver()
    sid = driver.create(script.config)
    for name, role in script.participants:
        driver.join(sid, name, role)
    snapshot = driver.snapshot(sid)
    if snapshot["stage"] == "lobby":
        raise ScriptError("session did not start; check roles and min_participants")

    policy = config_from_wire(script.config).conflict_policy
    assigned: dict[str, int] = {}
    next_id = 1
    previous = snapshot
    trace_turns = []

    for index, turn in enumerate(script.turns):
        label = turn.get("label") or f"T{index + 1}"
        wire_moves = _compile_moves(script.corpus, turn, label, assigned)
        accepted, violations = driver.submit_turn_wire(sid, turn["speaker"], wire_moves)
        if not accepted:
            raise RejectedAt(label, violations)
        for offset, raw in enumerate(turn["moves"]):
            assigned.setdefault(f"{label}.{raw['kind']}", next_id + offset)
        next_id += len(wire_moves)

        snapshot = driver.snapshot(sid)
        trace_turns.append(
            _trace_turn(label, turn["speaker"], wire_moves, previous, snapshot, policy)
        )
        previous = snapshot

    return {
        "participants": [entry["name"] for entry in snapshot["participants"]],
        "config": script.config,
        "corpus": {
            ident: sorted(f.render() for f in script.corpus.formulas(ident))
            for ident in script.corpus.ids
        },
        "turns": trace_turns,
        "final": {
            "closed": snapshot["closed"],
            "stage": snapshot["stage"],
            "as": snapshot["agreements"],
            "consented": snapshot["consented"],
            "unresolved_challenges": sorted(
                {record["formula"] for record in snapshot["unresolved_challenges"]}
            ),
        },
    }


def _trace_turn(label, speaker, wire_moves, before, after, policy) -> dict:
    cs_before = {name: set(texts) for name, texts in before["commitments"].items()}
    cs_after = {name: set(texts) for name, texts in after["commitments"].items()}
    as_before = set(before["agreements"])
    as_after = set(after["agreements"])

    warnings = []
    if any(move["kind"] == "end" for move in wire_moves):
        # advisory: ending while your own commitments clash with the record
        agreement = [parse_formula(text) for text in sorted(as_after)]
        for text in sorted(cs_after[speaker]):
            formula = parse_formula(text)
            for agreed in agreement:
                if in_conflict(formula, agreed, policy):
                    warnings.append(
                        f"end while {text} conflicts with agreed {agreed.render()}"
                    )
    return {
        "label": label,
        "speaker": speaker,
        "moves": wire_moves,
        "stage_after": after["stage"],
        "cs_delta": {
            name: {
                "added": sorted(cs_after[name] - cs_before[name]),
                "removed": sorted(cs_before[name] - cs_after[name]),
            }
            for name in cs_after
        },
        "as_delta": {
            "added": sorted(as_after - as_before),
            "removed": sorted(as_before - as_after),
        },
        "cs_after": {name: sorted(texts) for name, texts in cs_after.items()},
        "as_after": sorted(as_after),
        "end_conflict_warnings": warnings,
    }


def dump_trace(trace: dict) -> str:
    return json.dumps(trace, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# -- verification -------------------------------------------------------------


@dataclass
class Report:
    ok: bool = True
    lines: list[str] = field(default_factory=list)
    noted: list[str] = field(default_factory=list)

    def fail(self, line: str) -> None:
        self.ok = False
        self.lines.append("FAIL " + line)

    def note(self, line: str) -> None:
        self.lines.append(line)


def _trace_expand(trace_corpus: dict, idents: list) -> set[str]:
    texts: set[str] = set()
    for ident in idents:
        if ident.startswith("!"):
            inner = trace_corpus.get(ident[1:])
            if inner is None or len(inner) != 1:
                raise ScriptError(f"cannot negate {ident[1:]!r} in expectation")
            texts.add(f"!({inner[0]})")
        elif ident in trace_corpus:
            texts.update(trace_corpus[ident])
        else:
            texts.add(ident)  # literal formula text
    return texts


def verify_trace(trace: dict, expect: dict) -> Report:
    report = Report()
    corpus = trace.get("corpus", {})
    allow = set(expect.get("allow", []))
    deviations = expect.get("deviations", {})
    unknown = allow - set(deviations)
    if unknown:
        raise ScriptError(f"allowed deviations not documented: {sorted(unknown)}")

    expected_turns = expect.get("turns", [])
    actual_turns = trace.get("turns", [])
    if [t.get("label") for t in expected_turns] != [t["label"] for t in actual_turns]:
        report.fail(
            f"turn labels differ: expected {[t.get('label') for t in expected_turns]}, "
            f"got {[t['label'] for t in actual_turns]}"
        )
        return report

    # per-turn deviation allowances, keyed by label
    cs_extra: dict[str, dict[str, set[str]]] = {}
    as_extra: dict[str, set[str]] = {}
    final_extra: set[str] = set()
    for ident, spec in deviations.items():
        if ident not in allow:
            continue
        label = spec.get("turn")
        for name, idents in spec.get("cs_extra", {}).items():
            cs_extra.setdefault(label, {}).setdefault(name, set()).update(
                _trace_expand(corpus, idents)
            )
        extra = _trace_expand(corpus, spec.get("as_extra", []))
        if extra:
            as_extra.setdefault(label, set()).update(extra)
            final_extra.update(extra)

    fired: set[str] = set()
    for expected, actual in zip(expected_turns, actual_turns):
        label = actual["label"]
        turn_ok = True
        turn_fired: set[str] = set()
        for name, delta in actual["cs_delta"].items():
            want_add = _trace_expand(corpus, expected.get("cs_add", {}).get(name, []))
            want_rem = _trace_expand(corpus, expected.get("cs_remove", {}).get(name, []))
            got_add, got_rem = set(delta["added"]), set(delta["removed"])
            extras = cs_extra.get(label, {}).get(name, set())
            if got_add - want_add and got_add - want_add <= extras:
                want_add = want_add | extras
                turn_fired.update(
                    ident
                    for ident, spec in deviations.items()
                    if ident in allow
                    and spec.get("turn") == label
                    and name in spec.get("cs_extra", {})
                )
            if got_add != want_add or got_rem != want_rem:
                report.fail(
                    f"{label}: CS({name}) delta mismatch: "
                    f"+{sorted(got_add)} -{sorted(got_rem)}, "
                    f"expected +{sorted(want_add)} -{sorted(want_rem)}"
                )
                turn_ok = False
        want_add = _trace_expand(corpus, expected.get("as_add", []))
        want_rem = _trace_expand(corpus, expected.get("as_remove", []))
        got_add = set(actual["as_delta"]["added"])
        got_rem = set(actual["as_delta"]["removed"])
        extras = as_extra.get(label, set())
        if got_add - want_add and got_add - want_add <= extras:
            want_add = want_add | extras
            turn_fired.update(
                ident
                for ident, spec in deviations.items()
                if ident in allow and spec.get("turn") == label and spec.get("as_extra")
            )
        if got_add != want_add or got_rem != want_rem:
            report.fail(
                f"{label}: AS delta mismatch: +{sorted(got_add)} -{sorted(got_rem)}, "
                f"expected +{sorted(want_add)} -{sorted(want_rem)}"
            )
            turn_ok = False
        if turn_ok:
            suffix = f" (deviation {', '.join(sorted(turn_fired))})" if turn_fired else ""
            report.note(f"ok {label}{suffix}")
            fired.update(turn_fired)
        for warning in actual.get("end_conflict_warnings", []):
            report.note(f"warn {label}: {warning}")
    report.noted = sorted(fired)

    final = trace.get("final", {})
    if "final_as" in expect:
        want = _trace_expand(corpus, expect["final_as"]) | final_extra
        got = set(final.get("as", []))
        if got != want:
            report.fail(
                f"final AS mismatch: unexpected {sorted(got - want)}, "
                f"missing {sorted(want - got)}"
            )
        else:
            report.note("ok final AS")
    if expect.get("closed", True) and not final.get("closed"):
        report.fail("dialogue did not close")
    return report


def load_expectation(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScriptError(f"cannot read expectation: {exc}") from None


def load_trace(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScriptError(f"cannot read trace: {exc}") from None


# -- transcript ---------------------------------------------------------------

_LABEL_TEXT = {kind.value: LABELS[kind] for kind in LocutionKind}


def _natural_key(ident: str):
    return [int(part) if part.isdigit() else part for part in re.split(r"(\d+)", ident)]


def _render_content(texts: list[str], corpus: dict) -> str:
    rule_id_of = {}
    for ident, formulas in corpus.items():
        for formula in formulas:
            if "->" in formula:
                rule_id_of[formula] = ident
                rule_id_of[f"!({formula})"] = "!" + ident
    atoms = sorted(t for t in texts if t not in rule_id_of and not t.startswith("!("))
    atoms += sorted(t for t in texts if t.startswith("!(") and t not in rule_id_of)
    rules = sorted(
        {rule_id_of[t] for t in texts if t in rule_id_of}, key=_natural_key
    )
    return ", ".join(atoms + rules)


def render_transcript(trace: dict, style: str = "plain") -> str:
    if style not in ("plain", "markdown"):
        raise ScriptError(f"unknown transcript style {style!r}")
    corpus = trace.get("corpus", {})
    out: list[str] = []
    for turn in trace.get("turns", []):
        if style == "markdown":
            out.append(f"### {turn['label']} — {turn['speaker']}")
        for move in turn["moves"]:
            kind = move["kind"]
            if kind == "pass":
                continue
            phrase = _LABEL_TEXT[kind]
            if move.get("content"):
                phrase += " — " + _render_content(move["content"], corpus)
            elif move.get("prompt_targets"):
                phrase += " — " + ", ".join(f"#{t}" for t in move["prompt_targets"])
            if kind in WH_KINDS:
                phrase += "?"
            line = f"{turn['speaker']}: {phrase}"
            out.append(f"- **{turn['speaker']}**: {phrase}" if style == "markdown" else line)
        if style == "markdown":
            out.append("")
    return "\n".join(out).rstrip("\n") + "\n" if out else ""
