"""Regenerate fixtures/faults/: one mutated script per violation code.

Each fault script is the table4 script cut at some prefix with one bad turn
appended (or a config/shape mutation), chosen so that exactly one code
fires.  The index file records, for every script, the expected code, where
it should trip, and whether it surfaces as a turn rejection, a session
error, or a parse error.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
FAULTS = FIXTURES / "faults"


def load_base() -> dict:
    return json.loads((FIXTURES / "table4.script.json").read_text(encoding="utf-8"))


def prefix(base: dict, turns: int) -> dict:
    script = copy.deepcopy(base)
    script["turns"] = script["turns"][:turns]
    return script


def turn(label: str, speaker: str, moves: list[dict]) -> dict:
    return {"label": label, "speaker": speaker, "moves": moves + [{"kind": "pass"}]}


def build() -> dict:
    base = load_base()
    index: dict[str, dict] = {}

    def emit(code: str, script: dict, kind: str = "turn", at: str | None = None):
        name = code.lower() + ".script.json"
        script["corpus"] = "../table2.edg"
        (FAULTS / name).write_text(
            json.dumps(script, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        index[code] = {"script": name, "kind": kind, "at": at}

    # content move while termination is pending
    s = prefix(base, 11)
    s["turns"].append(turn("TX", "γ", [
        {"kind": "verdict", "content": ["d3"], "target": "T1.verdict"}]))
    emit("STAGE", s, at="TX")

    s = prefix(base, 1)
    s["turns"].append(turn("TX", "β", [{"kind": "verdict", "content": ["d2"]}]))
    emit("TARGET_REQUIRED", s, at="TX")

    s = prefix(base, 9)
    s["turns"].append(turn("TX", "γ", [{"kind": "end", "target": "T8.advise"}]))
    emit("TARGET_NOT_NULL", s, at="TX")

    s = prefix(base, 1)
    s["turns"].append(turn("TX", "β", [
        {"kind": "wh-justify", "content": ["d1"], "target": 999}]))
    emit("TARGET_UNKNOWN", s, at="TX")

    # assert against advice needs the optional matrix extension
    s = prefix(base, 12)
    s["turns"].append(turn("TX", "γ", [
        {"kind": "assert", "content": ["f7", "f11"], "target": "T8.advise"}]))
    emit("TABLE3_REPLY", s, at="TX")

    s = prefix(base, 1)
    s["turns"].append(turn("TX", "β", [
        {"kind": "verdict", "content": [], "target": "T1.verdict"}]))
    emit("CONTENT_EMPTY", s, at="TX")

    s = prefix(base, 9)
    s["turns"].append(turn("TX", "γ", [{"kind": "end", "content": ["e1"]}]))
    emit("CONTENT_FORBIDDEN", s, at="TX")

    s = prefix(base, 1)
    s["turns"].append(turn("TX", "β", [
        {"kind": "verdict", "content": ["h1"], "target": "T1.verdict"}]))
    emit("CONTENT_CATEGORY", s, at="TX")

    # wh content must come from the challenged locution
    s = prefix(base, 9)
    s["turns"].append(turn("TX", "γ", [
        {"kind": "wh-justify", "content": ["d3"], "target": "T1.verdict"}]))
    emit("CONTENT_SUBSET", s, at="TX")

    s = prefix(base, 9)
    s["turns"].append(turn("TX", "γ", [
        {"kind": "assert", "content": ["f3"], "target": "T9.assert"}]))
    emit("CONTENT_DISTINCT", s, at="TX")

    s = prefix(base, 9)
    s["turns"].append(turn("TX", "γ", [
        {"kind": "wh-clarify", "content": ["h1"], "target": "T8.advise"}]))
    emit("RELATEDNESS", s, at="TX")

    # supplemental explanation must come from another participant
    s = prefix(base, 14)
    s["turns"].append(turn("TX", "α", [
        {"kind": "explain", "content": ["f4"], "target": "T14.explain"}]))
    emit("THIRD_PARTY_REPLY", s, at="TX")

    s = prefix(base, 7)
    s["turns"].append(turn("TX", "α", [
        {"kind": "wh-explain", "content": ["d2"], "target": "T7.justify"}]))
    emit("P2_PROVENANCE", s, at="TX")

    s = prefix(base, 12)
    s["turns"].append(turn("TX", "γ", [
        {"kind": "retract", "content": ["d1"], "target": "T2.wh-justify"}]))
    emit("P3_PROVENANCE", s, at="TX")

    s = prefix(base, 2)
    s["turns"].append(turn("TX", "α", [
        {"kind": "advise", "content": ["e1"], "target": "T1.advise"}]))
    emit("POLITENESS_BLOCK", s, at="TX")

    s = prefix(base, 12)
    s["turns"].append(turn("TX", "β", [
        {"kind": "wh-justify", "content": ["d1"], "target": "T1.verdict"}]))
    emit("REPEAT_MOVE", s, at="TX")

    s = prefix(base, 0)
    opening = copy.deepcopy(base["turns"][0])
    opening["moves"][0], opening["moves"][1] = opening["moves"][1], opening["moves"][0]
    s["turns"].append(opening)
    emit("ORDER_VIOLATION", s, at="T1")

    s = prefix(base, 0)
    opening = copy.deepcopy(base["turns"][0])
    del opening["moves"][3]  # drop the concern
    s["turns"].append(opening)
    emit("MISSING_OPENING_LOCUTION", s, at="T1")

    s = prefix(base, 1)
    s["turns"].append({"label": "TX", "speaker": "β", "moves": [
        {"kind": "wh-justify", "content": ["d1"], "target": "T1.verdict"}]})
    emit("TURN_SHAPE", s, at="TX")

    s = prefix(base, 1)
    s["config"]["turn_order"] = "cyclic"
    s["turns"].append(turn("TX", "γ", [
        {"kind": "verdict", "content": ["d3"], "target": "T1.verdict"}]))
    emit("NOT_YOUR_TURN", s, at="TX")

    s = copy.deepcopy(base)
    s["turns"].append(turn("TX", "α", [
        {"kind": "wh-justify", "content": ["d3"], "target": "T3.verdict"}]))
    emit("SESSION_CLOSED", s, at="TX")

    s = prefix(base, 1)
    s["turns"].append(turn("TX", "δ", [
        {"kind": "verdict", "content": ["d2"], "target": "T1.verdict"}]))
    emit("UNKNOWN_PARTICIPANT", s, at="TX")

    s = prefix(base, 1)
    s["participants"][1]["role"] = "initiator"
    emit("SECOND_INITIATOR", s, kind="session")

    s = prefix(base, 1)
    s["config"]["min_participants"] = 1
    emit("INVALID_CONFIG", s, kind="session")

    s = prefix(base, 1)
    del s["corpus"]
    name = "script_parse.script.json"
    (FAULTS / name).write_text(
        json.dumps(s, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    index["SCRIPT_PARSE"] = {"script": name, "kind": "parse", "at": None}

    return index


def main() -> None:
    FAULTS.mkdir(parents=True, exist_ok=True)
    index = build()
    (FAULTS / "index.json").write_text(
        json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(index)} fault scripts to {FAULTS}")


if __name__ == "__main__":
    main()
