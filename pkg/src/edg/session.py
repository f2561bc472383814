"""Multi-session orchestration over the dialogue kernel.

A session starts in a lobby, collects participants (exactly one initiator,
who speaks first), then runs the dialogue turn by turn.  Every accepted or
rejected submission is appended to an event log; the log is the source of
truth and folding it back yields a state deeply equal to the live one.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .lang import (
    ConflictMode,
    ConflictPolicy,
    Corpus,
    FormulaSyntaxError,
    PositiveAtom,
    parse_corpus,
    parse_formula,
)
from .ledger import ClosureMode, unresolved_challenges
from .locutions import LABELS, LocutionKind, Move, Turn
from .protocol import (
    DialogueStage,
    DialogueState,
    ProtocolConfig,
    TurnRejected,
    Violation,
    apply_turn,
    effective_replies,
    new_dialogue,
    open_obligations,
    prompt_pending,
)

INITIATOR = "initiator"
PARTICIPANT = "participant"


class SessionError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class SessionConfig:
    min_participants: int = 2
    join_deadline: str = "manual"
    turn_order: str = "cyclic"
    closure_mode: ClosureMode = ClosureMode.CHALLENGE_AWARE
    relatedness_enforced: bool = True
    conflict_policy: ConflictPolicy = ConflictPolicy()
    extra_replies: tuple[tuple[LocutionKind, LocutionKind], ...] = ()
    corpus_text: str | None = None

    def protocol_config(self) -> ProtocolConfig:
        return ProtocolConfig(
            conflict_policy=self.conflict_policy,
            closure_mode=self.closure_mode,
            relatedness_enforced=self.relatedness_enforced,
            extra_replies=frozenset(self.extra_replies),
        )

    def to_wire(self) -> dict:
        return {
            "min_participants": self.min_participants,
            "join_deadline": self.join_deadline,
            "turn_order": self.turn_order,
            "closure_mode": self.closure_mode.value,
            "relatedness_enforced": self.relatedness_enforced,
            "conflict_policy": {
                "mode": self.conflict_policy.mode.value,
                "exclusion_groups": [
                    sorted(f.render() for f in group)
                    for group in self.conflict_policy.exclusion_groups
                ],
            },
            "extra_replies": [
                [target.value, reply.value] for target, reply in self.extra_replies
            ],
            "corpus": self.corpus_text,
        }


def config_from_wire(raw: dict) -> SessionConfig:
    """Parse and validate a wire-format config; INVALID_CONFIG on bad input."""
    if not isinstance(raw, dict):
        raise SessionError("INVALID_CONFIG", "config must be an object")

    def bad(message: str) -> SessionError:
        return SessionError("INVALID_CONFIG", message)

    min_participants = raw.get("min_participants", 2)
    if not isinstance(min_participants, int) or min_participants < 2:
        raise bad("min_participants must be an integer >= 2")
    turn_order = raw.get("turn_order", "cyclic")
    if turn_order not in ("cyclic", "free"):
        raise bad(f"unknown turn_order {turn_order!r}")
    join_deadline = raw.get("join_deadline", "manual")

    try:
        closure_mode = ClosureMode(raw.get("closure_mode", "challenge-aware"))
    except ValueError:
        raise bad(f"unknown closure_mode {raw.get('closure_mode')!r}") from None

    policy_raw = raw.get("conflict_policy") or {}
    try:
        mode = ConflictMode(policy_raw.get("mode", "negation-only"))
    except ValueError:
        raise bad(f"unknown conflict mode {policy_raw.get('mode')!r}") from None
    groups = []
    for group in policy_raw.get("exclusion_groups", []):
        atoms = set()
        for text in group if isinstance(group, (list, tuple)) else [None]:
            try:
                formula = parse_formula(text)
            except (FormulaSyntaxError, TypeError) as exc:
                raise bad(f"bad exclusion group: {exc}") from None
            if not isinstance(formula, PositiveAtom):
                raise bad(f"exclusion groups hold positive atoms, not {text!r}")
            atoms.add(formula.atom)
        groups.append(frozenset(atoms))
    try:
        policy = ConflictPolicy(mode=mode, exclusion_groups=tuple(groups))
    except ValueError as exc:
        raise bad(str(exc)) from None

    extra = []
    for pair in raw.get("extra_replies", []):
        try:
            target, reply = pair
            extra.append((LocutionKind(target), LocutionKind(reply)))
        except (ValueError, TypeError):
            raise bad(f"bad extra reply pair {pair!r}") from None

    corpus_text = raw.get("corpus")
    if corpus_text is not None:
        if not isinstance(corpus_text, str):
            raise bad("corpus must be a string")
        try:
            parse_corpus(corpus_text)
        except FormulaSyntaxError as exc:
            raise bad(f"bad corpus: {exc}") from None

    return SessionConfig(
        min_participants=min_participants,
        join_deadline=str(join_deadline),
        turn_order=turn_order,
        closure_mode=closure_mode,
        relatedness_enforced=bool(raw.get("relatedness_enforced", True)),
        conflict_policy=policy,
        extra_replies=tuple(extra),
        corpus_text=corpus_text,
    )


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    session: str
    kind: str
    payload: dict
    ts: int

    def to_wire(self) -> dict:
        return {
            "seq": self.seq,
            "session": self.session,
            "kind": self.kind,
            "payload": self.payload,
            "ts": self.ts,
        }


def move_to_wire(move: Move) -> dict:
    return {
        "kind": move.kind.value,
        "content": sorted(f.render() for f in move.content),
        "target": move.target,
        "prompt_targets": sorted(move.prompt_targets),
    }


def move_from_wire(raw: dict) -> Move:
    try:
        kind = LocutionKind(raw["kind"])
    except (KeyError, ValueError, TypeError):
        raise SessionError("SCHEMA", f"bad move kind {raw.get('kind')!r}") from None
    content = frozenset(parse_formula(text) for text in raw.get("content") or [])
    target = raw.get("target")
    if target is not None and not isinstance(target, int):
        raise SessionError("SCHEMA", "move target must be an integer locution id")
    return Move(
        kind,
        content=content,
        target=target,
        prompt_targets=tuple(sorted(raw.get("prompt_targets") or [])),
    )


@dataclass
class Session:
    id: str
    config: SessionConfig
    participants: list[tuple[str, str]] = field(default_factory=list)
    state: DialogueState | None = None
    events: list[SessionEvent] = field(default_factory=list)
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    @property
    def started(self) -> bool:
        return self.state is not None

    @property
    def closed(self) -> bool:
        return self.state is not None and self.state.stage is DialogueStage.CLOSED

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.participants]

    def current_speaker(self) -> str | None:
        if self.state is None or self.closed:
            return None
        if self.state.turn_count == 0:
            return self.names[0]
        if self.config.turn_order == "cyclic":
            return self.names[self.state.turn_count % len(self.names)]
        return None  # free ordering: anyone may speak


def _corpus_of(config: SessionConfig) -> Corpus | None:
    return parse_corpus(config.corpus_text) if config.corpus_text else None


class SessionStore:
    """All live sessions plus their event logs; one writer per session."""

    def __init__(self, log_dir: str | Path | None = None):
        self.log_dir = Path(log_dir) if log_dir else None
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._listeners: list = []
        self._lock = threading.Lock()

    # -- event plumbing -------------------------------------------------

    def _append(self, session: Session, kind: str, payload: dict) -> SessionEvent:
        event = SessionEvent(
            seq=len(session.events),
            session=session.id,
            kind=kind,
            payload=payload,
            ts=int(time.time() * 1000),
        )
        if self.log_dir:
            path = self.log_dir / f"{session.id}.events.jsonl"
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event.to_wire(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        session.events.append(event)
        for listener in list(self._listeners):
            listener(event)
        return event

    def subscribe(self, listener) -> None:
        self._listeners.append(listener)

    def events_since(self, session_id: str, after: int = -1) -> list[SessionEvent]:
        session = self.get(session_id)
        with session.lock:
            return [e for e in session.events if e.seq > after]

    # -- operations ------------------------------------------------------

    def create(self, config: SessionConfig | dict, session_id: str | None = None) -> str:
        if isinstance(config, dict):
            config = config_from_wire(config)
        session_id = session_id or uuid.uuid4().hex[:12]
        with self._lock:
            if session_id in self._sessions:
                raise SessionError("INVALID_CONFIG", f"session {session_id} already exists")
            session = Session(id=session_id, config=config)
            self._sessions[session_id] = session
        with session.lock:
            self._append(session, "Created", {"config": config.to_wire()})
        return session_id

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionError("NOT_FOUND", f"no session {session_id}") from None

    def join(self, session_id: str, display_name: str, role: str = PARTICIPANT) -> str:
        session = self.get(session_id)
        if role not in (INITIATOR, PARTICIPANT):
            raise SessionError("INVALID_CONFIG", f"unknown role {role!r}")
        if not display_name or not isinstance(display_name, str):
            raise SessionError("INVALID_CONFIG", "display_name must be a non-empty string")
        with session.lock:
            for name, existing_role in session.participants:
                if name == display_name:
                    if existing_role == role and not session.started:
                        return display_name  # idempotent re-join
                    raise SessionError("DUPLICATE_NAME", f"{display_name!r} already joined")
            if session.started:
                raise SessionError("SESSION_STARTED", "dialogue already underway")
            if role == INITIATOR and any(r == INITIATOR for _, r in session.participants):
                raise SessionError("SECOND_INITIATOR", "session already has an initiator")
            session.participants.append((display_name, role))
            self._append(session, "Joined", {"participant": display_name, "role": role})
            self._maybe_start(session)
        return display_name

    def _maybe_start(self, session: Session) -> None:
        if session.started:
            return
        if len(session.participants) < session.config.min_participants:
            return
        if not any(role == INITIATOR for _, role in session.participants):
            return
        # initiator speaks first: move them to position 0
        session.participants.sort(key=lambda pr: 0 if pr[1] == INITIATOR else 1)
        corpus = _corpus_of(session.config)
        session.state = new_dialogue(
            session.names,
            session.config.protocol_config(),
            categories=corpus.categories() if corpus else None,
        )
        self._append(session, "StageChanged", {"stage": DialogueStage.COMMENCEMENT.value})

    def submit_turn(self, session_id: str, speaker: str, moves: list[Move]):
        """Returns (accepted, violations); both outcomes are logged."""
        session = self.get(session_id)
        with session.lock:
            wire_moves = [move_to_wire(m) for m in moves]

            def reject(code: str, message: str):
                violations = [Violation(code, message)]
                self._append(
                    session,
                    "TurnRejected",
                    {
                        "speaker": speaker,
                        "moves": wire_moves,
                        "violations": [
                            {"code": v.code, "message": v.message, "move_index": v.move_index}
                            for v in violations
                        ],
                    },
                )
                return False, violations

            if not session.started:
                return reject("NOT_STARTED", "session is still in the lobby")
            if session.closed:
                return reject("SESSION_CLOSED", "dialogue already closed")
            if speaker not in session.names:
                return reject("UNKNOWN_PARTICIPANT", f"{speaker!r} has not joined")
            expected = session.current_speaker()
            if expected is not None and speaker != expected:
                return reject("NOT_YOUR_TURN", f"it is {expected}'s turn")

            before = session.state
            try:
                after = apply_turn(before, Turn(speaker, tuple(moves)))
            except TurnRejected as exc:
                self._append(
                    session,
                    "TurnRejected",
                    {
                        "speaker": speaker,
                        "moves": wire_moves,
                        "violations": [
                            {"code": v.code, "message": v.message, "move_index": v.move_index}
                            for v in exc.violations
                        ],
                    },
                )
                return False, exc.violations

            session.state = after
            self._append(session, "TurnAccepted", {"speaker": speaker, "moves": wire_moves})
            if after.stage is not before.stage:
                if after.stage is DialogueStage.CLOSED:
                    self._append(
                        session,
                        "Closed",
                        {"final_as": sorted(f.render() for f in after.ledger.agreement)},
                    )
                else:
                    self._append(session, "StageChanged", {"stage": after.stage.value})
            return True, []

    # -- views -------------------------------------------------------------

    def snapshot(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            return build_snapshot(session)

    def legal_replies(self, session_id: str, target: int) -> dict:
        session = self.get(session_id)
        with session.lock:
            if session.state is None:
                raise SessionError("NOT_STARTED", "session is still in the lobby")
            locution = session.state.locution(target)
            if locution is None:
                raise SessionError("TARGET_UNKNOWN", f"no locution {target}")
            kinds = effective_replies(session.state.config, locution.kind)
            return {
                "target": target,
                "kind": locution.kind.value,
                "replies": [
                    {"kind": k.value, "label": LABELS[k]}
                    for k in sorted(kinds, key=lambda k: k.value)
                ],
            }


def build_snapshot(session: Session) -> dict:
    state = session.state
    snapshot = {
        "session": session.id,
        "stage": "lobby" if state is None else state.stage.value,
        "participants": [
            {"name": name, "role": role} for name, role in session.participants
        ],
        "min_participants": session.config.min_participants,
        "turn_order": session.config.turn_order,
        "current_speaker": session.current_speaker(),
        "turn_count": 0 if state is None else state.turn_count,
        "closed": session.closed,
        "last_seq": session.events[-1].seq if session.events else -1,
        "history": [],
        "commitments": {name: [] for name, _ in session.participants},
        "agreements": [],
        "consented": [],
        "open_obligations": [],
        "prompt_pending": [],
        "unresolved_challenges": [],
    }
    if state is None:
        return snapshot
    snapshot["history"] = [
        {
            "id": loc.id,
            "turn": loc.turn,
            "speaker": loc.speaker,
            "kind": loc.kind.value,
            "content": sorted(f.render() for f in loc.content),
            "target": loc.target,
            "prompt_targets": sorted(loc.prompt_targets),
        }
        for loc in state.history
    ]
    snapshot["commitments"] = {
        name: sorted(f.render() for f in state.ledger.stores[name])
        for name in state.participants
    }
    snapshot["agreements"] = sorted(f.render() for f in state.ledger.agreement)
    snapshot["consented"] = sorted(state.consent)
    snapshot["open_obligations"] = [
        {"debtor": o.debtor, "request": o.request} for o in open_obligations(state)
    ]
    snapshot["prompt_pending"] = sorted(prompt_pending(state))
    snapshot["unresolved_challenges"] = [
        {
            "formula": record.formula.render(),
            "challenged_by": record.challenged_by,
            "via": record.via,
        }
        for record in unresolved_challenges(state.ledger, state.history)
    ]
    return snapshot


# -- replay -----------------------------------------------------------------


class CorruptLog(Exception):
    def __init__(self, seq: int, message: str):
        self.seq = seq
        super().__init__(f"event {seq}: {message}")


class Replayer:
    """Incremental event fold; after feeding a gapless prefix its session is
    deeply equal (modulo timestamps and lock identity) to the live one."""

    def __init__(self) -> None:
        self.session: Session | None = None
        self._next = 0

    def feed(self, raw: dict) -> Session:
        position = self._next
        try:
            seq, kind, payload = raw["seq"], raw["kind"], raw["payload"]
        except (KeyError, TypeError):
            raise CorruptLog(position, "malformed event record") from None
        if seq != position:
            raise CorruptLog(position, f"expected seq {position}, found {seq}")
        self._next += 1
        event = SessionEvent(
            seq=seq,
            session=raw.get("session", ""),
            kind=kind,
            payload=payload,
            ts=raw.get("ts", 0),
        )
        session = self.session
        if session is None:
            if kind != "Created":
                raise CorruptLog(seq, "log must begin with Created")
            try:
                config = config_from_wire(payload["config"])
            except (SessionError, KeyError) as exc:
                raise CorruptLog(seq, f"bad config: {exc}") from None
            self.session = Session(id=event.session, config=config)
            self.session.events.append(event)
            return self.session
        session.events.append(event)
        if kind == "Joined":
            session.participants.append((payload["participant"], payload["role"]))
            if not session.started:
                _replay_start(session)
        elif kind == "TurnAccepted":
            if session.state is None:
                raise CorruptLog(seq, "turn before session start")
            moves = [move_from_wire(m) for m in payload["moves"]]
            try:
                session.state = apply_turn(
                    session.state, Turn(payload["speaker"], tuple(moves))
                )
            except TurnRejected as exc:
                raise CorruptLog(seq, f"logged turn no longer valid: {exc}") from None
        elif kind == "StageChanged":
            stage = "lobby" if session.state is None else session.state.stage.value
            if payload.get("stage") != stage:
                raise CorruptLog(seq, f"stage mismatch: log says {payload.get('stage')}")
        elif kind == "Closed":
            if not session.closed:
                raise CorruptLog(seq, "Closed event but dialogue still open")
        elif kind == "TurnRejected":
            pass  # no state change
        elif kind == "Created":
            raise CorruptLog(seq, "duplicate Created")
        else:
            raise CorruptLog(seq, f"unknown event kind {kind!r}")
        return session


def replay_events(raw_events: list[dict]) -> Session:
    """Fold a wire-format event list back into a session."""
    if not raw_events:
        raise CorruptLog(0, "empty log")
    replayer = Replayer()
    for raw in raw_events:
        session = replayer.feed(raw)
    return session


def _replay_start(session: Session) -> None:
    if len(session.participants) < session.config.min_participants:
        return
    if not any(role == INITIATOR for _, role in session.participants):
        return
    session.participants.sort(key=lambda pr: 0 if pr[1] == INITIATOR else 1)
    corpus = _corpus_of(session.config)
    session.state = new_dialogue(
        session.names,
        session.config.protocol_config(),
        categories=corpus.categories() if corpus else None,
    )


def load_session(log_path: str | Path) -> Session:
    lines = Path(log_path).read_text(encoding="utf-8").splitlines()
    raw_events = []
    for index, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            raw_events.append(json.loads(line))
        except json.JSONDecodeError:
            raise CorruptLog(index, "line is not valid JSON") from None
    return replay_events(raw_events)
