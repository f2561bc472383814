"""Seeded random driver that plays legal dialogues end to end.

The driver is a stress harness, not an oracle: it consults live state to
construct moves that should be accepted, submits them through the session
layer so every step is validated and logged, and records statistics about
what the kernel did.  On top of plain generation it runs three kinds of
in-flight probes against cloned kernel states:

* politeness injections: while a speaker owes a reply, submit an
  otherwise-legal move that ignores the debt and demand a rejection,
* closing probes: from quiescent progress states, have everyone consent
  in rotation and demand the dialogue closes,
* reopen probes: from termination states, issue a prompt and demand the
  stage reverts with consent cleared.

Probes run on copies (kernel states are immutable, so a "copy" is just a
reference) and never disturb the logged dialogue.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .lang import Atom, Formula, PositiveAtom, Rule
from .ledger import ClosureMode
from .locutions import LocutionKind, Move, Turn, fingerprint
from .protocol import DialogueState, TurnRejected, apply_turn, open_obligations
from .session import Replayer, Session, SessionConfig, SessionStore

# Fresh-content factories keyed by the locution kind that introduces them.
_ATOM_PREDICATE = {
    LocutionKind.OBSERVATION: "obs",
    LocutionKind.VERDICT: "finding",
    LocutionKind.ADVISE: "advice",
    LocutionKind.CONCERN: "risk",
    LocutionKind.EXPLAIN: "note",
    LocutionKind.CLARIFY: "obs",
}

_WH_TARGET_KINDS = {
    LocutionKind.WH_EXPLAIN: (LocutionKind.VERDICT, LocutionKind.ADVISE, LocutionKind.CONCERN),
    LocutionKind.WH_JUSTIFY: (LocutionKind.VERDICT, LocutionKind.ADVISE, LocutionKind.CONCERN),
    LocutionKind.WH_CLARIFY: (LocutionKind.OBSERVATION,),
}

_SAME_KIND_REPLY = (LocutionKind.OBSERVATION, LocutionKind.VERDICT, LocutionKind.ADVISE)


@dataclass
class FleetStats:
    sessions: int = 0
    closed_sessions: int = 0
    turns_accepted: int = 0
    moves_accepted: int = 0
    politeness_injections: int = 0
    politeness_blocked: int = 0
    politeness_wrong_code: list[str] = field(default_factory=list)
    multilateral_checks: int = 0
    multilateral_violations: list[str] = field(default_factory=list)
    closing_probes: int = 0
    closing_failures: list[str] = field(default_factory=list)
    reopen_probes: int = 0
    reopen_failures: list[str] = field(default_factory=list)
    replay_boundaries: int = 0
    replay_mismatches: list[str] = field(default_factory=list)
    kind_counts: dict[str, int] = field(default_factory=dict)


@dataclass
class FuzzOutcome:
    session: Session
    seed: int


class _DialogueBuilder:
    """State the generator keeps per dialogue beyond what the kernel holds."""

    def __init__(self, rng: random.Random) -> None:
        self.rng = rng
        self.serial = 0

    def fresh_atom(self, kind: LocutionKind) -> Atom:
        self.serial += 1
        return Atom(_ATOM_PREDICATE[kind], (f"x{self.serial}",))

    def fresh_rule(self, state: DialogueState) -> Rule:
        self.serial += 1
        head = Atom("note", (f"x{self.serial}",))
        atoms = [
            f.atom
            for store in state.ledger.stores.values()
            for f in store
            if isinstance(f, PositiveAtom)
        ]
        if atoms:
            body = (PositiveAtom(self.rng.choice(atoms)),)
        else:
            self.serial += 1
            body = (PositiveAtom(Atom("obs", (f"x{self.serial}",))),)
        return Rule(body, head)


def _opening_turn(builder: _DialogueBuilder, speaker: str) -> Turn:
    rng = builder.rng
    moves = []
    for kind in (
        LocutionKind.OBSERVATION,
        LocutionKind.VERDICT,
        LocutionKind.ADVISE,
        LocutionKind.CONCERN,
    ):
        count = rng.randint(1, 2) if kind is LocutionKind.OBSERVATION else 1
        content = frozenset(
            PositiveAtom(builder.fresh_atom(kind)) for _ in range(count)
        )
        moves.append(Move(kind=kind, content=content))
    moves.append(Move(kind=LocutionKind.PASS))
    return Turn(speaker, tuple(moves))


def _discharge_move(
    builder: _DialogueBuilder,
    state: DialogueState,
    speaker: str,
    request_id: int,
    retracted: set[Formula],
) -> Move:
    request = state.locution(request_id)
    if request.kind is LocutionKind.WH_EXPLAIN:
        content: frozenset[Formula] = frozenset(
            {PositiveAtom(builder.fresh_atom(LocutionKind.EXPLAIN))}
        )
        return Move(kind=LocutionKind.EXPLAIN, content=content, target=request_id)
    if request.kind is LocutionKind.WH_JUSTIFY:
        # Earlier moves in this same turn may already have withdrawn some of
        # the challenged content, so exclude those before retracting again.
        owned = (request.content & state.ledger.stores[speaker]) - retracted
        if owned and builder.rng.random() < 0.3:
            retracted.update(owned)
            return Move(
                kind=LocutionKind.RETRACT, content=frozenset(owned), target=request_id
            )
        return Move(
            kind=LocutionKind.JUSTIFY,
            content=frozenset({builder.fresh_rule(state)}),
            target=request_id,
        )
    if request.kind is LocutionKind.WH_CLARIFY:
        return Move(
            kind=LocutionKind.CLARIFY,
            content=frozenset({PositiveAtom(builder.fresh_atom(LocutionKind.CLARIFY))}),
            target=request_id,
        )
    raise AssertionError(f"unexpected pending request kind {request.kind}")


def _free_move(
    builder: _DialogueBuilder, state: DialogueState, speaker: str, staged: set
) -> Move | None:
    """Build one legal non-management move, or None if the dice find nothing."""
    rng = builder.rng
    candidates = [
        loc
        for loc in state.history
        if loc.kind
        in (
            LocutionKind.OBSERVATION,
            LocutionKind.VERDICT,
            LocutionKind.ADVISE,
            LocutionKind.CONCERN,
        )
        and loc.speaker != speaker
    ]
    if not candidates:
        return None
    target = rng.choice(candidates)
    roll = rng.random()
    if roll < 0.35:
        # Agree with content someone else is committed to.
        pool = [
            f
            for f in target.content
            if state.ledger.committers(f) - {speaker}
        ]
        if not pool:
            return None
        take = rng.sample(pool, rng.randint(1, len(pool)))
        move = Move(
            kind=LocutionKind.AGREE, content=frozenset(take), target=target.id
        )
    elif roll < 0.65:
        kinds = [k for k in _WH_TARGET_KINDS if target.kind in _WH_TARGET_KINDS[k]]
        if not kinds:
            return None
        kind = rng.choice(kinds)
        pool = [f for f in target.content if state.ledger.committed_anywhere(f)]
        if not pool:
            return None
        take = rng.sample(pool, rng.randint(1, len(pool)))
        move = Move(kind=kind, content=frozenset(take), target=target.id)
    elif roll < 0.9 and target.kind in _SAME_KIND_REPLY:
        move = Move(
            kind=target.kind,
            content=frozenset({PositiveAtom(builder.fresh_atom(target.kind))}),
            target=target.id,
        )
    elif target.kind is LocutionKind.OBSERVATION:
        move = Move(
            kind=LocutionKind.ASSERT,
            content=frozenset({builder.fresh_rule(state)}),
            target=target.id,
        )
    else:
        return None
    probe = fingerprint(speaker, move)
    if probe in state.seen or probe in staged:
        return None
    staged.add(probe)
    return move


def _fresh_observation_reply(
    builder: _DialogueBuilder, state: DialogueState, speaker: str
) -> Move | None:
    """A supplementary observation reply.  Legal on its own; when the speaker
    owes a reply elsewhere it doubles as the politeness-violation payload."""
    for loc in state.history:
        if loc.kind is LocutionKind.OBSERVATION and loc.speaker != speaker:
            return Move(
                kind=LocutionKind.OBSERVATION,
                content=frozenset(
                    {PositiveAtom(builder.fresh_atom(LocutionKind.OBSERVATION))}
                ),
                target=loc.id,
            )
    return None


def _probe_injection(
    builder: _DialogueBuilder,
    state: DialogueState,
    speaker: str,
    stats: FleetStats,
    label: str,
) -> None:
    move = _fresh_observation_reply(builder, state, speaker)
    if move is None:
        return
    stats.politeness_injections += 1
    try:
        apply_turn(state, Turn(speaker, (move, Move(kind=LocutionKind.PASS))))
    except TurnRejected as exc:
        if any(v.code == "POLITENESS_BLOCK" for v in exc.violations):
            stats.politeness_blocked += 1
        else:
            stats.politeness_wrong_code.append(
                f"{label}: {[v.code for v in exc.violations]}"
            )
    else:
        stats.politeness_wrong_code.append(f"{label}: injection was accepted")


def _probe_closing(
    state: DialogueState, names: list[str], stats: FleetStats, label: str
) -> None:
    """From a quiescent progress state, everyone consents in rotation."""
    stats.closing_probes += 1
    current = state
    start = current.turn_count % len(names)
    try:
        for step in range(len(names)):
            speaker = names[(start + step) % len(names)]
            turn = Turn(
                speaker,
                (Move(kind=LocutionKind.END), Move(kind=LocutionKind.PASS)),
            )
            current = apply_turn(current, turn)
            if step == 0:
                _probe_reopen(current, names[(start + 1) % len(names)], stats, label)
    except TurnRejected as exc:
        stats.closing_failures.append(f"{label}: {[v.code for v in exc.violations]}")
        return
    if not current.ledger.closed:
        stats.closing_failures.append(f"{label}: all consented but not closed")


def _probe_reopen(
    state: DialogueState, speaker: str, stats: FleetStats, label: str
) -> None:
    """From a termination state, a prompt must revert the stage and wipe consent."""
    stats.reopen_probes += 1
    turn = Turn(
        speaker,
        (
            Move(kind=LocutionKind.PROMPT, prompt_targets=(state.history[0].id,)),
            Move(kind=LocutionKind.PASS),
        ),
    )
    try:
        after = apply_turn(state, turn)
    except TurnRejected as exc:
        stats.reopen_failures.append(f"{label}: {[v.code for v in exc.violations]}")
        return
    if after.stage.value != "progress":
        stats.reopen_failures.append(f"{label}: stage is {after.stage.value}")
    elif after.consent:
        stats.reopen_failures.append(f"{label}: consent not cleared")


def _check_multilateral(state: DialogueState, stats: FleetStats, label: str) -> None:
    if state.ledger.closed:
        return
    stats.multilateral_checks += 1
    for formula in state.ledger.agreement:
        if len(state.ledger.committers(formula)) < 2:
            stats.multilateral_violations.append(f"{label}: {formula!r}")


def play_session(
    seed: int,
    stats: FleetStats,
    *,
    max_turns: int = 50,
    max_participants: int = 6,
    store: SessionStore | None = None,
) -> Session:
    """Play one random dialogue to closure or the turn cap, logging events."""
    rng = random.Random(seed)
    builder = _DialogueBuilder(rng)
    if store is None:
        store = SessionStore(log_dir=None)
    n = rng.randint(2, max_participants)
    names = [f"a{i}" for i in range(n)]
    closure = rng.choice([ClosureMode.CHALLENGE_AWARE, ClosureMode.UNION_MINUS_CONFLICTS])
    config = SessionConfig(
        min_participants=n,
        turn_order="cyclic",
        closure_mode=closure,
        relatedness_enforced=True,
    )
    sid = store.create(config, session_id=f"fuzz-{seed}")
    store.join(sid, names[0], "initiator")
    for name in names[1:]:
        store.join(sid, name, "participant")
    session = store.get(sid)
    label = sid

    # Shadow fold: feed every logged event through the replayer as it lands
    # and demand the rebuilt state match the live one.  Because the replayer
    # state after k events is exactly the replay of the k-truncated log, this
    # checks replay determinism at every event boundary.
    replayer = Replayer()
    fed = 0

    def sync_replay() -> None:
        nonlocal fed
        for event in session.events[fed:]:
            replayer.feed(event.to_wire())
            fed += 1
            stats.replay_boundaries += 1
        mirror = replayer.session
        if (
            mirror.state != session.state
            or mirror.participants != session.participants
            or mirror.closed != session.closed
        ):
            stats.replay_mismatches.append(f"{label} at seq {fed - 1}")

    sync_replay()
    want_end = False
    while not session.closed and session.state.turn_count < max_turns:
        state = session.state
        speaker = session.current_speaker()
        if state.turn_count == 0:
            turn = _opening_turn(builder, speaker)
        else:
            moves: list[Move] = []
            staged: set = set()
            retracted: set[Formula] = set()
            mine = open_obligations(state, speaker)
            if mine and rng.random() < 0.25:
                _probe_injection(builder, state, speaker, stats, label)
            for obligation in mine:
                moves.append(
                    _discharge_move(
                        builder, state, speaker, obligation.request, retracted
                    )
                )
            quiescent = not open_obligations(state)
            if state.stage.value == "termination":
                if rng.random() < 0.5:
                    _probe_reopen(state, speaker, stats, label)
                if rng.random() < 0.12:
                    target = rng.choice(state.history[:4]).id
                    moves.append(
                        Move(kind=LocutionKind.PROMPT, prompt_targets=(target,))
                    )
                    want_end = False
                else:
                    moves.append(Move(kind=LocutionKind.END))
            elif not moves and quiescent and (want_end or rng.random() < 0.08):
                want_end = True
                moves.append(Move(kind=LocutionKind.END))
            else:
                # Provenance pools were computed against the pre-turn state,
                # which a retract in this turn would falsify.
                budget = rng.randint(1, 2) if not moves else rng.randint(0, 1)
                if retracted:
                    budget = 0
                attempts = budget * 3
                while budget > 0 and attempts > 0:
                    attempts -= 1
                    move = _free_move(builder, state, speaker, staged)
                    if move is not None:
                        moves.append(move)
                        budget -= 1
                if not moves and rng.random() < 0.1:
                    moves.append(
                        Move(
                            kind=LocutionKind.PROMPT,
                            prompt_targets=(rng.choice(state.history).id,),
                        )
                    )
                if not moves:
                    # Turns need a substantive move; fall back to something
                    # that is always available to an unobligated speaker.
                    move = _fresh_observation_reply(builder, state, speaker)
                    if move is None:
                        moves.append(
                            Move(
                                kind=LocutionKind.PROMPT,
                                prompt_targets=(state.history[0].id,),
                            )
                        )
                    else:
                        moves.append(move)
            moves.append(Move(kind=LocutionKind.PASS))
            turn = Turn(speaker, tuple(moves))
        accepted, violations = store.submit_turn(
            session.id, turn.speaker, list(turn.moves)
        )
        if not accepted:
            detail = [(v.code, v.message) for v in violations]
            raise AssertionError(
                f"{label} turn {state.turn_count + 1}: driver built an illegal turn: {detail}"
            )
        stats.turns_accepted += 1
        stats.moves_accepted += len(turn.moves)
        for move in turn.moves:
            stats.kind_counts[move.kind.value] = (
                stats.kind_counts.get(move.kind.value, 0) + 1
            )
        sync_replay()
        _check_multilateral(session.state, stats, label)
        if (
            not session.closed
            and session.state.stage.value == "progress"
            and not open_obligations(session.state)
            and rng.random() < 0.12
        ):
            _probe_closing(session.state, names, stats, label)
    if session.closed:
        stats.closed_sessions += 1
    stats.sessions += 1
    return session


def play_fleet(
    count: int,
    *,
    seed: int = 0,
    max_turns: int = 50,
    max_participants: int = 6,
) -> tuple[list[Session], FleetStats]:
    """Play `count` independent random dialogues and pool the statistics."""
    stats = FleetStats()
    sessions = []
    for i in range(count):
        sessions.append(
            play_session(
                seed * 1_000_003 + i,
                stats,
                max_turns=max_turns,
                max_participants=max_participants,
            )
        )
    return sessions, stats
