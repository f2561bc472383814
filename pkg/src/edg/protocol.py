"""Dialogue state machine and move validation.

A dialogue runs through commencement (one opening turn by the initiator),
progress (threaded replies), and a termination round that closes once every
participant has consented.  Every move is validated against the legality
matrix, content category constraints, reply-content relations, provenance,
politeness and repetition before it is applied; a turn is atomic, so the
first offending move rejects the whole submission.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .lang import ConflictPolicy, ContentCategory, canonicalize, is_rule_like, related
from .ledger import ClosureMode, Ledger, apply_commitment_effects, close_ledger, new_ledger
from .locutions import (
    ALLOWED_CATEGORIES,
    CONTENT_KINDS,
    DISCHARGING_REPLIES,
    DISTINCT_FROM_TARGET,
    OPENING_SEQUENCE,
    RELATED_TO_TARGET,
    REPLY_MATRIX,
    SUBSET_OF_TARGET,
    THIRD_PARTY_PAIRS,
    WH_REQUESTS,
    Locution,
    LocutionKind,
    Move,
    Turn,
    fingerprint,
)

K = LocutionKind
C = ContentCategory


class DialogueStage(enum.Enum):
    COMMENCEMENT = "commencement"
    PROGRESS = "progress"
    TERMINATION = "termination"
    CLOSED = "closed"


@dataclass(frozen=True)
class ProtocolConfig:
    conflict_policy: ConflictPolicy = ConflictPolicy()
    closure_mode: ClosureMode = ClosureMode.CHALLENGE_AWARE
    relatedness_enforced: bool = True
    # extra (target kind, reply kind) pairs admitted beyond the standard
    # matrix; lets a session relax the no-assert-on-advice stance
    extra_replies: frozenset[tuple[LocutionKind, LocutionKind]] = frozenset()


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    move_index: int | None = None


class TurnRejected(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{v.code}: {v.message}" for v in self.violations))


@dataclass(frozen=True)
class Obligation:
    """An unanswered request binds its addressee until discharged."""

    debtor: str
    request: int
    discharged: bool = False


@dataclass(frozen=True)
class DialogueState:
    participants: tuple[str, ...]
    config: ProtocolConfig
    stage: DialogueStage = DialogueStage.COMMENCEMENT
    history: tuple[Locution, ...] = ()
    obligations: tuple[Obligation, ...] = ()
    consent: frozenset[str] = frozenset()
    turn_count: int = 0
    ledger: Ledger = None  # type: ignore[assignment]
    categories: dict = field(default_factory=dict)
    seen: frozenset = frozenset()

    def locution(self, locution_id: int) -> Locution | None:
        if 1 <= locution_id <= len(self.history):
            return self.history[locution_id - 1]
        return None


def new_dialogue(participants, config: ProtocolConfig | None = None, categories=None) -> DialogueState:
    participants = tuple(participants)
    if len(set(participants)) != len(participants):
        raise ValueError("participant names must be unique")
    if len(participants) < 2:
        raise ValueError("a dialogue needs at least two participants")
    return DialogueState(
        participants=participants,
        config=config or ProtocolConfig(),
        ledger=new_ledger(participants),
        categories=dict(categories or {}),
    )


def open_obligations(state: DialogueState, debtor: str | None = None) -> tuple[Obligation, ...]:
    """Undischarged obligations, oldest first, optionally for one debtor."""
    return tuple(
        o
        for o in state.obligations
        if not o.discharged and (debtor is None or o.debtor == debtor)
    )


def prompt_pending(state: DialogueState) -> frozenset[int]:
    """Locutions flagged by a prompt and not answered since."""
    pending: set[int] = set()
    for loc in state.history:
        if loc.kind is not K.PROMPT:
            continue
        for tid in loc.prompt_targets:
            if not any(later.target == tid and later.id > loc.id for later in state.history):
                pending.add(tid)
    return frozenset(pending)


def effective_replies(config: ProtocolConfig, kind: LocutionKind) -> frozenset[LocutionKind]:
    extra = frozenset(reply for target, reply in config.extra_replies if target is kind)
    return REPLY_MATRIX[kind] | extra


# introduction binding: the category a fresh atom acquires from the kind of
# the locution that first utters it
_INTRO_CATEGORY: dict[LocutionKind, ContentCategory] = {
    K.OBSERVATION: C.OBSERVATION,
    K.VERDICT: C.VERDICT,
    K.ADVISE: C.EVALUATIVE,
    K.CONCERN: C.CONCERN,
    K.ASSERT: C.FACT,
    K.EXPLAIN: C.FACT,
    K.JUSTIFY: C.FACT,
    K.CLARIFY: C.OBSERVATION,
}


def category_of(state: DialogueState, formula) -> ContentCategory | None:
    if is_rule_like(formula):
        return C.RULE
    return state.categories.get(formula)


def _check_categories(state: DialogueState, move: Move) -> Violation | None:
    allowed = ALLOWED_CATEGORIES.get(move.kind)
    if allowed is None:
        return None
    for formula in move.content:
        cat = category_of(state, formula)
        if cat is None:
            cat = _INTRO_CATEGORY.get(move.kind)
            if cat is None:
                continue  # provenance rules report unknown content
        if cat not in allowed:
            return Violation(
                "CONTENT_CATEGORY",
                f"{formula.render()} is {cat.value}, not admissible for {move.kind.value}",
            )
    return None


def _check_target_relations(state: DialogueState, speaker: str, move: Move, target: Locution) -> Violation | None:
    pair = (target.kind, move.kind)
    if move.kind in (K.AGREE, K.RETRACT):
        if not (move.content & target.content):
            return Violation(
                "CONTENT_SUBSET",
                f"{move.kind.value} must share content with its target",
            )
        return None
    if pair in SUBSET_OF_TARGET and not move.content <= target.content:
        return Violation(
            "CONTENT_SUBSET",
            f"{move.kind.value} content must be drawn from the target's content",
        )
    if pair in DISTINCT_FROM_TARGET and move.content == target.content:
        return Violation(
            "CONTENT_DISTINCT",
            f"{move.kind.value} must bring content different from its target",
        )
    if pair in THIRD_PARTY_PAIRS and target.speaker == speaker:
        return Violation(
            "THIRD_PARTY_REPLY",
            f"a supplemental {move.kind.value} must come from another participant",
        )
    if (
        state.config.relatedness_enforced
        and pair in RELATED_TO_TARGET
        and not all(any(related(f, t) for t in target.content) for f in move.content)
    ):
        return Violation(
            "RELATEDNESS",
            f"{move.kind.value} content is unrelated to the target's content",
        )
    return None


def _check_provenance(state: DialogueState, speaker: str, move: Move) -> Violation | None:
    ledger = state.ledger
    if move.kind in WH_REQUESTS:
        for formula in move.content:
            if not ledger.committed_anywhere(formula):
                return Violation(
                    "P2_PROVENANCE",
                    f"{formula.render()} is not in any commitment store",
                )
    elif move.kind is K.AGREE:
        # agreement is multilateral: the content must already stand in a
        # store other than the speaker's own
        for formula in move.content:
            others = ledger.committers(formula) - {speaker}
            if not others:
                return Violation(
                    "P2_PROVENANCE",
                    f"{formula.render()} is not in any other participant's store",
                )
    elif move.kind is K.RETRACT:
        store = ledger.store_of(speaker)
        for formula in move.content:
            if formula not in store:
                return Violation(
                    "P3_PROVENANCE",
                    f"{formula.render()} is not in {speaker}'s own store",
                )
    return None


def validate_move(state: DialogueState, speaker: str, move: Move) -> list[Violation]:
    """All rule checks for one move against the current (mid-turn) state."""
    if state.stage is DialogueStage.CLOSED:
        return [Violation("STAGE", "dialogue is closed")]
    if state.stage is DialogueStage.COMMENCEMENT:
        return [Violation("STAGE", "only the opening turn is admissible during commencement")]

    kind = move.kind

    # shape
    if kind in (K.END, K.PASS, K.PROMPT):
        if move.target is not None:
            return [Violation("TARGET_NOT_NULL", f"{kind.value} takes no target")]
        if move.content:
            return [Violation("CONTENT_FORBIDDEN", f"{kind.value} carries no formulas")]
        if kind is K.PROMPT:
            if not move.prompt_targets:
                return [Violation("CONTENT_EMPTY", "prompt must name at least one locution")]
            for tid in move.prompt_targets:
                if state.locution(tid) is None:
                    return [Violation("TARGET_UNKNOWN", f"prompt names unknown locution {tid}")]
        elif move.prompt_targets:
            return [Violation("CONTENT_FORBIDDEN", f"{kind.value} names no locutions")]
    else:
        if move.prompt_targets:
            return [Violation("CONTENT_FORBIDDEN", f"{kind.value} names no locutions")]
        if not move.content:
            return [Violation("CONTENT_EMPTY", f"{kind.value} needs content")]

    # stage admissibility
    if state.stage is DialogueStage.TERMINATION and kind not in (K.END, K.PROMPT, K.PASS):
        return [Violation("STAGE", "only end or prompt while termination is pending")]

    target: Locution | None = None
    if kind in CONTENT_KINDS:
        if move.target is None:
            return [Violation("TARGET_REQUIRED", f"{kind.value} must reply to an earlier locution")]
        target = state.locution(move.target)
        if target is None:
            return [Violation("TARGET_UNKNOWN", f"no locution {move.target}")]
        if kind not in effective_replies(state.config, target.kind):
            return [
                Violation(
                    "TABLE3_REPLY",
                    f"{kind.value} is not a legal reply to {target.kind.value}",
                )
            ]

    # politeness: pending requests to this speaker outrank everything
    if kind is not K.PASS:
        mine = open_obligations(state, speaker)
        if mine and (move.target is None or move.target not in {o.request for o in mine}):
            owed = ", ".join(str(o.request) for o in mine)
            return [
                Violation(
                    "POLITENESS_BLOCK",
                    f"{speaker} must first answer open request(s) {owed}",
                )
            ]

    if kind in CONTENT_KINDS and fingerprint(speaker, move) in state.seen:
        return [Violation("REPEAT_MOVE", "this exact move was already made")]

    violation = _check_categories(state, move)
    if violation:
        return [violation]

    if target is not None:
        violation = _check_target_relations(state, speaker, move, target)
        if violation:
            return [violation]

    violation = _check_provenance(state, speaker, move)
    if violation:
        return [violation]

    return []


def validate_opening(state: DialogueState, turn: Turn) -> list[Violation]:
    """Shape checks for the commencement turn: observation, verdict, advice,
    concern, in that order, untargeted, then pass."""
    problems = _turn_shape(turn)
    if problems:
        return problems
    body = turn.moves[:-1]
    kinds = [m.kind for m in body]
    for required in OPENING_SEQUENCE:
        if required not in kinds:
            return [
                Violation(
                    "MISSING_OPENING_LOCUTION",
                    f"opening turn lacks {required.value}",
                )
            ]
    if tuple(kinds) != OPENING_SEQUENCE:
        return [
            Violation(
                "ORDER_VIOLATION",
                "opening must be observation, verdict, advise, concern, pass",
            )
        ]
    for index, move in enumerate(body):
        if move.target is not None:
            return [Violation("TARGET_NOT_NULL", "opening locutions take no target", index)]
        if move.prompt_targets:
            return [Violation("CONTENT_FORBIDDEN", "opening locutions name no locutions", index)]
        if not move.content:
            return [Violation("CONTENT_EMPTY", f"{move.kind.value} needs content", index)]
        violation = _check_categories(state, move)
        if violation:
            return [replace(violation, move_index=index)]
    return []


def _turn_shape(turn: Turn) -> list[Violation]:
    moves = turn.moves
    if not moves or moves[-1].kind is not K.PASS:
        return [Violation("TURN_SHAPE", "a turn ends with a single pass")]
    if sum(1 for m in moves if m.kind is K.PASS) != 1:
        return [Violation("TURN_SHAPE", "exactly one pass per turn")]
    if len(moves) < 2:
        return [Violation("TURN_SHAPE", "a turn needs at least one locution before the pass")]
    return []


def _canonical_move(move: Move) -> Move:
    return replace(
        move,
        content=frozenset(canonicalize(f) for f in move.content),
        prompt_targets=tuple(sorted(set(move.prompt_targets))),
    )


def _apply_move(state: DialogueState, speaker: str, move: Move) -> DialogueState:
    locution = Locution(
        id=len(state.history) + 1,
        turn=state.turn_count + 1,
        speaker=speaker,
        kind=move.kind,
        content=move.content,
        target=move.target,
        prompt_targets=move.prompt_targets,
    )

    categories = state.categories
    fresh = [f for f in move.content if not is_rule_like(f) and f not in categories]
    if fresh:
        categories = dict(categories)
        for formula in fresh:
            categories[formula] = _INTRO_CATEGORY[move.kind]

    obligations = state.obligations
    if move.kind in WH_REQUESTS:
        debtor = state.locution(move.target).speaker  # type: ignore[union-attr]
        obligations = obligations + (Obligation(debtor, locution.id),)
    elif move.target is not None:
        request = state.locution(move.target)
        if request is not None and request.kind in WH_REQUESTS:
            if move.kind in DISCHARGING_REPLIES[request.kind]:
                obligations = tuple(
                    replace(o, discharged=True)
                    if not o.discharged and o.request == move.target and o.debtor == speaker
                    else o
                    for o in obligations
                )

    ledger = apply_commitment_effects(state.ledger, locution, state.history)

    stage, consent = state.stage, state.consent
    if move.kind is K.END:
        stage = DialogueStage.TERMINATION
        consent = consent | {speaker}
    elif move.kind is K.PROMPT and stage is DialogueStage.TERMINATION:
        stage = DialogueStage.PROGRESS
        consent = frozenset()

    seen = state.seen
    if move.kind in CONTENT_KINDS:
        seen = seen | {fingerprint(speaker, move)}

    return replace(
        state,
        history=state.history + (locution,),
        obligations=obligations,
        ledger=ledger,
        stage=stage,
        consent=consent,
        categories=categories,
        seen=seen,
    )


def apply_turn(state: DialogueState, turn: Turn) -> DialogueState:
    """Validate and apply a whole turn; rejection leaves the state untouched."""
    if turn.speaker not in state.participants:
        raise TurnRejected([Violation("UNKNOWN_PARTICIPANT", f"{turn.speaker!r} has not joined")])
    if state.stage is DialogueStage.CLOSED:
        raise TurnRejected([Violation("STAGE", "dialogue is closed")])

    moves = tuple(_canonical_move(m) for m in turn.moves)

    if state.stage is DialogueStage.COMMENCEMENT:
        problems = validate_opening(state, Turn(turn.speaker, moves))
        if problems:
            raise TurnRejected(problems)
        current = state
        for move in moves:
            current = _apply_move(current, turn.speaker, move)
    else:
        problems = _turn_shape(Turn(turn.speaker, moves))
        if problems:
            raise TurnRejected(problems)
        current = state
        for index, move in enumerate(moves):
            found = validate_move(current, turn.speaker, move)
            if found:
                raise TurnRejected([replace(v, move_index=index) for v in found])
            current = _apply_move(current, turn.speaker, move)

    current = replace(current, turn_count=current.turn_count + 1)
    if current.stage is DialogueStage.COMMENCEMENT:
        current = replace(current, stage=DialogueStage.PROGRESS)
    elif current.stage is DialogueStage.TERMINATION and current.consent >= set(current.participants):
        ledger = close_ledger(
            current.ledger,
            current.history,
            current.config.conflict_policy,
            current.config.closure_mode,
            dialogue_closed=True,
        )
        current = replace(current, stage=DialogueStage.CLOSED, ledger=ledger)
    return current


def validate_turn(state: DialogueState, turn: Turn) -> list[Violation]:
    """Dry-run of :func:`apply_turn`: the violations it would reject with."""
    try:
        apply_turn(state, turn)
    except TurnRejected as exc:
        return exc.violations
    return []
