"""Locution vocabulary: the sixteen move kinds and their static rules.

The reply matrix, per-kind content category sets and reply-content relations
are all data here; the state machine in :mod:`edg.protocol` interprets them
against a live dialogue.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .lang import ADVICE, TOPIC, ContentCategory


class LocutionKind(enum.Enum):
    OBSERVATION = "observation"
    VERDICT = "verdict"
    ADVISE = "advise"
    CONCERN = "concern"
    ASSERT = "assert"
    WH_EXPLAIN = "wh-explain"
    WH_JUSTIFY = "wh-justify"
    WH_CLARIFY = "wh-clarify"
    EXPLAIN = "explain"
    JUSTIFY = "justify"
    CLARIFY = "clarify"
    AGREE = "agree"
    RETRACT = "retract"
    PROMPT = "prompt"
    END = "end"
    PASS = "pass"


K = LocutionKind

OPENING_SEQUENCE = (K.OBSERVATION, K.VERDICT, K.ADVISE, K.CONCERN)
WH_REQUESTS = frozenset({K.WH_EXPLAIN, K.WH_JUSTIFY, K.WH_CLARIFY})
EXPLANATION_REPLIES = frozenset({K.EXPLAIN, K.JUSTIFY, K.CLARIFY})
MANAGEMENT = frozenset({K.PROMPT, K.END, K.PASS})
CONTENT_KINDS = frozenset(K) - MANAGEMENT

# requests are answered by exactly one kind of explanation reply, plus
# retract for a challenged claim the speaker gives up on
DISCHARGING_REPLIES: dict[LocutionKind, frozenset[LocutionKind]] = {
    K.WH_EXPLAIN: frozenset({K.EXPLAIN}),
    K.WH_JUSTIFY: frozenset({K.JUSTIFY, K.RETRACT}),
    K.WH_CLARIFY: frozenset({K.CLARIFY}),
}

# which kinds may reply to which: the legality matrix the composer offers
REPLY_MATRIX: dict[LocutionKind, frozenset[LocutionKind]] = {
    K.OBSERVATION: frozenset({K.AGREE, K.OBSERVATION, K.ASSERT, K.WH_CLARIFY}),
    K.VERDICT: frozenset({K.AGREE, K.WH_EXPLAIN, K.WH_JUSTIFY, K.VERDICT}),
    K.ADVISE: frozenset({K.AGREE, K.WH_EXPLAIN, K.WH_JUSTIFY, K.WH_CLARIFY, K.ADVISE}),
    K.CONCERN: frozenset({K.AGREE, K.WH_JUSTIFY, K.WH_EXPLAIN, K.WH_CLARIFY}),
    K.ASSERT: frozenset({K.AGREE, K.ASSERT}),
    K.WH_EXPLAIN: frozenset({K.EXPLAIN}),
    K.WH_JUSTIFY: frozenset({K.JUSTIFY, K.RETRACT}),
    K.WH_CLARIFY: frozenset({K.CLARIFY}),
    K.EXPLAIN: frozenset({K.AGREE, K.ASSERT, K.WH_CLARIFY, K.EXPLAIN}),
    K.JUSTIFY: frozenset({K.AGREE, K.ASSERT, K.WH_EXPLAIN, K.WH_CLARIFY, K.JUSTIFY}),
    K.CLARIFY: frozenset({K.AGREE, K.ASSERT, K.WH_EXPLAIN, K.WH_JUSTIFY, K.CLARIFY}),
    K.AGREE: frozenset(),
    K.RETRACT: frozenset(),
    K.PROMPT: frozenset(),
    K.END: frozenset({K.END, K.PROMPT}),
    K.PASS: frozenset(),
}

C = ContentCategory
_ALL = frozenset(C)
_H = frozenset({C.OBSERVATION})
_O = TOPIC
_F = frozenset({C.RULE})
_KF = frozenset({C.FACT, C.RULE})

# per-kind admissible content categories, the union of every set the
# legality table attaches to the kind anywhere; justify is unconstrained
# because accepted justifications mix observations and concerns with rules
ALLOWED_CATEGORIES: dict[LocutionKind, frozenset[ContentCategory]] = {
    K.OBSERVATION: _H,
    K.VERDICT: frozenset({C.VERDICT}),
    K.ADVISE: ADVICE,
    K.CONCERN: frozenset({C.CONCERN}),
    K.ASSERT: _F,
    K.WH_EXPLAIN: _ALL,
    K.WH_JUSTIFY: _O | _F,
    K.WH_CLARIFY: _H | _O | _F,
    K.EXPLAIN: _KF,
    K.JUSTIFY: _ALL,
    K.CLARIFY: _H | _F,
    K.AGREE: _ALL,
    K.RETRACT: _O | _F,
}

# reply-content relations to the target's content, keyed by
# (target kind, reply kind); absent pairs carry no relation
SUBSET_OF_TARGET = frozenset(
    {
        (K.OBSERVATION, K.WH_CLARIFY),
        (K.VERDICT, K.WH_EXPLAIN),
        (K.VERDICT, K.WH_JUSTIFY),
        (K.ADVISE, K.WH_EXPLAIN),
        (K.ADVISE, K.WH_JUSTIFY),
        (K.CONCERN, K.WH_EXPLAIN),
        (K.CONCERN, K.WH_JUSTIFY),
    }
)
RELATED_TO_TARGET = frozenset(
    {
        (K.ADVISE, K.WH_CLARIFY),
        (K.CONCERN, K.WH_CLARIFY),
        (K.EXPLAIN, K.WH_CLARIFY),
        (K.JUSTIFY, K.WH_EXPLAIN),
        (K.JUSTIFY, K.WH_CLARIFY),
        (K.CLARIFY, K.WH_EXPLAIN),
        (K.CLARIFY, K.WH_JUSTIFY),
    }
)
DISTINCT_FROM_TARGET = frozenset(
    {
        (K.ASSERT, K.ASSERT),
        (K.JUSTIFY, K.ASSERT),
        (K.EXPLAIN, K.ASSERT),
        (K.CLARIFY, K.ASSERT),
        (K.JUSTIFY, K.JUSTIFY),
        (K.EXPLAIN, K.EXPLAIN),
        (K.CLARIFY, K.CLARIFY),
    }
)
# supplemental explanations must come from a third party, not the original
# explainer answering themselves
THIRD_PARTY_PAIRS = frozenset(
    {
        (K.EXPLAIN, K.EXPLAIN),
        (K.JUSTIFY, K.JUSTIFY),
        (K.CLARIFY, K.CLARIFY),
    }
)


def legal_replies(kind: LocutionKind) -> frozenset[LocutionKind]:
    """Reply kinds admitted for a locution of the given kind."""
    return REPLY_MATRIX[kind]


# natural-language skin used by the composer dropdowns and transcripts
LABELS: dict[LocutionKind, str] = {
    K.OBSERVATION: "Patient history is",
    K.VERDICT: "I diagnose",
    K.ADVISE: "I advise",
    K.CONCERN: "I note a concern",
    K.ASSERT: "I assert",
    K.WH_EXPLAIN: "Can you explain",
    K.WH_JUSTIFY: "Can you justify",
    K.WH_CLARIFY: "Can you clarify",
    K.EXPLAIN: "I explain",
    K.JUSTIFY: "I justify",
    K.CLARIFY: "I clarify",
    K.AGREE: "I agree",
    K.RETRACT: "I retract",
    K.PROMPT: "Please respond to",
    K.END: "I think we can close the discussion",
    K.PASS: "I pass",
}


@dataclass(frozen=True)
class Move:
    """A move as submitted: a locution kind plus its content and target."""

    kind: LocutionKind
    content: frozenset = frozenset()
    target: int | None = None
    prompt_targets: tuple[int, ...] = ()


@dataclass(frozen=True)
class Locution:
    """An accepted move in the dialogue history."""

    id: int
    turn: int
    speaker: str
    kind: LocutionKind
    content: frozenset = frozenset()
    target: int | None = None
    prompt_targets: tuple[int, ...] = ()


@dataclass(frozen=True)
class Turn:
    speaker: str
    moves: tuple[Move, ...] = field(default_factory=tuple)


def fingerprint(speaker: str, move: Move) -> tuple:
    return (speaker, move.kind, move.content, move.target, move.prompt_targets)
