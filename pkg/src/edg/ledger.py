"""Commitment bookkeeping for a dialogue.

Each participant owns a commitment store; the group shares one agreement
store.  Content-bearing moves update the speaker's store, agreement moves
feed the agreement store, requests withdraw earlier agreement on the
questioned formulas, and retraction removes a formula everywhere.  When the
dialogue closes, everything still standing in somebody's store is merged
into the agreement store minus challenged and conflicting formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .lang import ConflictPolicy, in_conflict
from .locutions import (
    EXPLANATION_REPLIES,
    WH_REQUESTS,
    LocutionKind,
    Locution,
)

import enum


class ClosureMode(enum.Enum):
    UNION_MINUS_CONFLICTS = "union-minus-conflicts"
    CHALLENGE_AWARE = "challenge-aware"


class ClosureBeforeTermination(RuntimeError):
    pass


class LedgerClosed(RuntimeError):
    pass


@dataclass(frozen=True)
class ChallengeRecord:
    """A formula somebody has put in question.

    ``was_agreed`` records whether the formula sat in the agreement store at
    challenge time: withdrawn agreements need an explicit re-agreement, while
    a merely questioned claim is also redeemed when a reply answering the
    challenge is later agreed by a third party.
    """

    formula: object
    challenged_by: str
    via: int
    via_kind: LocutionKind
    was_agreed: bool


@dataclass(frozen=True)
class Ledger:
    stores: dict = field(default_factory=dict)
    agreement: frozenset = frozenset()
    challenges: tuple[ChallengeRecord, ...] = ()
    closed: bool = False

    def store_of(self, participant: str) -> frozenset:
        if participant not in self.stores:
            raise KeyError(f"unknown participant {participant!r}")
        return self.stores[participant]

    def committed_anywhere(self, formula) -> bool:
        return any(formula in s for s in self.stores.values())

    def committers(self, formula) -> frozenset[str]:
        return frozenset(p for p, s in self.stores.items() if formula in s)


def new_ledger(participants) -> Ledger:
    return Ledger(stores={p: frozenset() for p in participants})


def _with_store(ledger: Ledger, participant: str, store: frozenset) -> Ledger:
    stores = dict(ledger.stores)
    stores[participant] = store
    return replace(ledger, stores=stores)


def apply_commitment_effects(ledger: Ledger, locution: Locution, history) -> Ledger:
    """Update the ledger for one accepted locution.

    ``history`` is the dialogue history up to but not including ``locution``;
    it is needed to find the content of the locution a challenge targets.
    """
    if ledger.closed:
        raise LedgerClosed("dialogue already closed")
    kind = locution.kind
    K = LocutionKind

    if kind in WH_REQUESTS:
        # no store change, but agreement on the questioned formulas is
        # withdrawn and the question goes on record
        records = list(ledger.challenges)
        for formula in locution.content:
            records.append(
                ChallengeRecord(
                    formula=formula,
                    challenged_by=locution.speaker,
                    via=locution.id,
                    via_kind=kind,
                    was_agreed=formula in ledger.agreement,
                )
            )
        agreement = ledger.agreement - locution.content
        return replace(ledger, agreement=agreement, challenges=tuple(records))

    if kind is K.AGREE:
        store = ledger.store_of(locution.speaker) | locution.content
        out = _with_store(ledger, locution.speaker, store)
        return replace(out, agreement=out.agreement | locution.content)

    if kind is K.RETRACT:
        store = ledger.store_of(locution.speaker) - locution.content
        out = _with_store(ledger, locution.speaker, store)
        return replace(out, agreement=out.agreement - locution.content)

    if kind is K.ASSERT:
        store = ledger.store_of(locution.speaker) | locution.content
        out = _with_store(ledger, locution.speaker, store)
        target = _find(history, locution.target)
        if target is not None and target.kind in EXPLANATION_REPLIES:
            # a counter-assertion against an explanation challenges it
            records = list(out.challenges)
            for formula in target.content:
                records.append(
                    ChallengeRecord(
                        formula=formula,
                        challenged_by=locution.speaker,
                        via=locution.id,
                        via_kind=kind,
                        was_agreed=formula in out.agreement,
                    )
                )
            out = replace(out, challenges=tuple(records))
        return out

    if kind in (K.OBSERVATION, K.VERDICT, K.ADVISE, K.CONCERN) or kind in EXPLANATION_REPLIES:
        store = ledger.store_of(locution.speaker) | locution.content
        return _with_store(ledger, locution.speaker, store)

    # prompt, end, pass leave the ledger alone
    return ledger


def _find(history, locution_id):
    if locution_id is None:
        return None
    for loc in history:
        if loc.id == locution_id:
            return loc
    return None


def challenge_resolved(record: ChallengeRecord, history) -> bool:
    """Whether a challenge has been answered to the group's satisfaction.

    A later agreement covering the formula always settles it.  A question
    about a formula that was never agreed is also settled when some reply
    answering the question was itself later agreed by somebody other than
    the replier.
    """
    for loc in history:
        if loc.id > record.via and loc.kind is LocutionKind.AGREE and record.formula in loc.content:
            return True
    if record.was_agreed or record.via_kind not in WH_REQUESTS:
        return False
    for reply in history:
        if reply.target != record.via or reply.kind not in EXPLANATION_REPLIES:
            continue
        if not reply.content:
            continue
        if all(
            any(
                loc.id > reply.id
                and loc.kind is LocutionKind.AGREE
                and loc.speaker != reply.speaker
                and formula in loc.content
                for loc in history
            )
            for formula in reply.content
        ):
            return True
    return False


def unresolved_challenges(ledger: Ledger, history) -> tuple[ChallengeRecord, ...]:
    return tuple(r for r in ledger.challenges if not challenge_resolved(r, history))


def close_ledger(
    ledger: Ledger,
    history,
    policy: ConflictPolicy,
    mode: ClosureMode,
    *,
    dialogue_closed: bool,
) -> Ledger:
    """Merge every standing commitment into the agreement store.

    Candidates conflicting with an existing agreement lose to it; candidates
    conflicting with each other are both dropped.  In the default
    challenge-aware mode, formulas with an unresolved challenge are dropped
    first, so a questioned claim never blocks its defended rival.
    """
    if not dialogue_closed:
        raise ClosureBeforeTermination("dialogue has not completed the termination protocol")
    if ledger.closed:
        return ledger

    union: set = set()
    for store in ledger.stores.values():
        union |= store
    candidates = union - ledger.agreement

    if mode is ClosureMode.CHALLENGE_AWARE:
        vetoed = {r.formula for r in unresolved_challenges(ledger, history)}
        candidates -= vetoed

    survivors = {
        c for c in candidates if not any(in_conflict(c, a, policy) for a in ledger.agreement)
    }
    contested = {
        c for c in survivors if any(in_conflict(c, other, policy) for other in survivors)
    }
    survivors -= contested

    return replace(ledger, agreement=ledger.agreement | survivors, closed=True)
