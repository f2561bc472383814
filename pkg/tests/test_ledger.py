import pytest

from edg.lang import ConflictMode, ConflictPolicy, parse_formula
from edg.ledger import (
    ChallengeRecord,
    ClosureBeforeTermination,
    ClosureMode,
    LedgerClosed,
    apply_commitment_effects,
    challenge_resolved,
    close_ledger,
    new_ledger,
    unresolved_challenges,
)
from edg.locutions import Locution, LocutionKind as K


def f(text):
    return parse_formula(text)


class Dialogue:
    """Tiny harness: apply locutions in order, tracking ids and history."""

    def __init__(self, *names):
        self.ledger = new_ledger(names)
        self.history = []

    def say(self, speaker, kind, content=(), target=None):
        loc = Locution(
            id=len(self.history) + 1,
            turn=len(self.history) + 1,
            speaker=speaker,
            kind=kind,
            content=frozenset(f(t) for t in content),
            target=target,
        )
        self.ledger = apply_commitment_effects(self.ledger, loc, self.history)
        self.history.append(loc)
        return loc.id


def test_content_moves_fill_own_store_only():
    d = Dialogue("a", "b")
    d.say("a", K.OBSERVATION, ["temp(high)"])
    d.say("b", K.VERDICT, ["dx(flu)"])
    assert d.ledger.store_of("a") == {f("temp(high)")}
    assert d.ledger.store_of("b") == {f("dx(flu)")}
    assert d.ledger.agreement == frozenset()


def test_agree_feeds_agreement_and_own_store():
    d = Dialogue("a", "b")
    d.say("a", K.OBSERVATION, ["temp(high)"])
    d.say("b", K.AGREE, ["temp(high)"], target=1)
    assert f("temp(high)") in d.ledger.store_of("b")
    assert d.ledger.agreement == {f("temp(high)")}
    assert d.ledger.committers(f("temp(high)")) == {"a", "b"}


def test_request_withdraws_agreement_and_records_challenge():
    d = Dialogue("a", "b")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.AGREE, ["dx(flu)"], target=1)
    d.say("b", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    assert d.ledger.agreement == frozenset()
    (record,) = d.ledger.challenges
    assert record.formula == f("dx(flu)")
    assert record.was_agreed is True
    assert record.via_kind is K.WH_JUSTIFY


def test_retract_removes_everywhere():
    d = Dialogue("a", "b")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.AGREE, ["dx(flu)"], target=1)
    d.say("b", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    d.say("a", K.RETRACT, ["dx(flu)"], target=3)
    assert f("dx(flu)") not in d.ledger.store_of("a")
    assert f("dx(flu)") not in d.ledger.agreement
    # b agreed earlier, so b's copy survives the author's retraction
    assert d.ledger.committers(f("dx(flu)")) == {"b"}


def test_assert_against_explanation_challenges_it():
    d = Dialogue("a", "b")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    d.say("a", K.JUSTIFY, ["temp(high) -> dx(flu)"], target=2)
    d.say("b", K.ASSERT, ["!(temp(high) -> dx(flu))"], target=3)
    challenged = {r.formula for r in d.ledger.challenges if r.via_kind is K.ASSERT}
    assert challenged == {f("temp(high) -> dx(flu)")}
    # the counter-claim still lands in the asserter's store
    assert f("!(temp(high) -> dx(flu))") in d.ledger.store_of("b")


def test_assert_against_observation_adds_no_challenge():
    d = Dialogue("a", "b")
    d.say("a", K.OBSERVATION, ["temp(high)"])
    d.say("b", K.ASSERT, ["temp(high) -> dx(flu)"], target=1)
    assert d.ledger.challenges == ()


def test_agreed_challenge_needs_explicit_re_agreement():
    d = Dialogue("a", "b", "c")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.AGREE, ["dx(flu)"], target=1)
    d.say("c", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    d.say("a", K.JUSTIFY, ["temp(high) -> dx(flu)"], target=3)
    d.say("b", K.AGREE, ["temp(high) -> dx(flu)"], target=4)
    (record,) = [r for r in d.ledger.challenges]
    # the reply was agreed, but the withdrawn agreement itself was not
    assert not challenge_resolved(record, d.history)
    d.say("c", K.AGREE, ["dx(flu)"], target=1)
    assert challenge_resolved(record, d.history)


def test_question_settled_by_third_party_agreement_on_reply():
    d = Dialogue("a", "b", "c")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    d.say("a", K.JUSTIFY, ["temp(high) -> dx(flu)"], target=2)
    (record,) = d.ledger.challenges
    assert not challenge_resolved(record, d.history)
    d.say("c", K.AGREE, ["temp(high) -> dx(flu)"], target=3)
    assert challenge_resolved(record, d.history)
    assert unresolved_challenges(d.ledger, d.history) == ()


def test_reply_agreed_only_by_replier_settles_nothing():
    d = Dialogue("a", "b")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    d.say("a", K.JUSTIFY, ["temp(high) -> dx(flu)"], target=2)
    (record,) = d.ledger.challenges
    history = list(d.history)
    history.append(
        Locution(
            id=4,
            turn=4,
            speaker="a",
            kind=K.AGREE,
            content=frozenset({f("temp(high) -> dx(flu)")}),
            target=3,
        )
    )
    assert not challenge_resolved(record, history)


def test_assert_challenge_needs_agreement_on_the_formula():
    record = ChallengeRecord(
        formula=f("temp(high) -> dx(flu)"),
        challenged_by="b",
        via=4,
        via_kind=K.ASSERT,
        was_agreed=False,
    )
    reply_then_agreement = [
        Locution(
            id=5,
            turn=5,
            speaker="a",
            kind=K.AGREE,
            content=frozenset({f("other")}),
            target=4,
        )
    ]
    assert not challenge_resolved(record, reply_then_agreement)


def test_closure_requires_termination():
    d = Dialogue("a", "b")
    with pytest.raises(ClosureBeforeTermination):
        close_ledger(
            d.ledger,
            d.history,
            ConflictPolicy(),
            ClosureMode.UNION_MINUS_CONFLICTS,
            dialogue_closed=False,
        )


def test_closure_union_drops_conflicting_pairs():
    d = Dialogue("a", "b")
    d.say("a", K.OBSERVATION, ["temp(high)"])
    d.say("b", K.OBSERVATION, ["!temp(high)"])
    closed = close_ledger(
        d.ledger,
        d.history,
        ConflictPolicy(),
        ClosureMode.UNION_MINUS_CONFLICTS,
        dialogue_closed=True,
    )
    assert closed.closed
    assert closed.agreement == frozenset()


def test_closure_existing_agreement_beats_candidate():
    d = Dialogue("a", "b")
    d.say("a", K.OBSERVATION, ["temp(high)"])
    d.say("b", K.AGREE, ["temp(high)"], target=1)
    d.say("b", K.OBSERVATION, ["!temp(high)"])
    closed = close_ledger(
        d.ledger,
        d.history,
        ConflictPolicy(),
        ClosureMode.UNION_MINUS_CONFLICTS,
        dialogue_closed=True,
    )
    assert closed.agreement == {f("temp(high)")}


def test_challenge_aware_veto_unblocks_rival():
    policy = ConflictPolicy(
        mode=ConflictMode.NEGATION_PLUS_EXCLUSION_GROUPS,
        exclusion_groups=(
            frozenset({f("dx(flu)").atom, f("dx(cold)").atom}),
        ),
    )
    d = Dialogue("a", "b")
    d.say("a", K.VERDICT, ["dx(flu)"])
    d.say("b", K.VERDICT, ["dx(cold)"])
    d.say("b", K.WH_JUSTIFY, ["dx(flu)"], target=1)
    aware = close_ledger(
        d.ledger, d.history, policy, ClosureMode.CHALLENGE_AWARE, dialogue_closed=True
    )
    assert aware.agreement == {f("dx(cold)")}
    blind = close_ledger(
        d.ledger,
        d.history,
        policy,
        ClosureMode.UNION_MINUS_CONFLICTS,
        dialogue_closed=True,
    )
    assert blind.agreement == frozenset()


def test_closed_ledger_is_frozen():
    d = Dialogue("a", "b")
    d.say("a", K.OBSERVATION, ["temp(high)"])
    closed = close_ledger(
        d.ledger,
        d.history,
        ConflictPolicy(),
        ClosureMode.UNION_MINUS_CONFLICTS,
        dialogue_closed=True,
    )
    assert close_ledger(
        closed,
        d.history,
        ConflictPolicy(),
        ClosureMode.UNION_MINUS_CONFLICTS,
        dialogue_closed=True,
    ) is closed
    with pytest.raises(LedgerClosed):
        apply_commitment_effects(closed, d.history[0], [])


def test_store_lookup_guards():
    ledger = new_ledger(["a"])
    with pytest.raises(KeyError):
        ledger.store_of("ghost")
    assert not ledger.committed_anywhere(f("x"))
