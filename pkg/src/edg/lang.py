"""Content language for expert dialogue sessions.

Formulas are ground: atoms over identifier-or-number terms (one level of
nesting allowed), their negations, and defeasible rules mapping a conjunction
of literals to a single positive atom.  A negated rule is a distinguished
wrapper so that a counter-assertion against a rule stays a first-class
formula.  Everything is hashable and kept in canonical form so commitment
stores can be plain sets.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

_PREDICATE = re.compile(r"[a-z][a-zA-Z0-9_]*$")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER = re.compile(r"-?[0-9]+$")

Term = "int | str | Atom"


class FormulaSyntaxError(ValueError):
    """Raised on malformed formula text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at {position})")
        self.position = position


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[int | str | Atom, ...] = ()

    def __post_init__(self) -> None:
        if not _PREDICATE.match(self.predicate):
            raise ValueError(f"bad predicate {self.predicate!r}")
        normalized = []
        changed = False
        for arg in self.args:
            if isinstance(arg, Atom):
                # one level of nesting only
                for inner in arg.args:
                    if isinstance(inner, Atom):
                        raise ValueError("terms nest at most one level")
                if not arg.args:
                    # a zero-arg term is textually just a constant
                    arg = arg.predicate
                    changed = True
            normalized.append(arg)
        if changed:
            object.__setattr__(self, "args", tuple(normalized))

    def render(self) -> str:
        if not self.args:
            return self.predicate
        parts = []
        for arg in self.args:
            parts.append(arg.render() if isinstance(arg, Atom) else str(arg))
        return f"{self.predicate}({','.join(parts)})"

    def predicates(self) -> frozenset[str]:
        inner = [a.predicate for a in self.args if isinstance(a, Atom)]
        return frozenset([self.predicate, *inner])


@dataclass(frozen=True)
class PositiveAtom:
    atom: Atom

    def render(self) -> str:
        return self.atom.render()


@dataclass(frozen=True)
class NegatedAtom:
    atom: Atom

    def render(self) -> str:
        return "!" + self.atom.render()


Literal = "PositiveAtom | NegatedAtom"


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[PositiveAtom | NegatedAtom, ...]
    consequent: Atom

    def __post_init__(self) -> None:
        if not self.antecedent:
            raise ValueError("rule needs a non-empty antecedent")

    def render(self) -> str:
        body = " & ".join(lit.render() for lit in self.antecedent)
        return f"{body} -> {self.consequent.render()}"


@dataclass(frozen=True)
class NegatedRule:
    rule: Rule

    def render(self) -> str:
        return f"!({self.rule.render()})"


Formula = "PositiveAtom | NegatedAtom | Rule | NegatedRule"
FORMULA_TYPES = (PositiveAtom, NegatedAtom, Rule, NegatedRule)


def render(formula) -> str:
    return formula.render()


def canonicalize(formula):
    """Canonical form: rule antecedents deduplicated and sorted by text."""
    if isinstance(formula, Rule):
        lits = sorted(set(formula.antecedent), key=lambda lit: lit.render())
        return Rule(tuple(lits), formula.consequent)
    if isinstance(formula, NegatedRule):
        return NegatedRule(canonicalize(formula.rule))
    return formula


def predicates_of(formula) -> frozenset[str]:
    """All predicate symbols mentioned, including inside rules and nesting."""
    if isinstance(formula, (PositiveAtom, NegatedAtom)):
        return formula.atom.predicates()
    if isinstance(formula, Rule):
        out = formula.consequent.predicates()
        for lit in formula.antecedent:
            out |= lit.atom.predicates()
        return out
    return predicates_of(formula.rule)


def related(a, b) -> bool:
    """Two formulas are related when they share a predicate symbol."""
    return bool(predicates_of(a) & predicates_of(b))


class ContentCategory(enum.Enum):
    OBSERVATION = "observation"
    VERDICT = "verdict"
    EVALUATIVE = "evaluative"
    REMEDIAL = "remedial"
    CONCERN = "concern"
    FACT = "fact"
    RULE = "rule"


# advice and the topic set are views over base categories, never stored
ADVICE = frozenset({ContentCategory.EVALUATIVE, ContentCategory.REMEDIAL})
TOPIC = frozenset(
    {
        ContentCategory.VERDICT,
        ContentCategory.EVALUATIVE,
        ContentCategory.REMEDIAL,
        ContentCategory.CONCERN,
    }
)


# ---------------------------------------------------------------------------
# parsing

class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise FormulaSyntaxError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def eat(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def eat_arrow(self) -> bool:
        self.skip_ws()
        if self.text.startswith("->", self.pos):
            self.pos += 2
            return True
        return False

    def token(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] in "_-"
        ):
            if self.text[self.pos] == "-" and self.text.startswith("->", self.pos):
                break
            self.pos += 1
        if self.pos == start:
            raise FormulaSyntaxError("expected a term", start)
        return self.text[start : self.pos]

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _parse_term(sc: _Scanner, depth: int):
    word = sc.token()
    if _NUMBER.match(word):
        return int(word)
    if not _IDENT.match(word):
        raise FormulaSyntaxError(f"bad term {word!r}", sc.pos)
    if sc.peek() == "(":
        if depth > 1:
            raise FormulaSyntaxError("terms nest at most one level", sc.pos)
        if not _PREDICATE.match(word):
            raise FormulaSyntaxError(f"bad predicate {word!r}", sc.pos)
        return _parse_nested_atom(sc, word, depth)
    return word


def _parse_nested_atom(sc: _Scanner, predicate: str, depth: int) -> Atom:
    sc.expect("(")
    args: list[int | str | Atom] = []
    if sc.peek() != ")":
        while True:
            args.append(_parse_term(sc, depth + 1))
            if not sc.eat(","):
                break
    sc.expect(")")
    return Atom(predicate, tuple(args))


def _parse_atom(sc: _Scanner) -> Atom:
    word = sc.token()
    if not _PREDICATE.match(word):
        raise FormulaSyntaxError(f"bad predicate {word!r}", sc.pos)
    if sc.peek() == "(":
        return _parse_nested_atom(sc, word, 0)
    return Atom(word)


def _parse_literal(sc: _Scanner):
    if sc.eat("!"):
        return NegatedAtom(_parse_atom(sc))
    return PositiveAtom(_parse_atom(sc))


def parse_formula_set(text: str):
    """Parse formula text into one or more canonical formulas.

    A rule whose consequent is a conjunction is normalized into one rule per
    consequent atom, which is why the result is a tuple.
    """
    sc = _Scanner(text)
    negated_rule = False
    if sc.peek() == "!":
        mark = sc.pos
        sc.pos += 1
        if sc.eat("("):
            negated_rule = True
        else:
            sc.pos = mark
    literals = [_parse_literal(sc)]
    while sc.eat("&"):
        literals.append(_parse_literal(sc))
    if sc.eat_arrow():
        consequents = [_parse_atom(sc)]
        while sc.eat("&"):
            consequents.append(_parse_atom(sc))
        if negated_rule:
            sc.expect(")")
        if not sc.at_end():
            raise FormulaSyntaxError("trailing input", sc.pos)
        rules = [Rule(tuple(literals), c) for c in consequents]
        if negated_rule:
            if len(rules) > 1:
                raise FormulaSyntaxError("negated rule must have a single consequent", sc.pos)
            return (canonicalize(NegatedRule(rules[0])),)
        return tuple(canonicalize(r) for r in rules)
    if negated_rule:
        raise FormulaSyntaxError("expected a rule inside !(...)", sc.pos)
    if len(literals) > 1:
        raise FormulaSyntaxError("conjunction only allowed inside rules", sc.pos)
    if not sc.at_end():
        raise FormulaSyntaxError("trailing input", sc.pos)
    return (literals[0],)


def parse_formula(text: str):
    """Parse text denoting exactly one formula."""
    formulas = parse_formula_set(text)
    if len(formulas) != 1:
        raise FormulaSyntaxError("text denotes several rules; one expected", 0)
    return formulas[0]


def is_rule_like(formula) -> bool:
    return isinstance(formula, (Rule, NegatedRule))


# ---------------------------------------------------------------------------
# conflicts

class ConflictMode(enum.Enum):
    NEGATION_ONLY = "negation-only"
    NEGATION_PLUS_EXCLUSION_GROUPS = "negation-plus-exclusion-groups"


@dataclass(frozen=True)
class ConflictPolicy:
    """Which pairs of formulas count as conflicting.

    Logical negation always conflicts; exclusion groups add mutual exclusion
    between chosen positive atoms (e.g. competing verdicts).
    """

    mode: ConflictMode = ConflictMode.NEGATION_ONLY
    exclusion_groups: tuple[frozenset[Atom], ...] = ()

    def __post_init__(self) -> None:
        seen: set[Atom] = set()
        for group in self.exclusion_groups:
            if len(group) < 2:
                raise ValueError("exclusion group needs at least two atoms")
            for member in group:
                if not isinstance(member, Atom):
                    raise ValueError("exclusion groups contain bare atoms only")
            if seen & group:
                raise ValueError("exclusion groups must be pairwise disjoint")
            seen |= group

    def excludes(self, a: Atom, b: Atom) -> bool:
        if self.mode is not ConflictMode.NEGATION_PLUS_EXCLUSION_GROUPS:
            return False
        if a == b:
            return False
        return any(a in g and b in g for g in self.exclusion_groups)


def in_conflict(a, b, policy: ConflictPolicy) -> bool:
    if isinstance(a, PositiveAtom) and isinstance(b, NegatedAtom):
        return a.atom == b.atom
    if isinstance(a, NegatedAtom) and isinstance(b, PositiveAtom):
        return a.atom == b.atom
    if isinstance(a, Rule) and isinstance(b, NegatedRule):
        return a == b.rule
    if isinstance(a, NegatedRule) and isinstance(b, Rule):
        return a.rule == b
    if isinstance(a, PositiveAtom) and isinstance(b, PositiveAtom):
        return policy.excludes(a.atom, b.atom)
    return False


# ---------------------------------------------------------------------------
# knowledge bases and the corpus file format

@dataclass
class KnowledgeBase:
    """A participant's private, categorized formula collection."""

    owner: str
    entries: dict = field(default_factory=dict)

    def add(self, formula, category: ContentCategory) -> None:
        formula = canonicalize(formula)
        have = self.entries.get(formula)
        if have is not None and have is not category:
            raise ValueError(f"{formula.render()} already filed under {have.value}")
        self.entries[formula] = category

    def formulas(self) -> frozenset:
        return frozenset(self.entries)

    def category(self, formula) -> ContentCategory | None:
        return self.entries.get(canonicalize(formula))


_CORPUS_LINE = re.compile(r"^(?P<id>[A-Za-z0-9_!']+)\s*:\s*(?P<body>.*?)\s*@(?P<cat>[a-z]+)$")


@dataclass(frozen=True)
class Corpus:
    """Named formulas with categories, as read from a ``.edg`` corpus file.

    One id may map to several formulas when its source text had a
    conjunctive rule consequent.
    """

    entries: tuple[tuple[str, tuple, ContentCategory], ...]

    def __post_init__(self) -> None:
        seen = set()
        for ident, _, _ in self.entries:
            if ident in seen:
                raise ValueError(f"duplicate corpus id {ident!r}")
            seen.add(ident)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(ident for ident, _, _ in self.entries)

    def formulas(self, ident: str) -> tuple:
        base = ident[1:] if ident.startswith("!") else ident
        for name, formulas, _ in self.entries:
            if name == base:
                if not ident.startswith("!"):
                    return formulas
                if len(formulas) != 1 or not isinstance(formulas[0], Rule):
                    raise KeyError(f"{ident!r}: only a single rule can be negated")
                return (NegatedRule(formulas[0]),)
        raise KeyError(ident)

    def expand(self, idents) -> frozenset:
        out: set = set()
        for ident in idents:
            out.update(self.formulas(ident))
        return frozenset(out)

    def categories(self) -> dict:
        out: dict = {}
        for _, formulas, category in self.entries:
            for formula in formulas:
                out[formula] = category
        return out

    def label_for(self, formula) -> str | None:
        """Reverse lookup: the corpus id a formula came from, if any."""
        for name, formulas, _ in self.entries:
            if formula in formulas:
                return name
            if (
                isinstance(formula, NegatedRule)
                and len(formulas) == 1
                and formulas[0] == formula.rule
            ):
                return "!" + name
        return None


def parse_corpus(text: str) -> Corpus:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _CORPUS_LINE.match(line)
        if m is None:
            raise FormulaSyntaxError(f"bad corpus line {lineno}: {raw!r}", lineno)
        try:
            category = ContentCategory(m.group("cat"))
        except ValueError:
            raise FormulaSyntaxError(f"unknown category @{m.group('cat')} on line {lineno}", lineno)
        formulas = parse_formula_set(m.group("body"))
        entries.append((m.group("id"), formulas, category))
    return Corpus(tuple(entries))


def load_corpus(path: str | Path) -> Corpus:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))
