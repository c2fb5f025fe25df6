"""Three-valued propositional store with clause constraints and unit propagation.

Facts are interned propositional atoms over person/time/number terms. The only
constraint form is the clause (a disjunction of fact literals); implications
are compiled to clauses, which makes contrapositive reasoning automatic.
Propagation is plain unit propagation to a fixpoint: no search, no guessing.
Every derived assignment records the clause and antecedents that forced it, so
assignments can be explained and premises can be retracted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import MalformedFactError, NotAPremiseError, PremiseConflictError


class Truth(Enum):
    TRUE = "+"
    FALSE = "-"
    UNKNOWN = "?"

    def __str__(self) -> str:
        return self.value

    @property
    def known(self) -> bool:
        return self is not Truth.UNKNOWN

    def negate(self) -> "Truth":
        if self is Truth.TRUE:
            return Truth.FALSE
        if self is Truth.FALSE:
            return Truth.TRUE
        return Truth.UNKNOWN

    @staticmethod
    def of(flag: bool) -> "Truth":
        return Truth.TRUE if flag else Truth.FALSE


@dataclass(frozen=True)
class PersonT:
    """A person term (an incarnation id such as 'p' or 's1')."""

    id: str

    def __str__(self) -> str:
        return self.id


@dataclass(frozen=True)
class TimeT:
    """The time term of a fact. Exactly one per fact."""

    at: Fraction

    def __str__(self) -> str:
        return format_time(self.at)


@dataclass(frozen=True)
class NumT:
    """A plain numeric parameter (e.g. a travel destination)."""

    value: Fraction

    def __str__(self) -> str:
        return format_time(self.value)


Term = PersonT | TimeT | NumT


def format_time(t: Fraction) -> str:
    """Render a rational time compactly: integers bare, others as decimals."""
    if t.denominator == 1:
        return str(t.numerator)
    return repr(float(t))


class Fact:
    """An interned propositional atom. Identity is (predicate, args)."""

    __slots__ = ("predicate", "args", "index", "time")

    def __init__(self, predicate: str, args: tuple[Term, ...], index: int):
        times = [a for a in args if isinstance(a, TimeT)]
        if len(times) != 1:
            raise MalformedFactError(
                f"fact {predicate}{args} must carry exactly one time term, got {len(times)}"
            )
        self.predicate = predicate
        self.args = args
        self.index = index
        self.time = times[0].at

    def __repr__(self) -> str:
        inner = ",".join(str(a) for a in self.args)
        return f"{self.predicate}({inner})"

    def render(self) -> str:
        """Paper-style rendering: the action's slot time trails after '@' when
        the fact carries a non-time parameter before it."""
        persons = [str(a) for a in self.args if isinstance(a, PersonT)]
        nums = [str(a) for a in self.args if isinstance(a, NumT)]
        t = format_time(self.time)
        if nums:
            return f"{self.predicate}({','.join(persons + nums)})@{t}"
        return f"{self.predicate}({','.join(persons + [t])})"


Literal = tuple[Fact, bool]


def lit_str(lit: Literal) -> str:
    fact, pos = lit
    return fact.render() if pos else "~" + fact.render()


@dataclass(frozen=True)
class Clause:
    """Immutable disjunction of literals. Installed once, never edited."""

    id: int
    literals: tuple[Literal, ...]
    origin: str

    def render(self) -> str:
        return " | ".join(lit_str(l) for l in self.literals)


@dataclass(frozen=True)
class Justification:
    """Why a fact holds: the clause that forced it and the supporting literals,
    or the premise marker."""

    consequent: Literal
    antecedents: tuple[Literal, ...]
    via: Clause | None  # None means premise

    @property
    def is_premise(self) -> bool:
        return self.via is None


@dataclass
class ContradictionReport:
    """A fact forced both ways, with the deduction chains behind each side."""

    fact: Fact
    just_true: Justification
    just_false: Justification
    network: "Network"

    def __repr__(self) -> str:
        return f"ContradictionReport({self.fact.render()})"


def implication_clause(
    antecedents: Sequence[Literal], consequent: Literal
) -> list[Literal]:
    """a & b -> c becomes the clause ~a | ~b | c."""
    return [(f, not pos) for f, pos in antecedents] + [consequent]


class Network:
    """Fact store, clause store, and unit propagation with a TMS trail.

    Single-threaded for mutation. After a contradiction the network freezes:
    the report is kept and no further propagation runs until premises are
    retracted.
    """

    def __init__(self) -> None:
        self._facts: dict[tuple[str, tuple[Term, ...]], Fact] = {}
        self._by_index: list[Fact] = []
        self._values: list[Truth] = []
        self._justifications: list[Justification | None] = []
        self._premises: dict[int, bool] = {}  # fact index -> asserted polarity
        self.clauses: list[Clause] = []
        self._occurrences: list[list[int]] = []  # fact index -> clause ids
        self.trail: list[int] = []  # fact indexes in assignment order
        self.contradiction: ContradictionReport | None = None
        self._creation_hooks: list[Callable[[Fact], None]] = []

    # -- facts ---------------------------------------------------------------

    def intern_fact(self, predicate: str, args: Iterable[Term]) -> Fact:
        """Return the existing node for (predicate, args) or create it with
        value Unknown, firing any registered creation hooks."""
        key = (predicate, tuple(args))
        fact = self._facts.get(key)
        if fact is not None:
            return fact
        fact = Fact(predicate, key[1], len(self._values))
        self._facts[key] = fact
        self._by_index.append(fact)
        self._values.append(Truth.UNKNOWN)
        self._justifications.append(None)
        self._occurrences.append([])
        for hook in self._creation_hooks:
            hook(fact)
        return fact

    def lookup(self, predicate: str, args: Iterable[Term]) -> Fact | None:
        return self._facts.get((predicate, tuple(args)))

    def facts(self) -> list[Fact]:
        return list(self._facts.values())

    def value(self, fact: Fact) -> Truth:
        return self._values[fact.index]

    def justification(self, fact: Fact) -> Justification | None:
        return self._justifications[fact.index]

    def is_premise(self, fact: Fact) -> bool:
        return fact.index in self._premises

    def premises(self) -> list[tuple[Fact, bool]]:
        return [(self._by_index[i], v) for i, v in self._premises.items()]

    def add_creation_hook(self, hook: Callable[[Fact], None]) -> None:
        self._creation_hooks.append(hook)

    # -- clauses -------------------------------------------------------------

    def add_clause(self, literals: Sequence[Literal], origin: str) -> Clause:
        clause = Clause(len(self.clauses), tuple(literals), origin)
        self.clauses.append(clause)
        for fact, _ in clause.literals:
            self._occurrences[fact.index].append(clause.id)
        if self.contradiction is None:
            self._propagate_clause(clause)
        return clause

    def add_implication(
        self, antecedents: Sequence[Literal], consequent: Literal, origin: str
    ) -> Clause:
        return self.add_clause(implication_clause(antecedents, consequent), origin)

    # -- premises ------------------------------------------------------------

    def assert_premise(self, fact: Fact, value: bool) -> ContradictionReport | None:
        """Record a unit clause for the fact and propagate to fixpoint.

        Returns the contradiction report when propagation fails, else None.
        Re-asserting the opposite polarity without retracting first is a
        caller error, not a contradiction.
        """
        prior = self._premises.get(fact.index)
        if prior is not None and prior != value:
            raise PremiseConflictError(
                f"{fact.render()} already asserted as {Truth.of(prior)}; retract it first"
            )
        self._premises[fact.index] = value
        just = Justification((fact, value), (), None)
        self._assign(fact, Truth.of(value), just)
        return self.contradiction

    def retract_premise(self, fact: Fact) -> ContradictionReport | None:
        """Withdraw a premise and every assignment that depended on it, then
        re-propagate the remaining premises.

        The resulting assignment equals a network rebuilt from scratch with
        the surviving premises (unit propagation has a unique fixpoint).
        """
        if fact.index not in self._premises:
            raise NotAPremiseError(f"{fact.render()} is not a premise")
        del self._premises[fact.index]
        self._reset_assignments()
        self.contradiction = None
        self._replay()
        return self.contradiction

    # -- propagation ---------------------------------------------------------

    def propagate(self) -> ContradictionReport | None:
        """Run unit propagation over every clause to a fixpoint."""
        if self.contradiction is not None:
            return self.contradiction
        for clause in self.clauses:
            self._propagate_clause(clause)
            if self.contradiction is not None:
                break
        return self.contradiction

    def _assign(self, fact: Fact, value: Truth, just: Justification) -> None:
        current = self._values[fact.index]
        if current is not Truth.UNKNOWN:
            if current is value:
                return
            self._conflict(fact, just)
            return
        self._values[fact.index] = value
        self._justifications[fact.index] = just
        self.trail.append(fact.index)
        queue = [fact]
        while queue and self.contradiction is None:
            f = queue.pop()
            for cid in list(self._occurrences[f.index]):
                forced = self._examine(self.clauses[cid])
                if forced is not None:
                    queue.append(forced)
                if self.contradiction is not None:
                    return

    def _examine(self, clause: Clause) -> Fact | None:
        """Check one clause: force its last open literal or flag a conflict.
        Returns the newly assigned fact when a forcing happened."""
        unassigned: Literal | None = None
        for fact, pos in clause.literals:
            v = self._values[fact.index]
            if v is Truth.UNKNOWN:
                if unassigned is not None:
                    return None  # two open literals: nothing to do
                unassigned = (fact, pos)
            elif (v is Truth.TRUE) == pos:
                return None  # clause satisfied
        if unassigned is None:
            # Every literal false: report on the most recent assignment.
            fact = self._latest_assigned(clause)
            just = self._clause_justification(clause, fact)
            self._conflict(fact, just)
            return None
        fact, pos = unassigned
        just = self._clause_justification(clause, fact)
        before = len(self.trail)
        self._assign(fact, Truth.of(pos), just)
        return fact if len(self.trail) > before else None

    def _clause_justification(self, clause: Clause, consequent: Fact) -> Justification:
        antecedents = []
        cons_lit: Literal | None = None
        for fact, pos in clause.literals:
            if fact is consequent:
                cons_lit = (fact, pos)
            else:
                # the literal is false, so the fact holds with flipped polarity
                antecedents.append((fact, not pos))
        assert cons_lit is not None
        return Justification(cons_lit, tuple(antecedents), clause)

    def _latest_assigned(self, clause: Clause) -> Fact:
        pos = {i: n for n, i in enumerate(self.trail)}
        return max(
            (f for f, _ in clause.literals), key=lambda f: pos.get(f.index, -1)
        )

    def _conflict(self, fact: Fact, attempted: Justification) -> None:
        existing = self._justifications[fact.index]
        assert existing is not None
        if attempted.consequent[1]:
            j_true, j_false = attempted, existing
        else:
            j_true, j_false = existing, attempted
        self.contradiction = ContradictionReport(fact, j_true, j_false, self)

    def _reset_assignments(self) -> None:
        for i in range(len(self._values)):
            self._values[i] = Truth.UNKNOWN
            self._justifications[i] = None
        self.trail.clear()

    def _replay(self) -> None:
        for index, value in list(self._premises.items()):
            if self.contradiction is not None:
                return
            fact = self._by_index[index]
            self._assign(fact, Truth.of(value), Justification((fact, value), (), None))
        if self.contradiction is None:
            self.propagate()

    # -- inspection ----------------------------------------------------------

    def assignment(self) -> dict[str, str]:
        """Rendered fact -> value symbol, for extensional comparisons."""
        return {f.render(): self._values[f.index].value for f in self._facts.values()}

    def dump(self) -> str:
        """Deterministic sorted listing of facts and clauses (golden tests)."""
        lines = ["facts:"]
        rows = sorted(
            (f.predicate, str(f.time), f.render(), self._values[f.index].value, f)
            for f in self._facts.values()
        )
        for _, _, rendered, symbol, fact in rows:
            mark = " [premise]" if fact.index in self._premises else ""
            lines.append(f"  {rendered} = {symbol}{mark}")
        lines.append("clauses:")
        for rendered, origin in sorted(
            (c.render(), c.origin) for c in self.clauses
        ):
            lines.append(f"  {rendered}  ({origin})")
        return "\n".join(lines)
