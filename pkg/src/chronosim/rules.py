"""Pattern-directed invocation: procedures fired when matching facts appear.

Rules fire once per (rule, fact) pair, fire retroactively on facts that
already exist at registration time, and may intern further facts or install
clauses from their bodies (cascades terminate because the fact universe of a
finite history is finite).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import DuplicateRuleError
from .logic import Fact, Network


WILDCARD = object()


@dataclass(frozen=True)
class Pattern:
    """Predicate name plus per-position constraints (a term or WILDCARD)."""

    predicate: str
    args: tuple[object, ...] = ()
    any_arity: bool = True

    def matches(self, fact: Fact) -> bool:
        if fact.predicate != self.predicate:
            return False
        if not self.any_arity and len(fact.args) != len(self.args):
            return False
        for constraint, actual in zip(self.args, fact.args):
            if constraint is not WILDCARD and constraint != actual:
                return False
        return True


@dataclass(frozen=True)
class Rule:
    id: str
    trigger: Pattern
    body: Callable[[Network, Fact], None]


class RuleBook:
    """Owns the rules of one network and drives their firing."""

    def __init__(self, network: Network):
        self.network = network
        self._rules: list[Rule] = []
        self._fired: set[tuple[str, int]] = set()
        network.add_creation_hook(self._on_created)

    def register(self, rule: Rule) -> str:
        """Install a rule; it fires immediately on all existing matches, then
        on every future creation."""
        if any(r.id == rule.id for r in self._rules):
            raise DuplicateRuleError(f"rule {rule.id!r} already registered")
        self._rules.append(rule)
        for fact in list(self.network.facts()):
            self._fire(rule, fact)
        return rule.id

    def _on_created(self, fact: Fact) -> None:
        for rule in list(self._rules):
            self._fire(rule, fact)

    def _fire(self, rule: Rule, fact: Fact) -> None:
        key = (rule.id, fact.index)
        if key in self._fired or not rule.trigger.matches(fact):
            return
        self._fired.add(key)
        rule.body(self.network, fact)

    def fired_rules(self, fact: Fact) -> list[str]:
        return [rid for (rid, idx) in self._fired if idx == fact.index]
