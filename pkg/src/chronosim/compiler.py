"""Compiling a history into a constraint network.

Structural edits always recompile from scratch: non-unit clauses can never be
edited in place, and at a few hundred facts a fresh build is cheap. The
compile pass interns one action fact per slot, scaffolds every person with
existence/continuity facts via pattern-directed rules, installs the action
semantics, then asserts the premises in narrative creation order and
propagates.

Division of labour between the rules (so each clause is installed exactly
once regardless of interning order):
  * the person rule scaffolds a newly seen person and revisits existing
    action facts, adding only the parts that concern the newcomer as a
    bystander;
  * each action rule installs the action's own semantics for its participants
    plus bystander defaults for persons already known;
  * the nop rule installs the do-nothing defaults (everyone remains, anyone
    may appear).
Bystanders of a real action keep existing and cannot pop into existence;
that is the whole frame story of this domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .domain import Model, Person, Resolution, kind_effects, resolve
from .history import ARRIVE, BEGET, DEPART, KILL, NOP, Action, Axiom, History, as_time
from .logic import (
    ContradictionReport,
    Fact,
    Network,
    NumT,
    PersonT,
    TimeT,
    Truth,
    format_time,
)
from .rules import Pattern, Rule, RuleBook

ACTION_PREDICATES = (NOP, BEGET, KILL, DEPART, ARRIVE)


def _exists(net: Network, pid: str, t: Fraction) -> Fact:
    return net.intern_fact("exists", (PersonT(pid), TimeT(t)))


def _remains(net: Network, pid: str, t: Fraction) -> Fact:
    return net.intern_fact("remains", (PersonT(pid), TimeT(t)))


def _appears(net: Network, pid: str, t: Fraction) -> Fact:
    return net.intern_fact("appears", (PersonT(pid), TimeT(t)))


def action_fact_args(action: Action, res: Resolution) -> tuple[str, tuple]:
    """(predicate, args) for a slot's action with references resolved to
    incarnations."""
    t = action.at
    if action.kind == NOP:
        return NOP, (TimeT(t),)
    if action.kind == BEGET:
        a = res.actor_of.get(t) or Person(action.actor)
        c = res.child_of.get(t) or Person(action.child)
        return BEGET, (PersonT(a.id), PersonT(c.id), TimeT(t))
    if action.kind == KILL:
        a = res.actor_of.get(t) or Person(action.actor)
        v = res.target_of.get(t) or Person(action.target)
        return KILL, (PersonT(a.id), PersonT(v.id), TimeT(t))
    if action.kind == DEPART:
        x = res.actor_of.get(t) or Person(action.actor)
        return DEPART, (PersonT(x.id), NumT(action.dest), TimeT(t))
    x = res.arrival_labels.get(t) or Person(action.actor)
    return ARRIVE, (PersonT(x.id), NumT(action.source), TimeT(t))


def fact_roles(fact: Fact) -> list[Person]:
    return [Person.parse(a.id) for a in fact.args if isinstance(a, PersonT)]


class _Compiler:
    """One compile pass; holds the cross-product bookkeeping."""

    def __init__(self, h: History, model: Model):
        self.h = h
        self.res = resolve(h, model)
        self.net = Network()
        self.book = RuleBook(self.net)
        self.times = list(h.times)
        self.known: list[Person] = []
        self._seen: set[str] = set()
        self._register_rules()

    # -- rule bodies -----------------------------------------------------------

    def _register_rules(self) -> None:
        self.book.register(Rule("introduce-person", Pattern("exists"), self._person_rule))
        self.book.register(Rule("frame-nop", Pattern(NOP), self._nop_rule))
        for kind in (BEGET, KILL, DEPART, ARRIVE):
            self.book.register(
                Rule(f"semantics-{kind}", Pattern(kind), self._action_rule)
            )

    def _person_rule(self, net: Network, fact: Fact) -> None:
        pid = fact.args[0].id  # type: ignore[union-attr]
        if pid in self._seen:
            return
        self._seen.add(pid)
        person = Person.parse(pid)
        self.known.append(person)
        for t in self.times:
            _exists(net, pid, t)
            _remains(net, pid, t)
            _appears(net, pid, t)
        for t, nxt in zip(self.times, self.times[1:]):
            e0, e1 = _exists(net, pid, t), _exists(net, pid, nxt)
            r, ap = _remains(net, pid, t), _appears(net, pid, t)
            tag = f"continuity {pid} {format_time(t)}->{format_time(nxt)}"
            net.add_implication([(e0, True), (r, True)], (e1, True), tag)
            net.add_implication([(e1, True), (ap, False)], (e0, True), tag)
            net.add_implication([(e0, False), (ap, False)], (e1, False), tag)
            net.add_implication([(e1, False), (r, True)], (e0, False), tag)
        # catch up on slots that predate this person
        for existing in list(net.facts()):
            if existing.predicate == NOP:
                self._frame_nop(net, existing, [person])
            elif existing.predicate in ACTION_PREDICATES:
                if person not in fact_roles(existing):
                    self._frame_bystander(net, existing, [person])

    def _nop_rule(self, net: Network, fact: Fact) -> None:
        self._frame_nop(net, fact, self.known)

    def _frame_nop(self, net: Network, fact: Fact, persons: list[Person]) -> None:
        t = fact.time
        tag = f"frame nop@{format_time(t)}"
        for q in persons:
            net.add_implication([(fact, True)], (_remains(net, q.id, t), True), tag)
            net.add_implication([(fact, True)], (_appears(net, q.id, t), True), tag)

    def _frame_bystander(self, net: Network, fact: Fact, persons: list[Person]) -> None:
        t = fact.time
        tag = f"frame {fact.predicate}@{format_time(t)}"
        for q in persons:
            net.add_implication([(fact, True)], (_remains(net, q.id, t), True), tag)
            net.add_implication([(fact, True)], (_appears(net, q.id, t), False), tag)

    def _action_rule(self, net: Network, fact: Fact) -> None:
        t = fact.time
        nxt = next((u for u in self.times if u > t), None)
        roles = fact_roles(fact)
        direct, birth, participants = kind_effects(fact.predicate, roles, t, nxt)
        tag = f"{fact.predicate}@{format_time(t)}"
        for eff in direct:
            f = net.intern_fact(eff.predicate, (PersonT(eff.person.id), TimeT(eff.at)))
            net.add_implication([(fact, True)], (f, eff.positive), tag)
        for eff in birth:
            appears_f = _appears(net, eff.person.id, t)
            exists_next = _exists(net, eff.person.id, eff.at)
            net.add_implication([(appears_f, True)], (exists_next, True), f"birth {tag}")
        bystanders = [q for q in self.known if q not in participants]
        self._frame_bystander(net, fact, bystanders)

    # -- the pass ---------------------------------------------------------------

    def run(self) -> "CompiledHistory":
        h, net, res = self.h, self.net, self.res
        slot_facts: dict[Fraction, Fact] = {}
        nop_facts: dict[Fraction, Fact] = {}
        if self.times:
            for person in res.persons:
                _exists(net, person.id, self.times[0])
            for action in h.slots:
                nf = net.intern_fact(NOP, (TimeT(action.at),))
                nop_facts[action.at] = nf
                if action.is_nop:
                    slot_facts[action.at] = nf
                else:
                    pred, args = action_fact_args(action, res)
                    slot_facts[action.at] = net.intern_fact(pred, args)

        compiled = CompiledHistory(
            history=h, model=self.res.model, network=net, rulebook=self.book,
            resolution=res, slot_facts=slot_facts, nop_facts=nop_facts,
            axiom_facts={},
        )

        # premises in narrative creation order: axioms, then slots by seq
        for ax in h.axioms:
            fact = _exists(net, ax.person, ax.at)
            compiled.axiom_facts[ax] = fact
            if net.contradiction is None:
                net.assert_premise(fact, ax.value)
        order = sorted(h.slots, key=lambda a: (a.seq, a.kind != DEPART, a.at))
        for action in order:
            if net.contradiction is not None:
                break
            if action.is_nop:
                net.assert_premise(nop_facts[action.at], True)
            else:
                net.assert_premise(nop_facts[action.at], False)
                if net.contradiction is None:
                    net.assert_premise(slot_facts[action.at], True)
        return compiled


@dataclass
class CompiledHistory:
    """A history, its resolution, and the propagated network."""

    history: History
    model: Model
    network: Network
    rulebook: RuleBook
    resolution: Resolution
    slot_facts: dict[Fraction, Fact]
    nop_facts: dict[Fraction, Fact]
    axiom_facts: dict[Axiom, Fact]

    @property
    def contradiction(self) -> ContradictionReport | None:
        return self.network.contradiction

    @property
    def consistent(self) -> bool:
        return self.network.contradiction is None

    def exists_value(self, person_id: str, t) -> Truth:
        fact = self.network.lookup("exists", (PersonT(person_id), TimeT(as_time(t))))
        return self.network.value(fact) if fact is not None else Truth.UNKNOWN

    # -- timeline table -------------------------------------------------------

    def columns(self) -> list[Person]:
        return list(self.resolution.persons)

    def action_text(self, t: Fraction) -> str:
        fact = self.slot_facts[t]
        if fact.predicate == NOP:
            return "nop"
        persons = [str(a) for a in fact.args if isinstance(a, PersonT)]
        nums = [str(a) for a in fact.args if isinstance(a, NumT)]
        return f"{fact.predicate}({','.join(persons + nums)})"

    def cell(self, person: Person, t: Fraction) -> str:
        report = self.contradiction
        if report is not None:
            f = report.fact
            if f.predicate == "exists" and f.args[0] == PersonT(person.id) and f.time == t:
                return "X"
        return self.exists_value(person.id, t).value

    def table_rows(self) -> list[list[str]]:
        rows = []
        for t in self.history.times:
            rows.append(
                [format_time(t)]
                + [self.cell(p, t) for p in self.columns()]
                + [self.action_text(t)]
            )
        return rows

    def table_header(self) -> list[str]:
        return ["time"] + [p.id for p in self.columns()] + ["action"]

    def export_tsv(self) -> str:
        lines = ["\t".join(self.table_header())]
        lines += ["\t".join(row) for row in self.table_rows()]
        return "\n".join(lines) + "\n"

    def render_table(self) -> str:
        """Aligned table with subscripted clone names, for humans."""
        header = ["time"] + [p.display for p in self.columns()] + ["action"]
        rows = [header] + self.table_rows()
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        out = []
        for r in rows:
            out.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
        return "\n".join(out)

    @property
    def fact_count(self) -> int:
        return len(self.network.facts())

    @property
    def clause_count(self) -> int:
        return len(self.network.clauses)


def compile_history(h: History, model: Model) -> CompiledHistory:
    """Fresh network for a history under a model. The merge model raises."""
    return _Compiler(h, model).run()
