"""Time-travel domain semantics: models, clone identity, lifelines.

People in a history are named by root ("p", "s"). Travel splits a root into
incarnations: under the cloning model every arrival materialises a fresh
clone (p -> p1 -> p2 ...) that coexists with earlier incarnations; under the
strict model the traveler keeps its identity, so its existence facts collide
with its younger self and contradictions surface. Which incarnation performs
an action is resolved by walking each root's personal-time chain: from its
origin (axiom or birth) through each departure to the linked arrival, in
order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .errors import UnsupportedModelError
from .history import ARRIVE, BEGET, DEPART, KILL, NOP, Action, History
from .logic import format_time


class Model(Enum):
    """Metaphysical models for what travel does to identity."""

    T0 = "t0"  # no coexistence: the traveler keeps one identity
    T1 = "t1"  # merge into the younger copy (unimplemented placeholder)
    T2 = "t2"  # every arrival spawns a coexisting clone

    @staticmethod
    def parse(name: str) -> "Model":
        try:
            return Model(name.lower())
        except ValueError:
            raise UnsupportedModelError(f"unknown model {name!r}") from None


SUBSCRIPTS = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


@dataclass(frozen=True, order=True)
class Person:
    """One incarnation of a root identity. index 0 is the original."""

    root: str
    index: int = 0

    @property
    def id(self) -> str:
        return self.root if self.index == 0 else f"{self.root}{self.index}"

    @property
    def display(self) -> str:
        if self.index == 0:
            return self.root
        return self.root + str(self.index).translate(SUBSCRIPTS)

    def __str__(self) -> str:
        return self.id

    @staticmethod
    def parse(pid: str) -> "Person":
        """Invert .id: trailing digits are the clone index (root names must
        not end in a digit)."""
        stem = pid.rstrip("0123456789")
        if stem == pid or not stem:
            return Person(pid, 0)
        return Person(stem, int(pid[len(stem):]))


def clone_on_arrival(model: Model, traveler: Person, minted_so_far: int) -> Person:
    """The incarnation stepping out of a time machine.

    Under the cloning model this is a fresh clone of the traveler's root;
    the strict model keeps the traveler. Clone indexes count up along the
    root's personal-time chain.
    """
    if model is Model.T2:
        return Person(traveler.root, minted_so_far + 1)
    if model is Model.T0:
        return Person(traveler.root, 0)
    raise UnsupportedModelError("the merge model does not define arrivals")


@dataclass(frozen=True)
class Link:
    """One travel: the departing slot and the arrival slot it feeds."""

    root: str
    depart_slot: Fraction
    arrive_slot: Fraction


@dataclass
class Segment:
    """A maximal run of existence for one incarnation.

    start is the first state where the person exists; end_slot the slot of
    the ending event (departure or kill), or None when the segment runs to
    the end of the timeline.
    """

    person: Person
    start: Fraction
    start_kind: str  # axiom | birth | arrival
    end_slot: Fraction | None = None
    end_kind: str = "open"  # death | departure | open
    start_link: Link | None = None
    end_link: Link | None = None
    origin_slot: Fraction | None = None  # the beget slot for births
    reachable: bool = True

    def covers(self, t: Fraction, horizon: Fraction) -> bool:
        hi = self.end_slot if self.end_slot is not None else horizon
        return self.start <= t <= hi


@dataclass
class Resolution:
    """Outcome of resolving a history's root references to incarnations."""

    model: Model
    persons: list[Person] = field(default_factory=list)
    segments: dict[str, list[Segment]] = field(default_factory=dict)
    actor_of: dict[Fraction, Person] = field(default_factory=dict)
    target_of: dict[Fraction, Person] = field(default_factory=dict)
    child_of: dict[Fraction, Person] = field(default_factory=dict)
    links: list[Link] = field(default_factory=list)
    dangling: list[tuple[Action, str, str]] = field(default_factory=list)  # action, why, missing root
    arrival_labels: dict[Fraction, Person] = field(default_factory=dict)

    def person_for(self, root: str, t: Fraction, horizon: Fraction) -> Person | None:
        """The incarnation of a root present at time t; when clones coexist,
        the most recently arrived one (the incarnation a participant embodies)."""
        covering = [
            s for s in self.segments.get(root, ()) if s.covers(t, horizon)
        ]
        if not covering:
            return None
        return max(covering, key=lambda s: s.start).person


def resolve(h: History, model: Model) -> Resolution:
    """Build personal-time chains for every root and resolve all action
    references to incarnations. Raises for the unimplemented merge model."""
    if model is Model.T1:
        raise UnsupportedModelError(
            "the merge model is a stub: its consistency is an open problem"
        )
    res = Resolution(model=model)
    if not h.slots:
        _finish_person_list(res, h)
        return res
    horizon = h.times[-1]

    # per-root pools of chain events
    kills: dict[str, list[Action]] = {}
    departs: dict[str, list[Action]] = {}
    arrives: dict[str, dict[Fraction, Action]] = {}
    for a in h.slots:
        if a.kind == KILL:
            kills.setdefault(a.target, []).append(a)
        elif a.kind == DEPART:
            departs.setdefault(a.actor, []).append(a)
        elif a.kind == ARRIVE:
            arrives.setdefault(a.actor, {})[a.at] = a

    consumed: set[tuple[str, Fraction]] = set()  # (kind, slot) events used up

    def chain(root: str, seg: Segment, minted: int) -> int:
        """Extend a chain from seg, consuming end events; returns mint count."""
        res.segments.setdefault(root, []).append(seg)
        while True:
            events: list[tuple[Fraction, str, Action]] = []
            for k in kills.get(root, ()):
                if ("kill", k.at) not in consumed and k.at >= seg.start:
                    events.append((k.at, "kill", k))
            for d in departs.get(root, ()):
                if ("depart", d.at) not in consumed and d.at >= seg.start:
                    events.append((d.at, "depart", d))
            if not events:
                return minted
            at, kind, action = min(events, key=lambda e: e[0])
            consumed.add((kind, at))
            seg.end_slot = at
            if kind == "kill":
                seg.end_kind = "death"
                res.target_of[at] = seg.person
                return minted
            link = Link(root, at, action.dest)
            seg.end_kind = "departure"
            seg.end_link = link
            res.links.append(link)
            res.actor_of[at] = seg.person
            arrival = arrives.get(root, {}).get(action.dest)
            if arrival is None:
                res.dangling.append((action, "departure without arrival", root))
                return minted
            consumed.add(("arrive", arrival.at))
            minted += 1
            incarnation = clone_on_arrival(model, seg.person, minted - 1)
            res.arrival_labels[arrival.at] = incarnation
            landing = h.next_time(arrival.at)
            if landing is None:
                return minted  # exits the stage past the horizon
            seg = Segment(
                person=incarnation,
                start=landing,
                start_kind="arrival",
                start_link=link,
                reachable=seg.reachable,
            )
            res.segments.setdefault(root, []).append(seg)

    # origins: earliest true axiom per root, plus every birth
    origin_list: list[tuple[Fraction, str, Segment]] = []
    seen_axiom: set[str] = set()
    for ax in sorted(h.axioms, key=lambda x: x.at):
        if ax.value and ax.person not in seen_axiom:
            seen_axiom.add(ax.person)
            origin_list.append(
                (ax.at, ax.person, Segment(Person(ax.person), ax.at, "axiom"))
            )
    for a in h.slots:
        if a.kind == BEGET:
            landing = h.next_time(a.at)
            if landing is None:
                continue  # birth past the horizon never takes effect
            seg = Segment(Person(a.child), landing, "birth", origin_slot=a.at)
            origin_list.append((landing, a.child, seg))

    minted_count: dict[str, int] = {}
    for _, root, seg in sorted(origin_list, key=lambda o: (o[0], o[1])):
        minted_count[root] = chain(root, seg, minted_count.get(root, 0))

    # unreachable travel loops: arrivals no origin chain ever fed
    for root, by_slot in arrives.items():
        for at in sorted(by_slot):
            if ("arrive", at) in consumed:
                continue
            consumed.add(("arrive", at))
            minted_count[root] = minted_count.get(root, 0) + 1
            incarnation = clone_on_arrival(
                model, Person(root), minted_count[root] - 1
            )
            res.arrival_labels[at] = incarnation
            landing = h.next_time(at)
            if landing is None:
                continue
            seg = Segment(
                person=incarnation, start=landing, start_kind="arrival",
                start_link=Link(root, by_slot[at].source, at), reachable=False,
            )
            minted_count[root] = chain(root, seg, minted_count[root])

    # resolve remaining action roles against the finished segments
    for a in h.slots:
        if a.kind in (BEGET, KILL):
            actor = res.person_for(a.actor, a.at, horizon)
            if actor is None:
                res.dangling.append((a, f"actor {a.actor} absent at {format_time(a.at)}", a.actor))
            else:
                res.actor_of[a.at] = actor
        if a.kind == KILL and ("kill", a.at) not in consumed:
            res.dangling.append((a, f"victim {a.target} absent at {format_time(a.at)}", a.target))
        if a.kind == BEGET:
            child = next(
                (s.person for s in res.segments.get(a.child, ())
                 if s.origin_slot == a.at),
                Person(a.child),
            )
            res.child_of[a.at] = child
        if a.kind == DEPART and ("depart", a.at) not in consumed:
            res.dangling.append((a, f"traveler {a.actor} absent at {format_time(a.at)}", a.actor))
        if a.kind == ARRIVE and a.at not in res.arrival_labels:
            # arrival whose departure never happened
            res.dangling.append((a, "arrival without departure", a.actor))

    _finish_person_list(res, h)
    return res


def _finish_person_list(res: Resolution, h: History) -> None:
    roots = h.all_persons()
    ordered: list[Person] = []
    for root in roots:
        incarnations = {s.person for s in res.segments.get(root, ())}
        incarnations |= {
            p for p in res.arrival_labels.values() if p.root == root
        }
        incarnations.add(Person(root))
        ordered.extend(sorted(incarnations, key=lambda p: p.index))
    res.persons = ordered


# -- action semantics ---------------------------------------------------------

@dataclass(frozen=True)
class Effect:
    """One literal an action imposes: predicate over (person, time)."""

    predicate: str
    person: Person
    at: Fraction
    positive: bool = True


def kind_effects(
    kind: str, roles: Sequence[Person], t: Fraction, nxt: Fraction | None
) -> tuple[list[Effect], list[Effect], list[Person]]:
    """The semantics table: (direct effects, birth propagation, participants)
    for one action over already-resolved incarnations.

    Direct effects become implications from the action fact. The birth entry
    (only for beget) is the extra step 'the child appears here, hence exists
    at the next state'. Constraints that would land past the end of the
    timeline are dropped.
    """
    if kind == NOP:
        return [], [], []

    if kind == BEGET:
        a, c = roles
        direct = [
            Effect("remains", a, t),
            Effect("appears", a, t, False),
            Effect("appears", c, t),
            Effect("exists", a, t),
            Effect("exists", c, t, False),
        ]
        birth = [Effect("exists", c, nxt)] if nxt is not None else []
        return direct, birth, [a, c]

    if kind == KILL:
        a, v = roles
        direct = [
            Effect("remains", a, t),
            Effect("appears", a, t, False),
            Effect("remains", v, t, False),
            Effect("appears", v, t, False),
            Effect("exists", a, t),
        ]
        if nxt is not None:
            direct.append(Effect("exists", v, nxt, False))
        return direct, [], [a, v]

    if kind == DEPART:
        (x,) = roles
        direct = [
            Effect("remains", x, t, False),
            Effect("appears", x, t, False),
            Effect("exists", x, t),
        ]
        if nxt is not None:
            direct.append(Effect("exists", x, nxt, False))
        return direct, [], [x]

    if kind == ARRIVE:
        (x,) = roles
        direct = [
            Effect("remains", x, t),
            Effect("appears", x, t),
            Effect("exists", x, t, False),
        ]
        if nxt is not None:
            direct.append(Effect("exists", x, nxt))
        return direct, [], [x]

    raise ValueError(f"unknown action kind {kind!r}")


def action_effects(
    action: Action, res: Resolution, h: History
) -> tuple[list[Effect], list[Effect], list[Person]]:
    """kind_effects with the action's root references resolved."""
    t = action.at
    horizon = h.times[-1]

    def fallback(root: str) -> Person:
        found = res.person_for(root, t, horizon)
        return found if found is not None else Person(root)

    if action.kind == NOP:
        roles: list[Person] = []
    elif action.kind == BEGET:
        roles = [res.actor_of.get(t) or fallback(action.actor),
                 res.child_of.get(t) or Person(action.child)]
    elif action.kind == KILL:
        roles = [res.actor_of.get(t) or fallback(action.actor),
                 res.target_of.get(t) or fallback(action.target)]
    elif action.kind == DEPART:
        roles = [res.actor_of.get(t) or fallback(action.actor)]
    else:
        roles = [res.arrival_labels.get(t) or Person(action.actor)]
    return kind_effects(action.kind, roles, t, h.next_time(t))


# -- lifelines ----------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    start: Fraction
    end: Fraction
    start_kind: str
    end_kind: str


@dataclass(frozen=True)
class Lifeline:
    """All existence intervals of one root, with birth/death bookkeeping."""

    root: str
    intervals: tuple[Interval, ...]
    births: int
    deaths: int
    axiom_origins: int
    unreachable: int


@dataclass(frozen=True)
class Violation:
    root: str
    reason: str

    def __str__(self) -> str:
        return f"{self.root}: {self.reason}"


def lifelines(res: Resolution, h: History) -> list[Lifeline]:
    horizon = h.times[-1] if h.slots else Fraction(0)
    out = []
    for root, segs in sorted(res.segments.items()):
        intervals = tuple(
            Interval(
                s.start,
                s.end_slot if s.end_slot is not None else horizon,
                s.start_kind,
                s.end_kind,
            )
            for s in segs
        )
        out.append(
            Lifeline(
                root=root,
                intervals=intervals,
                births=sum(1 for s in segs if s.start_kind == "birth"),
                deaths=sum(1 for s in segs if s.end_kind == "death"),
                axiom_origins=sum(1 for s in segs if s.start_kind == "axiom"),
                unreachable=sum(1 for s in segs if not s.reachable),
            )
        )
    return out


def validate_lifelines(res: Resolution, h: History) -> list[Violation]:
    """Identity axioms over whole roots: one origin, at most one death, every
    interval reached from the origin through travel links."""
    problems: list[Violation] = []
    for life in lifelines(res, h):
        origins = life.births + life.axiom_origins
        if origins > 1:
            problems.append(
                Violation(life.root, "two unlinked lifelines (more than one origin)")
            )
        if life.deaths > 1:
            problems.append(Violation(life.root, "dies more than once"))
        if life.unreachable:
            problems.append(
                Violation(life.root, "lifeline loop not reachable from any origin")
            )
    for action, why, root in res.dangling:
        problems.append(Violation(root, f"{action.render()}: {why}"))
    return problems
