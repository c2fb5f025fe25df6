"""The history level: ordered state-action timelines over virtual time.

A history is a time-ordered list of slots, each holding exactly one action
(possibly the null action). Actions reference people by root name; which
incarnation of a root performs an action is worked out at compile time from
the travel topology. Histories are immutable values; edits produce new ones.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import OccupiedSlotError
from .logic import format_time


def as_time(value) -> Fraction:
    """Coerce ints, floats, and decimal strings to exact rational times."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


NOP = "nop"
BEGET = "beget"
KILL = "kill"
DEPART = "depart"
ARRIVE = "arrive"


@dataclass(frozen=True)
class Action:
    """One action instance occupying a timeline slot.

    kind/roles:
      nop                       no fields
      beget   actor, child
      kill    actor, target
      depart  actor, dest       (other half of a travel pair)
      arrive  actor, source     (dest/source name the paired slot times)
    seq orders actions by creation (narrative) time; it is ignored by action
    identity comparisons used for subhistory and distance.
    """

    kind: str
    at: Fraction
    actor: str | None = None
    child: str | None = None
    target: str | None = None
    dest: Fraction | None = None
    source: Fraction | None = None
    seq: int = 0

    @property
    def is_nop(self) -> bool:
        return self.kind == NOP

    def key(self):
        """Identity for set comparisons: everything but seq."""
        return (self.kind, self.at, self.actor, self.child, self.target,
                self.dest, self.source)

    def persons(self) -> tuple[str, ...]:
        return tuple(p for p in (self.actor, self.child, self.target) if p)

    def render(self) -> str:
        if self.kind == NOP:
            return "nop"
        if self.kind == BEGET:
            return f"beget({self.actor},{self.child})"
        if self.kind == KILL:
            return f"kill({self.actor},{self.target})"
        if self.kind == DEPART:
            return f"depart({self.actor},{format_time(self.dest)})"
        return f"arrive({self.actor},{format_time(self.source)})"


def nop(at, seq: int = 0) -> Action:
    return Action(NOP, as_time(at), seq=seq)


def beget(actor: str, child: str, at, seq: int = 0) -> Action:
    return Action(BEGET, as_time(at), actor=actor, child=child, seq=seq)


def kill(actor: str, target: str, at, seq: int = 0) -> Action:
    return Action(KILL, as_time(at), actor=actor, target=target, seq=seq)


def travel_pair(actor: str, depart_at, arrive_at, seq: int = 0) -> tuple[Action, Action]:
    """The two interlinked halves of one trip: the departure carries the
    destination slot time, the arrival carries the source slot time."""
    d, a = as_time(depart_at), as_time(arrive_at)
    return (
        Action(DEPART, d, actor=actor, dest=a, seq=seq),
        Action(ARRIVE, a, actor=actor, source=d, seq=seq),
    )


@dataclass(frozen=True)
class Axiom:
    """A scenario-level existence assertion pinned to a root person."""

    person: str
    at: Fraction
    value: bool = True


@dataclass(frozen=True)
class History:
    """Immutable timeline: slots in strictly increasing time order, plus the
    scenario context (declared persons and existence axioms) needed to
    compile it."""

    slots: tuple[Action, ...]
    persons: tuple[str, ...] = ()
    axioms: tuple[Axiom, ...] = ()

    def __post_init__(self):
        times = [a.at for a in self.slots]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("slot times must be strictly increasing")

    # -- structure -----------------------------------------------------------

    @property
    def times(self) -> tuple[Fraction, ...]:
        return tuple(a.at for a in self.slots)

    def slot_at(self, t) -> Action | None:
        t = as_time(t)
        for a in self.slots:
            if a.at == t:
                return a
        return None

    def next_time(self, t: Fraction) -> Fraction | None:
        later = [u for u in self.times if u > t]
        return min(later) if later else None

    def prev_time(self, t: Fraction) -> Fraction | None:
        earlier = [u for u in self.times if u < t]
        return max(earlier) if earlier else None

    def actions(self) -> tuple[Action, ...]:
        """Non-nop actions only."""
        return tuple(a for a in self.slots if not a.is_nop)

    def action_keys(self) -> frozenset:
        return frozenset(a.key() for a in self.actions())

    def max_seq(self) -> int:
        return max((a.seq for a in self.slots), default=0)

    def all_persons(self) -> tuple[str, ...]:
        """Declared persons plus anyone named by an action, first-seen order."""
        seen = dict.fromkeys(self.persons)
        for ax in self.axioms:
            seen.setdefault(ax.person)
        for a in self.slots:
            for p in a.persons():
                seen.setdefault(p)
        return tuple(seen)

    # -- edits ---------------------------------------------------------------

    def with_states(self, new_times: Iterable) -> "History":
        """Interpolate or extend: add fresh nop states at the given times."""
        slots = list(self.slots)
        for t in new_times:
            t = as_time(t)
            if any(a.at == t for a in slots):
                raise OccupiedSlotError(f"state at {format_time(t)} already exists")
            slots.append(nop(t, seq=self.max_seq()))
        slots.sort(key=lambda a: a.at)
        return replace(self, slots=tuple(slots))

    def put(self, action: Action) -> "History":
        """Install an action on an existing nop slot, or on a fresh state."""
        slots = list(self.slots)
        for i, a in enumerate(slots):
            if a.at == action.at:
                if not a.is_nop:
                    raise OccupiedSlotError(
                        f"slot {format_time(action.at)} holds {a.render()}"
                    )
                slots[i] = action
                return replace(self, slots=tuple(slots))
        slots.append(action)
        slots.sort(key=lambda a: a.at)
        return replace(self, slots=tuple(slots))

    def clear(self, at, seq: int | None = None) -> "History":
        """Replace the action at a slot with a fresh nop."""
        t = as_time(at)
        slots = list(self.slots)
        for i, a in enumerate(slots):
            if a.at == t:
                slots[i] = nop(t, seq=self.max_seq() + 1 if seq is None else seq)
                return replace(self, slots=tuple(slots))
        raise OccupiedSlotError(f"no state at {format_time(t)}")


@dataclass(frozen=True)
class Transformation:
    """An edit: actions to remove (their slots revert to nop), actions to
    add (their slots must be nop or fresh), and axioms to drop."""

    remove: tuple[Action, ...] = ()
    add: tuple[Action, ...] = ()
    drop_axioms: tuple[Axiom, ...] = ()

    @property
    def is_identity(self) -> bool:
        return not (self.remove or self.add or self.drop_axioms)

    def serialize(self) -> str:
        rm = sorted(f"-{a.render()}@{format_time(a.at)}" for a in self.remove)
        ad = sorted(f"+{a.render()}@{format_time(a.at)}" for a in self.add)
        dr = sorted(f"!{x.person}@{format_time(x.at)}" for x in self.drop_axioms)
        return " ".join(rm + ad + dr) or "(identity)"


def apply_transformation(h: History, tf: Transformation) -> History:
    """Pure structural edit: no consistency check here (compile for that).

    Removed actions become nops; added actions take over nop slots, with
    fresh states interpolated or appended as needed. A travel pair shares one
    seq so its halves assert together in creation order.
    """
    out = h
    seq = h.max_seq() + 1
    for a in tf.remove:
        if out.slot_at(a.at) is None or out.slot_at(a.at).key() != a.key():
            raise OccupiedSlotError(f"cannot remove absent action {a.render()}")
        out = out.clear(a.at, seq=seq)
    for a in sorted(tf.add, key=lambda x: (x.seq, x.kind != DEPART, x.at)):
        stamped = replace(a, seq=seq + a.seq)
        existing = out.slot_at(stamped.at)
        if existing is not None and not existing.is_nop:
            raise OccupiedSlotError(
                f"slot {format_time(stamped.at)} holds {existing.render()}"
            )
        out = out.put(stamped)
    if tf.drop_axioms:
        kept = tuple(ax for ax in out.axioms if ax not in tf.drop_axioms)
        out = replace(out, axioms=kept)
    return out


def is_subhistory(h1: History, h2: History) -> bool:
    """True iff h1's non-nop actions are a subset of h2's (nops ignored)."""
    return h1.action_keys() <= h2.action_keys()


def is_strong(before: History, after: History) -> bool:
    """A transformation is strong when it removed something that had
    happened, i.e. the old history is no longer contained in the new one."""
    return not is_subhistory(before, after)


DEFAULT_WEIGHTS = {NOP: 0, BEGET: 2, KILL: 3, "travel": 1}


def distance(h1: History, h2: History, weights: dict[str, int] | None = None) -> int:
    """Weighted size of the symmetric difference of the action sets.

    A depart/arrive pair counts once, at the travel weight. Dropped axioms
    count one each (an origin rewrite is a unit change).
    """
    w = dict(DEFAULT_WEIGHTS)
    if weights:
        w.update(weights)

    def units(h: History) -> frozenset:
        out = set()
        for a in h.actions():
            if a.kind == DEPART:
                out.add(("travel", a.actor, a.at, a.dest))
            elif a.kind == ARRIVE:
                pass  # folded into the depart half
            else:
                out.add(a.key())
        return frozenset(out)

    total = 0
    for unit in units(h1) ^ units(h2):
        kind = unit[0]
        total += w.get(kind, 1)
    total += sum(1 for _ in set(h1.axioms) ^ set(h2.axioms))
    return total


def midpoint(a: Fraction, b: Fraction) -> Fraction:
    return (a + b) / 2


def fresh_time_between(h: History, lo: Fraction, hi: Fraction) -> Fraction | None:
    """A fresh state time strictly inside (lo, hi): the midpoint of the
    occupied neighbours, None when lo/hi are not ordered."""
    if lo >= hi:
        return None
    t = midpoint(lo, hi)
    while h.slot_at(t) is not None:
        t = midpoint(lo, t)
    return t


def initial_history(times: Sequence, persons: Sequence[str] = (),
                    axioms: Sequence[Axiom] = ()) -> History:
    """All-nop timeline over the given state times."""
    return History(
        slots=tuple(nop(t) for t in sorted(as_time(t) for t in times)),
        persons=tuple(persons),
        axioms=tuple(axioms),
    )
