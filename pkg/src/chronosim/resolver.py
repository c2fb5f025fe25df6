"""Paradox handling: prevention with delay, manual retraction, and repair
search.

Three modes. The preventing mode buffers a fresh contradiction until the
latest virtual time it involves, giving the participant a chance to undo it
(for instance by traveling away again) before the offending edit is rolled
back. The interactive mode hands the premise set of the contradiction to the
participant for retraction. The proactive mode searches for small sets of
extra actions that make the history consistent again, scored by how little
they change the story.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

from .compiler import CompiledHistory, compile_history
from .domain import Model, Person, Violation, action_effects, validate_lifelines
from .errors import (
    ChronosimError,
    NotApplicableError,
    OccupiedSlotError,
    RetractionForbiddenError,
)
from .history import (
    ARRIVE,
    BEGET,
    DEPART,
    KILL,
    Action,
    Axiom,
    History,
    Transformation,
    apply_transformation,
    beget,
    distance,
    fresh_time_between,
    kill,
    travel_pair,
)
from .logic import ContradictionReport, Fact, PersonT
from .tms import contradiction_premises


class Mode(Enum):
    R1 = "r1"  # prevent (with delayed-contradiction buffering)
    R2 = "r2"  # interactive retraction
    R3 = "r3"  # proactive automatic repair

    @staticmethod
    def parse(name: str) -> "Mode":
        try:
            return Mode(name.lower())
        except ValueError:
            raise ChronosimError(f"unknown mode {name!r}") from None


@dataclass
class ResolverConfig:
    user_root: str | None = None
    weights: dict[str, int] | None = None
    free_will_filter: bool = True
    allow_suicide: bool = False
    protected_kinds: tuple[str, ...] = ()
    max_nodes: int = 4000


@dataclass
class Solution:
    """A repair: the transformation, the repaired history, and its score."""

    transformation: Transformation
    history: History
    compiled: CompiledHistory
    distance: int
    free_will_clean: bool
    extensions: int
    note: str = ""

    def serialize(self) -> str:
        return self.transformation.serialize()


# -- delayed contradictions (prevent mode) -------------------------------------

@dataclass
class PendingContradiction:
    report: ContradictionReport
    latest_involved_time: Fraction
    status: str = "buffered"  # buffered | expired | resolved


def latest_involved_time(report: ContradictionReport) -> Fraction:
    """The latest virtual time among the premises behind the contradiction."""
    return max(f.time for f in contradiction_premises(report))


def buffer_or_reject(report: ContradictionReport, current_time: Fraction) -> PendingContradiction:
    """Prevent-mode policy: admit the edit provisionally while virtual time
    has not yet reached the last moment the contradiction involves."""
    latest = latest_involved_time(report)
    status = "buffered" if current_time < latest else "expired"
    return PendingContradiction(report, latest, status)


# -- manual retraction (interactive mode) --------------------------------------

def action_for_premise(compiled: CompiledHistory, premise: Fact) -> Action | Axiom | None:
    """The timeline entry whose premise this fact is."""
    for ax, f in compiled.axiom_facts.items():
        if f is premise:
            return ax
    for t, f in compiled.slot_facts.items():
        if f is premise:
            return compiled.history.slot_at(t)
    for t, f in compiled.nop_facts.items():
        if f is premise:
            return compiled.history.slot_at(t)
    return None


def manual_retract(
    compiled: CompiledHistory,
    premise: Fact,
    replacement: Action | None = None,
    cfg: ResolverConfig | None = None,
) -> History:
    """Withdraw the action behind one premise of a contradiction.

    The action's slot reverts to a nop; retracting one half of a travel pair
    retracts the other half too. Retracting a nop means the participant wants
    a different action there, so a replacement must be supplied. Returns the
    edited history for recompilation.
    """
    cfg = cfg or ResolverConfig()
    entry = action_for_premise(compiled, premise)
    if entry is None:
        raise ChronosimError(f"{premise.render()} is not a retractable premise")
    h = compiled.history
    if isinstance(entry, Axiom):
        if "axiom" in cfg.protected_kinds:
            raise RetractionForbiddenError("the scenario pins this existence axiom")
        return apply_transformation(h, Transformation(drop_axioms=(entry,)))
    if entry.kind in cfg.protected_kinds:
        raise RetractionForbiddenError(f"the scenario protects {entry.kind} actions")
    if entry.is_nop:
        if replacement is None:
            raise ChronosimError(
                "retracting a do-nothing slot needs a replacement action"
            )
        return apply_transformation(h, Transformation(add=(replacement,)))
    removed = [entry]
    if entry.kind == DEPART:
        twin = next((a for a in h.slots if a.kind == ARRIVE
                     and a.actor == entry.actor and a.at == entry.dest), None)
        if twin:
            removed.append(twin)
    elif entry.kind == ARRIVE:
        twin = next((a for a in h.slots if a.kind == DEPART
                     and a.actor == entry.actor and a.at == entry.source), None)
        if twin:
            removed.append(twin)
    return apply_transformation(h, Transformation(remove=tuple(removed)))


# -- existence repair heuristic -------------------------------------------------

def _exists_points(compiled: CompiledHistory, root: str) -> list[tuple[Fraction, bool, Action]]:
    """(time, polarity, action) for every existence requirement an action
    imposes on incarnations of the root."""
    res, h = compiled.resolution, compiled.history
    points = []
    for a in h.actions():
        direct, birth, _ = action_effects(a, res, h)
        for eff in direct + birth:
            if eff.predicate == "exists" and eff.person.root == root:
                points.append((eff.at, eff.positive, a))
    return points


def _alive_roots_at(compiled: CompiledHistory, t: Fraction) -> list[str]:
    res = compiled.resolution
    horizon = compiled.history.times[-1]
    return [
        root
        for root in sorted(res.segments)
        if res.person_for(root, t, horizon) is not None
    ]


def _fresh_destinations(h: History) -> list[Fraction]:
    """Candidate landing slots for an inserted travel: one state past the
    end, then fresh midpoints between every adjacent pair."""
    out = [h.times[-1] + 1]
    for t, nxt in zip(h.times, h.times[1:]):
        mid = fresh_time_between(h, t, nxt)
        if mid is not None:
            out.append(mid)
    return out


def eliminators(compiled: CompiledHistory, root: str, at: Fraction,
                cfg: ResolverConfig) -> list[Transformation]:
    """Actions at the given slot that remove the person from the next state:
    a kill by someone then alive, or a departure to a fresh slot."""
    out = []
    for dest in _fresh_destinations(compiled.history):
        out.append(Transformation(add=travel_pair(root, at, dest)))
    for other in _alive_roots_at(compiled, at):
        if other == root and not cfg.allow_suicide:
            continue
        out.append(Transformation(add=(kill(other, root, at),)))
    return out


def introducers(compiled: CompiledHistory, root: str, at: Fraction,
                cfg: ResolverConfig) -> list[Transformation]:
    """Actions at the given slot that make the person exist at the next
    state: a birth by someone then alive, or an arrival paired with a fresh
    departure from the person's own lifeline."""
    out = []
    h, res = compiled.history, compiled.resolution
    horizon = h.times[-1]
    sources: list[Fraction] = []
    for seg in res.segments.get(root, ()):  # departures must leave a live slot
        hi = seg.end_slot if seg.end_slot is not None else horizon
        span = [t for t in h.times if seg.start <= t <= hi]
        for t in span:
            slot = h.slot_at(t)
            if slot is not None and slot.is_nop and t != at:
                sources.append(t)
        for t, nxt in zip(span, span[1:]):
            mid = fresh_time_between(h, t, nxt)
            if mid is not None:
                sources.append(mid)
    sources.append(h.times[-1] + 1)
    for src in dict.fromkeys(sources):
        out.append(Transformation(add=travel_pair(root, src, at)))
    for other in _alive_roots_at(compiled, at):
        if other == root and not cfg.allow_suicide:
            continue
        out.append(Transformation(add=(beget(other, root, at),)))
    return out


def _has_mediator(compiled: CompiledHistory, root: str, t0: Fraction,
                  t1: Fraction, want_positive: bool) -> bool:
    """Does an action between the two requirement times already flip the
    person's existence the way the later requirement needs?"""
    h = compiled.history
    for a in h.actions():
        if not (t0 <= a.at < t1):
            continue
        direct, birth, _ = action_effects(a, compiled.resolution, h)
        for eff in direct + birth:
            if (eff.predicate == "exists" and eff.person.root == root
                    and eff.positive == want_positive and t0 < eff.at <= t1):
                return True
    return False


def _window_slots(h: History, lo: Fraction, hi: Fraction,
                  closed_lo: bool) -> list[Fraction]:
    """Nop slots inside the window; a fresh midpoint when there are none."""
    inside = [
        a.at for a in h.slots
        if (lo <= a.at if closed_lo else lo < a.at) and a.at < hi and a.is_nop
    ]
    if inside:
        return inside
    mid = fresh_time_between(h, lo, hi)
    return [mid] if mid is not None else []


def existence_repair(
    report: ContradictionReport,
    compiled: CompiledHistory,
    cfg: ResolverConfig | None = None,
) -> list[Transformation]:
    """Repair candidates for a contradiction about somebody's existence.

    First the two-sided gap rule: when everything that needs the person dead
    comes after everything that needs them alive (or the reverse), drop an
    eliminating or introducing action into a nop slot in the gap,
    interpolating a fresh state when the gap has no free slot. When the
    requirement times interleave, fall back to segmenting the timeline into
    maximal runs of one polarity and mending each run boundary that no
    existing action already explains.
    """
    cfg = cfg or ResolverConfig()
    fact = report.fact
    if fact.predicate != "exists":
        raise NotApplicableError(
            f"contradiction on {fact.render()} is not an existence clash"
        )
    root = Person.parse(fact.args[0].id).root  # type: ignore[union-attr]
    h = compiled.history
    points = _exists_points(compiled, root)
    if not points:
        raise NotApplicableError(f"no actions constrain the existence of {root}")

    exist_actions = sorted({a.at for (_, pos, a) in points if pos})
    absent_actions = sorted({a.at for (_, pos, a) in points if not pos})
    candidates: list[Transformation] = []

    if exist_actions and absent_actions:
        t_en, t_ex = exist_actions[0], exist_actions[-1]
        t_an, t_ax = absent_actions[0], absent_actions[-1]
        if t_ex < t_an:
            for u in _window_slots(h, t_ex, t_an, closed_lo=False):
                candidates += eliminators(compiled, root, u, cfg)
        elif t_en > t_ax:
            for u in _window_slots(h, t_ax, t_en, closed_lo=False):
                candidates += introducers(compiled, root, u, cfg)

    if not candidates:
        # segmented fallback over requirement points (the interleaved case)
        by_time: dict[Fraction, set[bool]] = {}
        for at, pos, _ in points:
            by_time.setdefault(at, set()).add(pos)
        runs: list[tuple[Fraction, bool]] = []
        for at in sorted(by_time):
            for pos in sorted(by_time[at]):  # False before True at a tie
                if not runs or runs[-1][1] != pos:
                    runs.append((at, pos))
        for (t0, pos0), (t1, pos1) in zip(runs, runs[1:]):
            if pos0 == pos1 or t0 >= t1:
                continue
            if _has_mediator(compiled, root, t0, t1, want_positive=pos1):
                continue
            gen = eliminators if pos0 else introducers
            for u in _window_slots(h, t0, t1, closed_lo=True):
                candidates += gen(compiled, root, u, cfg)

    # drop duplicates, keep generation order
    seen = set()
    unique = []
    for tf in candidates:
        key = tf.serialize()
        if key not in seen:
            seen.add(key)
            unique.append(tf)
    return unique


# -- proactive search -----------------------------------------------------------

def _merge(base: Transformation, extra: Transformation) -> Transformation:
    """Chain two edits; the later one's additions keep later creation order."""
    offset = max((a.seq for a in base.add), default=0) + 1
    bumped = tuple(replace(a, seq=a.seq + offset) for a in extra.add)
    return Transformation(
        remove=base.remove + extra.remove,
        add=base.add + bumped,
        drop_axioms=base.drop_axioms + extra.drop_axioms,
    )


def _units(tf: Transformation) -> int:
    """Budget size: a travel pair counts once, every other addition once."""
    n = sum(1 for a in tf.add if a.kind != ARRIVE)
    return n


def _extensions(tf: Transformation, h: History) -> int:
    lo, hi = h.times[0], h.times[-1]
    fresh = {a.at for a in tf.add} - set(h.times)
    return sum(1 for t in fresh if t < lo or t > hi)


def _axiom_drop_variants(
    tf: Transformation, compiled: CompiledHistory, roots: set[str]
) -> list[Transformation]:
    """The same edit with a clashing existence axiom withdrawn, offered when
    the edit gives that root some other origin."""
    out = []
    for ax in compiled.history.axioms:
        if ax.person in roots and ax not in tf.drop_axioms:
            out.append(replace(tf, drop_axioms=tf.drop_axioms + (ax,)))
    return out


def lifeline_link_candidates(
    compiled: CompiledHistory, violation_root: str, cfg: ResolverConfig
) -> list[Transformation]:
    """Mend a root that lives twice by traveling from the end of one lifeline
    chain to just before the start of the other."""
    h = compiled.history
    res = compiled.resolution
    horizon = h.times[-1]
    segs = res.segments.get(violation_root, [])
    starts = [s for s in segs if s.start_kind in ("axiom", "birth")]
    out: list[Transformation] = []
    for origin_seg in starts:
        # depart from the end of every chain that does not end in death
        for other in segs:
            if other is origin_seg:
                continue
            if other.end_kind == "death":
                continue
            end = other.end_slot if other.end_slot is not None else horizon
            depart_slot: Fraction | None = None
            slot = h.slot_at(end)
            if slot is not None and slot.is_nop:
                depart_slot = end
            else:
                depart_slot = horizon + 1  # extend past the end
            # arrive on a fresh state just before the origin starts
            prev = h.prev_time(origin_seg.start)
            if prev is None:
                arrive_slot = origin_seg.start - 1
            else:
                target = fresh_time_between(h, prev, origin_seg.start)
                if target is None:
                    continue
                arrive_slot = target
            if depart_slot == arrive_slot:
                continue
            out.append(
                Transformation(add=travel_pair(violation_root, depart_slot, arrive_slot))
            )
    return out


@dataclass
class _Candidate:
    tf: Transformation
    note: str


def _seed_candidates(
    compiled: CompiledHistory, cfg: ResolverConfig
) -> list[_Candidate]:
    """Repair seeds for whatever is wrong with a compiled history."""
    seeds: list[_Candidate] = []
    report = compiled.contradiction
    if report is not None:
        try:
            for tf in existence_repair(report, compiled, cfg):
                seeds.append(_Candidate(tf, "existence repair"))
        except NotApplicableError:
            pass
        axiom_premises = {
            f for f in contradiction_premises(report)
            if f in compiled.axiom_facts.values()
        }
        if axiom_premises:
            roots = {Person.parse(f.args[0].id).root for f in axiom_premises}  # type: ignore[union-attr]
            for tf in _axiom_drop_variants(Transformation(), compiled, roots):
                seeds.append(_Candidate(tf, "withdraw clashing origin axiom"))
        return seeds
    for violation in validate_lifelines(compiled.resolution, compiled.history):
        if "origin" in violation.reason:
            for tf in lifeline_link_candidates(compiled, violation.root, cfg):
                seeds.append(_Candidate(tf, f"link lifelines of {violation.root}"))
                for dropped in _axiom_drop_variants(tf, compiled, {violation.root}):
                    seeds.append(
                        _Candidate(dropped, f"link lifelines of {violation.root}")
                    )
            for tf in _axiom_drop_variants(Transformation(), compiled, {violation.root}):
                seeds.append(_Candidate(tf, "withdraw duplicated origin axiom"))
        elif "absent" in violation.reason:
            # someone acts while not there: bring an incarnation to that slot
            offending = next(
                (a for a in compiled.history.actions()
                 if a.render() in violation.reason.split(":")[0]),
                None,
            )
            if offending is None:
                continue
            root = violation.root
            h = compiled.history
            prev = h.prev_time(offending.at)
            if prev is None:
                continue
            slot = h.slot_at(prev)
            u = prev if slot is not None and slot.is_nop else fresh_time_between(h, prev, offending.at)
            if u is None:
                continue
            for tf in introducers(compiled, root, u, cfg):
                seeds.append(_Candidate(tf, f"cover {root} at {offending.render()}"))
    return seeds


def _lifeline_ok(compiled: CompiledHistory) -> bool:
    return not validate_lifelines(compiled.resolution, compiled.history)


def _evaluate(h: History, tf: Transformation, model: Model) -> tuple[History, CompiledHistory] | None:
    try:
        h2 = apply_transformation(h, tf)
        return h2, compile_history(h2, model)
    except (OccupiedSlotError, ValueError):
        return None


def proactive_search(
    h_illegal: History,
    model: Model,
    budget: tuple[int, int] = (2, 2),
    cfg: ResolverConfig | None = None,
) -> list[Solution]:
    """Bounded breadth-first repair of an inconsistent history.

    budget = (max added units, max states appended beyond either end); a
    travel pair is one unit, interpolated interior states are free. Every
    candidate is recompiled and lifeline-checked; candidates that fail in a
    new way are repaired recursively while the budget lasts. Survivors are
    re-verified from scratch and ranked.
    """
    cfg = cfg or ResolverConfig()
    max_units, max_ext = budget
    base = compile_history(h_illegal, model)
    identity = Transformation()
    if base.consistent and _lifeline_ok(base):
        return [
            Solution(identity, h_illegal, base, 0, True, 0, "already consistent")
        ]

    solutions: dict[str, Solution] = {}
    visited: set[str] = set()
    frontier: list[tuple[Transformation, str]] = [(identity, "")]
    nodes = 0

    while frontier and nodes < cfg.max_nodes:
        next_frontier: list[tuple[Transformation, str]] = []
        for tf, note in frontier:
            evaluated = _evaluate(h_illegal, tf, model) if not tf.is_identity else (h_illegal, base)
            if evaluated is None:
                continue
            h2, compiled = evaluated
            nodes += 1
            if compiled.consistent and _lifeline_ok(compiled):
                if not tf.is_identity:
                    key = tf.serialize()
                    if key not in solutions:
                        solutions[key] = _solution(h_illegal, tf, h2, compiled, cfg, note)
                continue
            for seed in _seed_candidates(compiled, cfg):
                merged = _merge(tf, seed.tf)
                key = merged.serialize()
                if key in visited:
                    continue
                visited.add(key)
                if _units(merged) > max_units:
                    continue
                if _extensions(merged, h_illegal) > max_ext:
                    continue
                next_frontier.append((merged, seed.note if not note else f"{note}; {seed.note}"))
        frontier = next_frontier

    verified = []
    for sol in solutions.values():
        again = _evaluate(h_illegal, sol.transformation, model)
        if again is None:
            continue
        h2, compiled = again
        if compiled.consistent and _lifeline_ok(compiled):
            verified.append(sol)
    return rank(verified, cfg)


def _solution(
    h_original: History,
    tf: Transformation,
    h2: History,
    compiled: CompiledHistory,
    cfg: ResolverConfig,
    note: str,
) -> Solution:
    clean = True
    if cfg.user_root is not None:
        clean = all(
            a.actor != cfg.user_root for a in tf.add if a.kind != ARRIVE
        )
    return Solution(
        transformation=tf,
        history=h2,
        compiled=compiled,
        distance=distance(h_original, h2, cfg.weights),
        free_will_clean=clean,
        extensions=_extensions(tf, h_original),
        note=note,
    )


def rank(solutions: list[Solution], cfg: ResolverConfig | None = None) -> list[Solution]:
    """Free-will violators last (or dropped when the filter is on), then by
    distance, fewer timeline extensions, and a stable serialized tie-break."""
    cfg = cfg or ResolverConfig()
    pool = [s for s in solutions if s.free_will_clean] if cfg.free_will_filter else list(solutions)
    return sorted(
        pool,
        key=lambda s: (not s.free_will_clean, s.distance, s.extensions, s.serialize()),
    )
