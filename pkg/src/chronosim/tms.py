"""Explanation over the propagation trail.

Every assigned fact carries the justification that first forced it. Walking
antecedents bottoms out at premises, which gives finite deduction trees and
the premise set behind any contradiction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnknownValueError
from .logic import (
    ContradictionReport,
    Fact,
    Justification,
    Literal,
    Network,
    Truth,
    lit_str,
)


@dataclass(frozen=True)
class ChainNode:
    """One step of a deduction chain: a literal plus the subtrees proving its
    antecedents. Leaves are premises."""

    literal: Literal
    via: str  # clause rendering, or "premise"
    children: tuple["ChainNode", ...]

    @property
    def is_premise(self) -> bool:
        return self.via == "premise"


def explain(network: Network, fact: Fact) -> ChainNode:
    """Build the deduction tree for a fact's current value.

    Raises UnknownValueError for unassigned facts. The tree is finite because
    justifications only ever point at earlier trail entries.
    """
    value = network.value(fact)
    if value is Truth.UNKNOWN:
        raise UnknownValueError(f"{fact.render()} has no value to explain")
    just = network.justification(fact)
    assert just is not None
    return _node(network, just)


def _node(network: Network, just: Justification) -> ChainNode:
    if just.is_premise:
        return ChainNode(just.consequent, "premise", ())
    children = []
    for fact, pos in just.antecedents:
        sub = network.justification(fact)
        assert sub is not None, "antecedent lost its support"
        children.append(_node(network, sub))
    assert just.via is not None
    return ChainNode(just.consequent, just.via.render(), tuple(children))


def chain_from_justification(network: Network, just: Justification) -> ChainNode:
    """Tree for a justification that may not be installed (conflict side)."""
    return _node(network, just)


def premise_leaves(node: ChainNode) -> set[Fact]:
    """The premise facts at the leaves of a chain."""
    if node.is_premise:
        return {node.literal[0]}
    found: set[Fact] = set()
    for child in node.children:
        found |= premise_leaves(child)
    return found


def contradiction_premises(report: ContradictionReport) -> set[Fact]:
    """Union of the premise roots of both chains of a contradiction."""
    t = chain_from_justification(report.network, report.just_true)
    f = chain_from_justification(report.network, report.just_false)
    return premise_leaves(t) | premise_leaves(f)


def contradiction_chains(report: ContradictionReport) -> tuple[ChainNode, ChainNode]:
    """(chain forcing True, chain forcing False) for the conflicted fact."""
    return (
        chain_from_justification(report.network, report.just_true),
        chain_from_justification(report.network, report.just_false),
    )


def render_chain(node: ChainNode, indent: int = 0) -> str:
    """Indented text in the style 'literal; via; ...premises at the leaves'."""
    pad = "  " * indent
    if node.is_premise:
        line = f"{pad}{lit_str(node.literal)}: premise"
    else:
        line = f"{pad}{lit_str(node.literal)}  [{node.via}]"
    parts = [line]
    for child in node.children:
        parts.append(render_chain(child, indent + 1))
    return "\n".join(parts)


def render_report(report: ContradictionReport) -> str:
    chain_t, chain_f = contradiction_chains(report)
    premises = sorted(f.render() for f in contradiction_premises(report))
    return "\n".join(
        [
            f"contradiction on {report.fact.render()}",
            "forced True:",
            render_chain(chain_t, 1),
            "forced False:",
            render_chain(chain_f, 1),
            "premises involved: " + ", ".join(premises),
        ]
    )


def replay_value(network: Network, node: ChainNode) -> bool:
    """Re-derive the chain's root by applying its clause steps bottom-up.

    Returns True when every internal step is licensed by its clause, i.e. the
    recorded antecedents really force the consequent.
    """
    if node.is_premise:
        return True
    for child in node.children:
        if not replay_value(network, child):
            return False
    derived = {child.literal for child in node.children}
    # the clause must force the consequent given exactly these antecedents
    clause = next(
        (c for c in network.clauses if c.render() == node.via), None
    )
    if clause is None:
        return False
    for fact, pos in clause.literals:
        if (fact, pos) == node.literal:
            continue
        if (fact, not pos) not in derived:
            return False
    return True
