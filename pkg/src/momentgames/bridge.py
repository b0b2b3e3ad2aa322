"""Conversions between game trees and expected-utility polynomials.

``game_to_polynomial`` expands reach probabilities: one monomial per terminal
(before merging), chance probabilities folded into coefficients.

``polynomial_to_game`` realizes a single-player polynomial as a game tree: a
chance root picks one monomial subtree uniformly, each subtree walks the
monomial's (infoset, action) multiset in lexicographic order inserting
decision nodes whose sibling edges end in zero-payoff leaves, and the
designated terminal pays coefficient times support size.
"""

from __future__ import annotations

from .blocks import BlockStructure, Mono, mono_degree
from .game import CHANCE, DECISION, TERMINAL, Edge, GameTree, Node
from .poly import Polynomial


def game_to_polynomial(tree: GameTree, player: int = 1) -> Polynomial:
    """Expected utility of one player as a polynomial in all strategy blocks."""
    tree.validate()
    structure = tree.block_structure()
    n = structure.num_vars
    terms: dict[Mono, float] = {}
    stack: list[tuple[str, float, tuple[int, ...]]] = [(tree.root, 1.0, (0,) * n)]
    while stack:
        nid, coef, mono = stack.pop()
        node = tree.nodes[nid]
        if node.kind == TERMINAL:
            c = coef * node.payoffs[player - 1]
            if c != 0.0:
                terms[mono] = terms.get(mono, 0.0) + c
        elif node.kind == CHANCE:
            for e in node.edges:
                stack.append((e.child, coef * e.prob, mono))
        else:
            for e in node.edges:
                v = tree.var_of(node.infoset, e.label)
                m = list(mono)
                m[v] += 1
                stack.append((e.child, coef, tuple(m)))
    return Polynomial(structure, terms)


def _action_label(a: int) -> str:
    return f"a{a + 1:03d}"


def polynomial_to_game(p: Polynomial) -> GameTree:
    """Single-player game tree whose expected utility equals ``p``."""
    structure = p.structure
    if structure.num_players != 1:
        raise ValueError("polynomial_to_game needs a single-player structure")
    sizes = structure.sizes[0]
    support = [m for m, _ in p.sorted_terms()]

    nodes: list[Node] = []
    counter = [0]

    def fresh(prefix: str) -> str:
        counter[0] += 1
        return f"{prefix}{counter[0]}"

    if not support:
        root = Node(id="z0", kind=TERMINAL, payoffs=(0.0,))
        return GameTree(1, [root], "z0")

    scale = float(len(support))

    if support == [tuple(0 for _ in range(structure.num_vars))]:
        # pure constant: no chance node needed
        c = p.terms[support[0]]
        root = Node(id="z0", kind=TERMINAL, payoffs=(c,))
        return GameTree(1, [root], "z0")

    def build_chain(mono: Mono, coef: float) -> str:
        """Subtree for one monomial; returns its top node id."""
        # the (infoset, action) multiset in lexicographic order with multiplicity
        steps: list[tuple[int, int]] = []
        for v, e in enumerate(mono):
            if e:
                _, j, a = structure.var_triple(v)
                steps.extend([(j, a)] * e)
        payoff = coef * scale
        if not steps:
            zid = fresh("z")
            nodes.append(Node(id=zid, kind=TERMINAL, payoffs=(payoff,)))
            return zid
        # build bottom-up: terminal first, then decision nodes in reverse order
        child = fresh("z")
        nodes.append(Node(id=child, kind=TERMINAL, payoffs=(payoff,)))
        for j, a in reversed(steps):
            m = sizes[j]
            edges = []
            for a2 in range(m):
                if a2 == a:
                    edges.append(Edge(_action_label(a2), child))
                else:
                    zid = fresh("z")
                    nodes.append(Node(id=zid, kind=TERMINAL, payoffs=(0.0,)))
                    edges.append(Edge(_action_label(a2), zid))
            did = fresh("d")
            nodes.append(Node(id=did, kind=DECISION, player=1, infoset=f"I{j + 1:03d}",
                              edges=tuple(edges)))
            child = did
        return child

    tops = [build_chain(m, p.terms[m]) for m in support]
    root_edges = tuple(Edge(f"m{t + 1:03d}", top, prob=1.0 / scale)
                       for t, top in enumerate(tops))
    nodes.append(Node(id="c0", kind=CHANCE, edges=root_edges))
    tree = GameTree(1, nodes, "c0")
    tree.validate()
    return tree
