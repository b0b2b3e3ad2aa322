"""Extensive-form game trees with information sets and imperfect recall."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .blocks import BlockStructure
from .poly import StructureMismatch


class GameError(ValueError):
    pass

class NotATree(GameError):
    pass

class BadChanceDistribution(GameError):
    pass

class InconsistentInfoset(GameError):
    pass

class MissingPayoff(GameError):
    pass


DECISION = "decision"
CHANCE = "chance"
TERMINAL = "terminal"

CHANCE_TOL = 1e-12


@dataclass(frozen=True)
class Edge:
    label: str
    child: str
    prob: float | None = None


@dataclass(frozen=True)
class Node:
    id: str
    kind: str                       # decision | chance | terminal
    player: int | None = None       # 1-based, decision nodes only
    infoset: str | None = None      # decision nodes only
    edges: tuple[Edge, ...] = ()
    payoffs: tuple[float, ...] | None = None


class RecallClass(Enum):
    PERFECT_RECALL = "perfect_recall"
    NON_ABSENTMINDED = "non_absentminded"
    ABSENTMINDED = "absentminded"


@dataclass(frozen=True)
class RecallReport:
    kind: RecallClass
    witness: tuple[str, str] | None = None

    def __post_init__(self):
        if (self.witness is None) != (self.kind is RecallClass.PERFECT_RECALL):
            raise ValueError("witness must be present exactly for imperfect recall")


class GameTree:
    """Rooted tree of decision, chance and terminal nodes.

    Instances are treated as immutable after :meth:`validate`; the derived
    block structure and orderings are cached on first use.
    """

    def __init__(self, players: int, nodes: list[Node], root: str):
        self.players = int(players)
        self.nodes = {n.id: n for n in nodes}
        if len(self.nodes) != len(nodes):
            raise NotATree("duplicate node ids")
        self.root = root
        self._parent: dict[str, tuple[str, str]] | None = None
        self._structure: BlockStructure | None = None
        self._infoset_order: list[tuple[int, str]] | None = None
        self._action_order: dict[str, list[str]] | None = None

    # -- validation ------------------------------------------------------------

    def validate(self) -> None:
        if self.root not in self.nodes:
            raise NotATree(f"root {self.root!r} is not a node")
        parent: dict[str, tuple[str, str]] = {}
        seen = set()
        stack = [self.root]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise NotATree(f"node {nid!r} reached twice")
            seen.add(nid)
            node = self.nodes[nid]
            for e in node.edges:
                if e.child not in self.nodes:
                    raise NotATree(f"edge from {nid!r} to unknown node {e.child!r}")
                if e.child in parent or e.child == self.root:
                    raise NotATree(f"node {e.child!r} has two parents or is the root")
                parent[e.child] = (nid, e.label)
                stack.append(e.child)
        if seen != set(self.nodes):
            extra = sorted(set(self.nodes) - seen)
            raise NotATree(f"nodes unreachable from root: {extra}")

        infoset_players: dict[str, int] = {}
        infoset_actions: dict[str, tuple[str, ...]] = {}
        for node in self.nodes.values():
            if node.kind == TERMINAL:
                if node.payoffs is None or len(node.payoffs) != self.players:
                    raise MissingPayoff(f"terminal {node.id!r} needs a {self.players}-vector payoff")
                if node.edges:
                    raise NotATree(f"terminal {node.id!r} has children")
                continue
            if not node.edges:
                raise NotATree(f"{node.kind} node {node.id!r} has no actions")
            if node.payoffs is not None:
                raise MissingPayoff(f"non-terminal {node.id!r} carries payoffs")
            if len({e.label for e in node.edges}) != len(node.edges):
                raise InconsistentInfoset(f"duplicate action labels at {node.id!r}")
            if node.kind == CHANCE:
                probs = [e.prob for e in node.edges]
                if any(p is None for p in probs):
                    raise BadChanceDistribution(f"chance node {node.id!r} missing probabilities")
                if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > CHANCE_TOL:
                    raise BadChanceDistribution(
                        f"chance node {node.id!r} has probabilities {probs}")
            elif node.kind == DECISION:
                if node.player is None or not 1 <= node.player <= self.players:
                    raise GameError(f"decision node {node.id!r} has bad player {node.player}")
                if node.infoset is None:
                    raise InconsistentInfoset(f"decision node {node.id!r} has no infoset")
                if any(e.prob is not None for e in node.edges):
                    raise GameError(f"decision node {node.id!r} carries probabilities")
                labels = tuple(sorted(e.label for e in node.edges))
                key = node.infoset
                if key in infoset_players:
                    if infoset_players[key] != node.player:
                        raise InconsistentInfoset(f"infoset {key!r} spans two players")
                    if infoset_actions[key] != labels:
                        raise InconsistentInfoset(
                            f"infoset {key!r} has inconsistent action sets")
                else:
                    infoset_players[key] = node.player
                    infoset_actions[key] = labels
            else:
                raise GameError(f"unknown node kind {node.kind!r}")
        self._parent = parent

    # -- derived structure -------------------------------------------------------

    def parent_map(self) -> dict[str, tuple[str, str]]:
        if self._parent is None:
            self.validate()
        return self._parent

    def preorder(self) -> list[str]:
        """Depth-first node order, children visited in action-label order."""
        out = []
        stack = [self.root]
        while stack:
            nid = stack.pop()
            out.append(nid)
            node = self.nodes[nid]
            for e in sorted(node.edges, key=lambda e: e.label, reverse=True):
                stack.append(e.child)
        return out

    def _build_orders(self):
        per_player: dict[int, set[str]] = {i: set() for i in range(1, self.players + 1)}
        actions: dict[str, list[str]] = {}
        for nid in self.preorder():
            node = self.nodes[nid]
            if node.kind != DECISION:
                continue
            if node.infoset not in actions:
                per_player[node.player].add(node.infoset)
                actions[node.infoset] = sorted(e.label for e in node.edges)
        self._infoset_order = [(i, iset) for i in sorted(per_player)
                               for iset in sorted(per_player[i])]
        self._action_order = actions

    def infoset_order(self) -> list[tuple[int, str]]:
        """(player, sorted infoset id) pairs in canonical block order."""
        if self._infoset_order is None:
            self._build_orders()
        return self._infoset_order

    def action_order(self, infoset: str) -> list[str]:
        if self._action_order is None:
            self._build_orders()
        return self._action_order[infoset]

    def block_structure(self) -> BlockStructure:
        """Players by label, infosets by id, actions by edge label."""
        if self._structure is None:
            order = self.infoset_order()
            sizes = []
            for i in range(1, self.players + 1):
                own = [len(self.action_order(iset)) for p, iset in order if p == i]
                sizes.append(tuple(own) if own else ())
            # a player with no decision nodes gets one trivial single-action block
            sizes = [s if s else (1,) for s in sizes]
            self._structure = BlockStructure(tuple(sizes))
        return self._structure

    def var_of(self, infoset: str, label: str) -> int:
        order = self.infoset_order()
        player = next(p for p, iset in order if iset == infoset)
        j = [iset for p, iset in order if p == player].index(infoset)
        a = self.action_order(infoset).index(label)
        return self.block_structure().var_index(player - 1, j, a)

    # -- recall classification ------------------------------------------------------

    def history(self, nid: str) -> list[tuple[str, str]]:
        """(ancestor node, action label) pairs from the root down to nid."""
        if nid not in self.nodes:
            raise GameError(f"unknown node {nid!r}")
        parent = self.parent_map()
        path = []
        cur = nid
        while cur in parent:
            p, label = parent[cur]
            path.append((p, label))
            cur = p
        path.reverse()
        return path

    def depth(self, nid: str) -> int:
        return len(self.history(nid))

    def classify_recall(self) -> RecallReport:
        infosets: dict[str, list[str]] = {}
        for node in self.nodes.values():
            if node.kind == DECISION:
                infosets.setdefault(node.infoset, []).append(node.id)
        for key in sorted(infosets):
            members = sorted(infosets[key])
            ancestors = {m: {p for p, _ in self.history(m)} for m in members}
            for a in members:
                for b in members:
                    if a != b and a in ancestors[b]:
                        return RecallReport(RecallClass.ABSENTMINDED, (a, b))
        # non-absentminded; perfect recall iff own histories agree within infosets
        for key in sorted(infosets):
            members = sorted(infosets[key])
            own_hist = []
            for m in members:
                player = self.nodes[m].player
                h = tuple((self.nodes[p].infoset, lab) for p, lab in self.history(m)
                          if self.nodes[p].kind == DECISION and self.nodes[p].player == player)
                own_hist.append(h)
            for h, m in zip(own_hist[1:], members[1:]):
                if h != own_hist[0]:
                    return RecallReport(RecallClass.NON_ABSENTMINDED, (members[0], m))
        return RecallReport(RecallClass.PERFECT_RECALL)

    # -- play ---------------------------------------------------------------------

    def expected_utility(self, strategy: "BehavioralStrategy", player: int) -> float:
        """Sum over terminals of reach probability times payoff for one player."""
        if strategy.structure != self.block_structure():
            raise StructureMismatch("strategy does not match the tree's block structure")
        values = strategy.clamped()
        total = 0.0
        stack = [(self.root, 1.0)]
        while stack:
            nid, prob = stack.pop()
            node = self.nodes[nid]
            if node.kind == TERMINAL:
                total += prob * node.payoffs[player - 1]
            elif node.kind == CHANCE:
                for e in node.edges:
                    stack.append((e.child, prob * e.prob))
            else:
                for e in node.edges:
                    v = self.var_of(node.infoset, e.label)
                    stack.append((e.child, prob * values[v]))
        return total

    def reach_probabilities(self, strategy: "BehavioralStrategy") -> dict[str, float]:
        values = strategy.clamped()
        out = {}
        stack = [(self.root, 1.0)]
        while stack:
            nid, prob = stack.pop()
            node = self.nodes[nid]
            if node.kind == TERMINAL:
                out[nid] = prob
            elif node.kind == CHANCE:
                for e in node.edges:
                    stack.append((e.child, prob * e.prob))
            else:
                for e in node.edges:
                    v = self.var_of(node.infoset, e.label)
                    stack.append((e.child, prob * values[v]))
        return out

    # -- JSON ------------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        nodes = []
        for nid in self.preorder():
            node = self.nodes[nid]
            d: dict = {"id": node.id, "kind": node.kind}
            if node.kind == DECISION:
                d["player"] = node.player
                d["infoset"] = node.infoset
            if node.kind == TERMINAL:
                d["payoffs"] = list(node.payoffs)
            else:
                acts = []
                for e in node.edges:
                    a = {"label": e.label, "child": e.child}
                    if e.prob is not None:
                        a["prob"] = e.prob
                    acts.append(a)
                d["actions"] = acts
            nodes.append(d)
        return {"players": self.players, "nodes": nodes, "root": self.root}

    @staticmethod
    def from_json_dict(data: dict) -> "GameTree":
        nodes = []
        for d in data["nodes"]:
            edges = tuple(Edge(a["label"], a["child"], a.get("prob"))
                          for a in d.get("actions", []))
            payoffs = tuple(float(x) for x in d["payoffs"]) if "payoffs" in d else None
            nodes.append(Node(id=d["id"], kind=d["kind"], player=d.get("player"),
                              infoset=d.get("infoset"), edges=edges, payoffs=payoffs))
        tree = GameTree(int(data["players"]), nodes, data["root"])
        tree.validate()
        return tree

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_dict(), **kw)

    @staticmethod
    def from_json(text: str) -> "GameTree":
        return GameTree.from_json_dict(json.loads(text))


NEG_TOL = 1e-9


@dataclass(frozen=True)
class BehavioralStrategy:
    """Flat vector of action probabilities, one simplex block per infoset."""

    structure: BlockStructure
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != self.structure.num_vars:
            raise StructureMismatch("strategy length does not match structure")
        for _, _, sl in self.structure.blocks():
            block = self.values[sl]
            if min(block) < -NEG_TOL:
                raise ValueError(f"strategy entry {min(block)} below -{NEG_TOL}")
            if abs(sum(block) - 1.0) > NEG_TOL:
                raise ValueError(f"block sum {sum(block)} is not 1")

    @staticmethod
    def of(structure: BlockStructure, values) -> "BehavioralStrategy":
        return BehavioralStrategy(structure, tuple(float(v) for v in values))

    @staticmethod
    def uniform(structure: BlockStructure) -> "BehavioralStrategy":
        vals = []
        for m in structure.block_sizes():
            vals.extend([1.0 / m] * m)
        return BehavioralStrategy(structure, tuple(vals))

    def clamped(self) -> np.ndarray:
        """Entries clipped into [0, 1]; slight SDP-side negatives vanish here."""
        return np.clip(np.asarray(self.values), 0.0, 1.0)

    def block(self, player: int, infoset: int) -> tuple[float, ...]:
        return self.values[self.structure.block_slice(player, infoset)]

    def blocks(self) -> list[tuple[float, ...]]:
        return [self.values[sl] for _, _, sl in self.structure.blocks()]


def validate(tree: GameTree) -> None:
    tree.validate()

def classify_recall(tree: GameTree) -> RecallReport:
    return tree.classify_recall()

def history(tree: GameTree, node: str) -> list[tuple[str, str]]:
    return tree.history(node)

def expected_utility_at(tree: GameTree, strategy: BehavioralStrategy, player: int) -> float:
    return tree.expected_utility(strategy, player)
