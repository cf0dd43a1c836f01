"""Extensive-form game trees with chance nodes and information sets.

Trees are built once and never mutated. Nodes and information sets are
indexed densely in depth-first (preorder) order, so a node's subtree always
occupies the contiguous index range ``[n, n + subtree_size[n])``.

Two builders ship with the package: Kuhn poker and N-rank Leduc hold'em.
Games are selected by string id via :func:`load_game`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from functools import cached_property
from itertools import permutations

import numpy as np

CHANCE = -1


class NodeKind(IntEnum):
    CHANCE = 0
    DECISION = 1
    TERMINAL = 2


@dataclass(frozen=True)
class Node:
    kind: NodeKind
    owner: int  # player index, or CHANCE
    actions: tuple[str, ...] = ()
    children: tuple[int, ...] = ()
    chance_probs: tuple[float, ...] | None = None
    payoff: tuple[float, ...] | None = None
    infoset: int = -1
    label: str = ""  # full history, used to key belief entries


@dataclass(frozen=True)
class InformationSet:
    owner: int
    members: tuple[int, ...]
    actions: tuple[str, ...]
    sequence: tuple[tuple[int, int], ...]  # owner's (infoset, action) history
    key: str


@dataclass(frozen=True)
class Violation:
    kind: str
    node: int = -1
    infoset: int = -1
    message: str = ""


@dataclass(frozen=True, eq=False)
class GameTree:
    """Immutable two-player zero-sum extensive-form game.

    ``infosets`` is a single global list; ``player_infosets[p]`` gives the
    indices owned by player ``p``.
    """

    game_id: str
    players: int
    nodes: tuple[Node, ...]
    infosets: tuple[InformationSet, ...]
    root: int = 0
    ante: float = 1.0

    @cached_property
    def player_infosets(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.players)]
        for u, iset in enumerate(self.infosets):
            out[iset.owner].append(u)
        return tuple(tuple(x) for x in out)

    @cached_property
    def infoset_index(self) -> dict[str, int]:
        return {iset.key: u for u, iset in enumerate(self.infosets)}

    @cached_property
    def max_actions(self) -> int:
        return max((len(i.actions) for i in self.infosets), default=1)

    @cached_property
    def root_infosets(self) -> tuple[tuple[int, ...], ...]:
        """Per player, the infosets with an empty owner sequence."""
        return tuple(
            tuple(u for u in us if not self.infosets[u].sequence)
            for us in self.player_infosets
        )

    @cached_property
    def max_sequence_length(self) -> int:
        """Longest root-to-leaf sequence of decision moves (both players)."""
        best = 0
        stack = [(self.root, 0)]
        while stack:
            n, d = stack.pop()
            node = self.nodes[n]
            if node.kind == NodeKind.TERMINAL:
                best = max(best, d)
                continue
            step = 1 if node.kind == NodeKind.DECISION else 0
            stack.extend((c, d + step) for c in node.children)
        return best

    @cached_property
    def flat(self) -> FlatTree:
        return FlatTree.from_tree(self)

    def terminals(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.kind == NodeKind.TERMINAL]

    def action_index(self, infoset: int, label: str) -> int:
        try:
            return self.infosets[infoset].actions.index(label)
        except ValueError:
            raise ValueError(
                f"action {label!r} not legal at {self.infosets[infoset].key}"
            ) from None


@dataclass(frozen=True, eq=False)
class FlatTree:
    """Array view of a :class:`GameTree` consumed by the numeric kernels.

    Strategies are stored padded as ``float64[n_infosets, max_actions]``.
    For decision nodes ``edge_prob`` is unused; the kernels read
    ``probs[infoset[n], k]`` for the k-th edge instead.
    """

    n_nodes: int
    n_infosets: int
    max_actions: int
    kind: np.ndarray  # int8[n]
    player: np.ndarray  # int32[n], -1 for chance / terminal
    infoset: np.ndarray  # int32[n]
    child_start: np.ndarray  # int32[n]
    n_children: np.ndarray  # int32[n]
    children: np.ndarray  # int32[E]
    edge_prob: np.ndarray  # float64[E], chance edges only
    payoff: np.ndarray  # float64[n], player-0 payoff at terminals
    subtree_size: np.ndarray  # int32[n]
    depth: np.ndarray  # int32[n]
    own_level: np.ndarray  # int32[2, n]: owner decisions strictly above n
    iset_owner: np.ndarray  # int32[U]
    iset_nact: np.ndarray  # int32[U]
    member_start: np.ndarray  # int32[U + 1]
    members: np.ndarray  # int32[M]
    iset_parent_iset: np.ndarray  # int32[U], -1 at root sequences
    iset_parent_action: np.ndarray  # int32[U]
    iset_topo: np.ndarray  # int32[U], parents before children
    action_mask: np.ndarray  # bool[U, max_actions]

    @classmethod
    def from_tree(cls, tree: GameTree) -> FlatTree:
        n = len(tree.nodes)
        kind = np.array([nd.kind for nd in tree.nodes], dtype=np.int8)
        player = np.array(
            [nd.owner if nd.kind == NodeKind.DECISION else -1 for nd in tree.nodes],
            dtype=np.int32,
        )
        infoset = np.array([nd.infoset for nd in tree.nodes], dtype=np.int32)
        n_children = np.array([len(nd.children) for nd in tree.nodes], dtype=np.int32)
        child_start = np.zeros(n, dtype=np.int32)
        child_start[1:] = np.cumsum(n_children)[:-1]
        children = np.array(
            [c for nd in tree.nodes for c in nd.children], dtype=np.int32
        )
        edge_prob = np.array(
            [
                p
                for nd in tree.nodes
                for p in (nd.chance_probs or (0.0,) * len(nd.children))
            ],
            dtype=np.float64,
        )
        payoff = np.array(
            [nd.payoff[0] if nd.payoff is not None else 0.0 for nd in tree.nodes],
            dtype=np.float64,
        )

        size = np.ones(n, dtype=np.int32)
        depth = np.zeros(n, dtype=np.int32)
        level = np.zeros((2, n), dtype=np.int32)
        order = _preorder(tree)
        if order != list(range(n)):
            raise ValueError("node indices must follow depth-first preorder")
        for i in range(n):
            nd = tree.nodes[i]
            for c in nd.children:
                depth[c] = depth[i] + 1
                level[:, c] = level[:, i]
                if nd.kind == NodeKind.DECISION and nd.owner < 2:
                    level[nd.owner, c] += 1
        for i in range(n - 1, -1, -1):
            for c in tree.nodes[i].children:
                size[i] += size[c]

        U = len(tree.infosets)
        maxA = tree.max_actions
        iset_owner = np.array([s.owner for s in tree.infosets], dtype=np.int32)
        iset_nact = np.array([len(s.actions) for s in tree.infosets], dtype=np.int32)
        member_start = np.zeros(U + 1, dtype=np.int32)
        member_start[1:] = np.cumsum([len(s.members) for s in tree.infosets])
        members = np.array(
            [m for s in tree.infosets for m in s.members], dtype=np.int32
        )
        parent_iset = np.array(
            [s.sequence[-1][0] if s.sequence else -1 for s in tree.infosets],
            dtype=np.int32,
        )
        parent_action = np.array(
            [s.sequence[-1][1] if s.sequence else -1 for s in tree.infosets],
            dtype=np.int32,
        )
        topo = np.array(
            sorted(range(U), key=lambda u: (len(tree.infosets[u].sequence), u)),
            dtype=np.int32,
        )
        mask = np.arange(maxA)[None, :] < iset_nact[:, None]
        return cls(
            n_nodes=n,
            n_infosets=U,
            max_actions=maxA,
            kind=kind,
            player=player,
            infoset=infoset,
            child_start=child_start,
            n_children=n_children,
            children=children,
            edge_prob=edge_prob,
            payoff=payoff,
            subtree_size=size,
            depth=depth,
            own_level=level,
            iset_owner=iset_owner,
            iset_nact=iset_nact,
            member_start=member_start,
            members=members,
            iset_parent_iset=parent_iset,
            iset_parent_action=parent_action,
            iset_topo=topo,
            action_mask=mask,
        )


def _preorder(tree: GameTree) -> list[int]:
    out: list[int] = []
    stack = [tree.root]
    while stack:
        n = stack.pop()
        out.append(n)
        stack.extend(reversed(tree.nodes[n].children))
    return out


class _Builder:
    """Accumulates nodes in preorder and registers information sets by key."""

    def __init__(self) -> None:
        self.nodes: list[dict] = []
        self.isets: dict[str, dict] = {}

    def reserve(self) -> int:
        self.nodes.append({})
        return len(self.nodes) - 1

    def infoset(self, key: str, owner: int, actions: tuple[str, ...], seq) -> int:
        entry = self.isets.get(key)
        if entry is None:
            entry = self.isets[key] = {
                "index": len(self.isets),
                "owner": owner,
                "actions": actions,
                "sequence": tuple(seq),
                "members": [],
            }
        return entry["index"]

    def finish(self, game_id: str, ante: float) -> GameTree:
        isets = sorted(self.isets.items(), key=lambda kv: kv[1]["index"])
        for n, spec in enumerate(self.nodes):
            if spec.get("infoset", -1) >= 0:
                isets[spec["infoset"]][1]["members"].append(n)
        return GameTree(
            game_id=game_id,
            players=2,
            nodes=tuple(Node(**spec) for spec in self.nodes),
            infosets=tuple(
                InformationSet(
                    owner=e["owner"],
                    members=tuple(e["members"]),
                    actions=e["actions"],
                    sequence=e["sequence"],
                    key=key,
                )
                for key, e in isets
            ),
            root=0,
            ante=ante,
        )


KUHN_CARDS = "JQK"


def build_kuhn() -> GameTree:
    """Three-card Kuhn poker: ante 1, one betting round, bet size 1."""
    b = _Builder()
    root = b.reserve()
    deals = list(permutations(range(3), 2))
    kids = []
    for cards in deals:
        kids.append(b.reserve())
        _kuhn_decision(b, kids[-1], cards, "", ((), ()))
    b.nodes[root] = dict(
        kind=NodeKind.CHANCE,
        owner=CHANCE,
        actions=tuple(KUHN_CARDS[c0] + KUHN_CARDS[c1] for c0, c1 in deals),
        children=tuple(kids),
        chance_probs=(1.0 / len(deals),) * len(deals),
        label="",
    )
    return b.finish("kuhn", ante=1.0)


_KUHN_CODE = {"check": "k", "bet": "b", "call": "c", "fold": "f"}


def _kuhn_decision(b: _Builder, idx: int, cards, hist: str, seqs) -> None:
    label = KUHN_CARDS[cards[0]] + KUHN_CARDS[cards[1]] + ":" + hist
    # terminal histories
    if hist in ("kk", "bc", "kbc"):
        stake = 1.0 if hist == "kk" else 2.0
        win = stake if cards[0] > cards[1] else -stake
        b.nodes[idx] = dict(
            kind=NodeKind.TERMINAL, owner=CHANCE, payoff=(win, -win), label=label
        )
        return
    if hist in ("bf", "kbf"):
        # the player who folded loses the ante
        folder = (len(hist) - 1) % 2
        win = -1.0 if folder == 0 else 1.0
        b.nodes[idx] = dict(
            kind=NodeKind.TERMINAL, owner=CHANCE, payoff=(win, -win), label=label
        )
        return
    player = len(hist) % 2
    actions = ("call", "fold") if hist.endswith("b") else ("check", "bet")
    key = f"p{player}/{KUHN_CARDS[cards[player]]}/{hist}"
    u = b.infoset(key, player, actions, seqs[player])
    kids = []
    for a, act in enumerate(actions):
        kids.append(b.reserve())
        new = list(seqs)
        new[player] = seqs[player] + ((u, a),)
        _kuhn_decision(b, kids[-1], cards, hist + _KUHN_CODE[act], tuple(new))
    b.nodes[idx] = dict(
        kind=NodeKind.DECISION,
        owner=player,
        actions=actions,
        children=tuple(kids),
        infoset=u,
        label=label,
    )


RANK_NAMES = "23456789TJQKA"
SUIT_NAMES = "sh"
LEDUC_RAISE = (2.0, 4.0)
LEDUC_MAX_RAISES = 2
_LEDUC_CODE = {"check": "k", "call": "c", "raise": "r", "fold": "f"}


def leduc_rank_names(num_ranks: int) -> str:
    if num_ranks <= len(RANK_NAMES):
        return RANK_NAMES[-num_ranks:]
    raise ValueError(f"at most {len(RANK_NAMES)} ranks supported")


def build_leduc(num_ranks: int = 3) -> GameTree:
    """N-rank Leduc hold'em (two suits per rank).

    Ante 1 per player, raise sizes 2 then 4, at most two raises per round,
    fold always legal. Player 0 acts first in both rounds. A private card
    pairing the public card wins; otherwise the higher rank wins.
    """
    if num_ranks < 2:
        raise ValueError("num_ranks must be >= 2")
    names = leduc_rank_names(num_ranks)
    deck = [(r, s) for r in range(num_ranks) for s in range(2)]
    b = _Builder()
    root = b.reserve()
    deals = list(permutations(range(len(deck)), 2))
    kids = []
    for c0, c1 in deals:
        kids.append(b.reserve())
        game = _LeducHand(names, deck, (c0, c1))
        game.decision(b, kids[-1], 0, "", "", (1.0, 1.0), 0, ((), ()))
    b.nodes[root] = dict(
        kind=NodeKind.CHANCE,
        owner=CHANCE,
        actions=tuple(_card_name(names, deck[c0]) + _card_name(names, deck[c1]) for c0, c1 in deals),
        children=tuple(kids),
        chance_probs=(1.0 / len(deals),) * len(deals),
        label="",
    )
    game_id = "leduc" if num_ranks == 3 else f"leduc{num_ranks}"
    return b.finish(game_id, ante=1.0)


def _card_name(names: str, card: tuple[int, int]) -> str:
    return names[card[0]] + SUIT_NAMES[card[1]]


@dataclass
class _LeducHand:
    names: str
    deck: list[tuple[int, int]]
    private: tuple[int, int]
    public: int = field(default=-1)

    def _label(self, hist: str) -> str:
        cards = "".join(_card_name(self.names, self.deck[c]) for c in self.private)
        if self.public >= 0:
            cards += "|" + _card_name(self.names, self.deck[self.public])
        return f"{cards}:{hist}"

    def _public_history(self, r1: str, r2: str, rnd: int) -> str:
        if rnd == 0:
            return r1
        return f"{r1}|{self.names[self.deck[self.public][0]]}|{r2}"

    def decision(self, b, idx, rnd, r1, r2, contrib, raises, seqs):
        hist = r1 if rnd == 0 else r2
        player = len(hist) % 2
        facing = contrib[0] != contrib[1]
        actions = ["call" if facing else "check"]
        if raises < LEDUC_MAX_RAISES:
            actions.append("raise")
        actions.append("fold")
        actions = tuple(actions)
        obs = self.names[self.deck[self.private[player]][0]]
        key = f"p{player}/{obs}/{self._public_history(r1, r2, rnd)}"
        u = b.infoset(key, player, actions, seqs[player])
        kids = []
        for a, act in enumerate(actions):
            kids.append(b.reserve())
            new = list(seqs)
            new[player] = seqs[player] + ((u, a),)
            new = tuple(new)
            code = _LEDUC_CODE[act]
            n1, n2 = (r1 + code, r2) if rnd == 0 else (r1, r2 + code)
            c = list(contrib)
            if act == "fold":
                win = -c[0] if player == 0 else c[1]
                b.nodes[kids[-1]] = dict(
                    kind=NodeKind.TERMINAL,
                    owner=CHANCE,
                    payoff=(win, -win),
                    label=self._label(n1 if rnd == 0 else f"{r1}/{n2}"),
                )
                continue
            if act == "raise":
                c[player] = max(c) + LEDUC_RAISE[rnd]
                self.decision(b, kids[-1], rnd, n1, n2, tuple(c), raises + 1, new)
                continue
            c[player] = max(c)
            round_over = act == "call" or (act == "check" and player == 1)
            if not round_over:
                self.decision(b, kids[-1], rnd, n1, n2, tuple(c), raises, new)
            elif rnd == 0:
                self.deal_public(b, kids[-1], n1, tuple(c), new)
            else:
                self.showdown(b, kids[-1], f"{r1}/{n2}", tuple(c))
        b.nodes[idx] = dict(
            kind=NodeKind.DECISION,
            owner=player,
            actions=actions,
            children=tuple(kids),
            infoset=u,
            label=self._label(hist if rnd == 0 else f"{r1}/{r2}"),
        )

    def deal_public(self, b, idx, r1, contrib, seqs):
        rest = [c for c in range(len(self.deck)) if c not in self.private]
        kids = []
        for card in rest:
            kids.append(b.reserve())
            sub = _LeducHand(self.names, self.deck, self.private, card)
            sub.decision(b, kids[-1], 1, r1, "", contrib, 0, seqs)
        b.nodes[idx] = dict(
            kind=NodeKind.CHANCE,
            owner=CHANCE,
            actions=tuple(_card_name(self.names, self.deck[c]) for c in rest),
            children=tuple(kids),
            chance_probs=(1.0 / len(rest),) * len(rest),
            label=self._label(r1),
        )

    def showdown(self, b, idx, hist, contrib):
        pub = self.deck[self.public][0]
        r0, r1 = (self.deck[c][0] for c in self.private)
        s0 = (1 if r0 == pub else 0, r0)
        s1 = (1 if r1 == pub else 0, r1)
        if s0 > s1:
            win = contrib[1]
        elif s1 > s0:
            win = -contrib[0]
        else:
            win = 0.0
        b.nodes[idx] = dict(
            kind=NodeKind.TERMINAL,
            owner=CHANCE,
            payoff=(float(win), float(-win)),
            label=self._label(hist),
        )


_LEDUC_ID = re.compile(r"^leduc(\d*)$")


def load_game(game_id: str) -> GameTree:
    """Build a game from its id: ``kuhn``, ``leduc``, ``leduc5``, ``leduc<N>``."""
    if game_id == "kuhn":
        return build_kuhn()
    m = _LEDUC_ID.match(game_id)
    if m:
        ranks = int(m.group(1)) if m.group(1) else 3
        tree = build_leduc(ranks)
        if tree.game_id != game_id:
            # "leduc3" is accepted as an alias of "leduc"
            tree = GameTree(game_id, tree.players, tree.nodes, tree.infosets, tree.root, tree.ante)
        return tree
    raise ValueError(f"unknown game id {game_id!r}")


def chance_reach(tree: GameTree) -> list[Fraction]:
    """Exact chance-only reach probability of every node, as rationals."""
    reach = [Fraction(0)] * len(tree.nodes)
    reach[tree.root] = Fraction(1)
    for i in _preorder(tree):
        nd = tree.nodes[i]
        for k, c in enumerate(nd.children):
            if nd.kind == NodeKind.CHANCE:
                reach[c] = reach[i] * Fraction(nd.chance_probs[k]).limit_denominator(10**9)
            else:
                reach[c] = reach[i]
    return reach


def validate(tree: GameTree) -> list[Violation]:
    """Check structural, zero-sum, perfect-recall and infoset invariants.

    Returns one :class:`Violation` per problem found; an empty list means
    the tree is well formed.
    """
    out: list[Violation] = []
    n = len(tree.nodes)
    parents = [0] * n
    for i, nd in enumerate(tree.nodes):
        for c in nd.children:
            if not 0 <= c < n:
                out.append(Violation("bad_child", node=i, message=f"child {c} out of range"))
                continue
            parents[c] += 1
    for i in range(n):
        want = 0 if i == tree.root else 1
        if parents[i] != want:
            out.append(Violation("tree_shape", node=i, message=f"{parents[i]} parents"))
    if out:
        return out

    seen = set()
    stack = [tree.root]
    while stack:
        i = stack.pop()
        if i in seen:
            out.append(Violation("cycle", node=i))
            continue
        seen.add(i)
        stack.extend(tree.nodes[i].children)
    for i in range(n):
        if i not in seen:
            out.append(Violation("unreachable", node=i))

    for i, nd in enumerate(tree.nodes):
        if nd.kind == NodeKind.TERMINAL:
            if nd.children:
                out.append(Violation("terminal_children", node=i))
            if nd.payoff is None or len(nd.payoff) != tree.players:
                out.append(Violation("payoff_shape", node=i))
            elif abs(sum(nd.payoff)) > 1e-12:
                out.append(
                    Violation("zero_sum", node=i, message=f"payoffs sum to {sum(nd.payoff)}")
                )
            continue
        if not nd.children or len(nd.actions) != len(nd.children):
            out.append(Violation("actions", node=i, message="missing or mismatched actions"))
        if nd.kind == NodeKind.CHANCE:
            probs = nd.chance_probs
            if probs is None or len(probs) != len(nd.children):
                out.append(Violation("chance_probs", node=i, message="missing"))
            elif min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
                out.append(Violation("chance_probs", node=i, message="not a distribution"))
        elif nd.chance_probs is not None:
            out.append(Violation("chance_probs", node=i, message="on a decision node"))

    # owner sequences observed along every path
    observed: dict[int, tuple] = {}
    stack = [(tree.root, ((),) * tree.players)]
    while stack:
        i, seqs = stack.pop()
        nd = tree.nodes[i]
        if nd.kind == NodeKind.DECISION:
            observed[i] = seqs[nd.owner]
        for k, c in enumerate(nd.children):
            if nd.kind == NodeKind.DECISION and 0 <= nd.owner < tree.players:
                s = list(seqs)
                s[nd.owner] = seqs[nd.owner] + ((nd.infoset, k),)
                stack.append((c, tuple(s)))
            else:
                stack.append((c, seqs))

    for u, iset in enumerate(tree.infosets):
        if not iset.members:
            out.append(Violation("infoset_empty", infoset=u))
            continue
        for m in iset.members:
            nd = tree.nodes[m]
            if nd.kind != NodeKind.DECISION or nd.owner != iset.owner or nd.infoset != u:
                out.append(Violation("infoset_member", node=m, infoset=u))
            elif nd.actions != iset.actions:
                out.append(Violation("infoset_actions", node=m, infoset=u))
        seqs = {observed.get(m) for m in iset.members}
        if len(seqs) > 1:
            out.append(
                Violation("perfect_recall", infoset=u, message="members differ in owner history")
            )
        elif seqs != {iset.sequence}:
            out.append(
                Violation("perfect_recall", infoset=u, message="stored sequence mismatch")
            )
    for i, nd in enumerate(tree.nodes):
        if nd.kind == NodeKind.DECISION:
            if not 0 <= nd.infoset < len(tree.infosets) or i not in tree.infosets[nd.infoset].members:
                out.append(Violation("infoset_member", node=i, infoset=nd.infoset))
    return out
