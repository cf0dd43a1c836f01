from fractions import Fraction

import numpy as np
import pytest
from oracles import leduc_terminal_count

from bufp.game import (
    CHANCE,
    GameTree,
    InformationSet,
    Node,
    NodeKind,
    build_leduc,
    chance_reach,
    load_game,
    validate,
)


def _leaf(x, y=None):
    return Node(NodeKind.TERMINAL, CHANCE, payoff=(x, -x if y is None else y))


def one_decision_tree(payoff=(1.0, -1.0)):
    nodes = (
        Node(NodeKind.DECISION, 0, ("a", "b"), (1, 2), infoset=0, label=""),
        Node(NodeKind.TERMINAL, CHANCE, payoff=payoff, label="a"),
        _leaf(-1.0),
    )
    isets = (InformationSet(0, (0,), ("a", "b"), (), "p0/root"),)
    return GameTree("toy", 2, nodes, isets)


def forgetful_tree():
    # player 0 moves, then reaches one infoset from both branches
    nodes = (
        Node(NodeKind.DECISION, 0, ("a", "b"), (1, 4), infoset=0),
        Node(NodeKind.DECISION, 0, ("x", "y"), (2, 3), infoset=1),
        _leaf(1.0),
        _leaf(0.0),
        Node(NodeKind.DECISION, 0, ("x", "y"), (5, 6), infoset=1),
        _leaf(2.0),
        _leaf(-1.0),
    )
    isets = (
        InformationSet(0, (0,), ("a", "b"), (), "p0/root"),
        InformationSet(0, (1, 4), ("x", "y"), ((0, 0),), "p0/merged"),
    )
    return GameTree("forgetful", 2, nodes, isets)


def test_kuhn_shape(kuhn):
    assert len(kuhn.nodes) == 55
    assert len(kuhn.infosets) == 12
    assert len(kuhn.terminals()) == 30
    assert [len(s) for s in kuhn.player_infosets] == [6, 6]
    assert validate(kuhn) == []


def test_kuhn_chance_reach_sums_to_one(kuhn):
    reach = chance_reach(kuhn)
    assert {reach[z] for z in kuhn.terminals()} == {Fraction(1, 6)}
    for u in kuhn.player_infosets[1]:
        assert sum(reach[m] for m in kuhn.infosets[u].members) == Fraction(1, 3)


def test_leduc_terminal_count_matches_rule_enumerator(leduc):
    assert len(leduc.terminals()) == leduc_terminal_count(3)
    assert validate(leduc) == []


def test_leduc5_terminal_count():
    tree = load_game("leduc5")
    assert len(tree.terminals()) == leduc_terminal_count(5)
    assert tree.game_id == "leduc5"


def test_leduc_root_actions(leduc):
    for u in leduc.root_infosets[0]:
        assert leduc.infosets[u].actions == ("check", "raise", "fold")


def test_leduc_payoffs_bounded(leduc):
    # max commitment: ante 1 + 2 raises of 2 + 2 raises of 4
    pay = np.array([leduc.nodes[z].payoff[0] for z in leduc.terminals()])
    assert pay.max() == 13 and pay.min() == -13


def test_leduc_dense_preorder_indices(leduc):
    ft = leduc.flat
    assert ft.subtree_size[leduc.root] == len(leduc.nodes)
    for n in range(0, len(leduc.nodes), 97):
        kids = leduc.nodes[n].children
        if kids:
            assert kids[0] == n + 1
            assert kids[-1] + ft.subtree_size[kids[-1]] == n + ft.subtree_size[n]


def test_build_is_deterministic():
    a, b = build_leduc(3), build_leduc(3)
    assert [n.label for n in a.nodes] == [n.label for n in b.nodes]
    assert [i.key for i in a.infosets] == [i.key for i in b.infosets]


def test_load_game_ids():
    assert load_game("leduc3").game_id == "leduc3"
    assert len(load_game("leduc3").nodes) == len(load_game("leduc").nodes)
    with pytest.raises(ValueError):
        load_game("holdem")
    with pytest.raises(ValueError):
        build_leduc(1)


def test_validate_accepts_toy():
    assert validate(one_decision_tree()) == []


def test_validate_flags_non_zero_sum_leaf():
    v = validate(one_decision_tree((1.0, -0.5)))
    assert [x.kind for x in v] == ["zero_sum"]
    assert v[0].node == 1


def test_validate_flags_imperfect_recall():
    v = validate(forgetful_tree())
    assert [x.kind for x in v] == ["perfect_recall"]
    assert v[0].infoset == 1


def test_validate_flags_bad_chance_distribution():
    nodes = (
        Node(NodeKind.CHANCE, CHANCE, ("h", "t"), (1, 2), chance_probs=(0.5, 0.6)),
        _leaf(1.0),
        _leaf(-1.0),
    )
    v = validate(GameTree("coin", 2, nodes, ()))
    assert [x.kind for x in v] == ["chance_probs"]


def test_validate_flags_shared_child():
    nodes = (
        Node(NodeKind.DECISION, 0, ("a", "b"), (1, 1), infoset=0),
        _leaf(1.0),
    )
    isets = (InformationSet(0, (0,), ("a", "b"), (), "p0/root"),)
    v = validate(GameTree("dag", 2, nodes, isets))
    assert v and v[0].kind == "tree_shape"


def test_max_sequence_length(kuhn, leduc):
    assert kuhn.max_sequence_length == 3
    assert leduc.max_sequence_length == 8
