import json

import numpy as np
import pytest

from bufp.strategy import (
    BeliefTable,
    StrategyProfile,
    compute_beliefs,
    from_realization_plan,
    pure_profile,
    random_profile,
    read_dump,
    to_realization_plan,
    uniform_profile,
    write_dump,
)


def _set(tree, profile, key, dist):
    u = tree.infoset_index[key]
    for label, p in dist.items():
        profile.probs[u, tree.action_index(u, label)] = p


def _belief(tree, beliefs, key, label_suffix=None):
    u = tree.infoset_index[key]
    return {tree.nodes[m].label: b for m, b in zip(tree.infosets[u].members, beliefs[u])}


def test_uniform_kuhn(kuhn):
    prof = uniform_profile(kuhn)
    assert np.allclose(prof.probs, 0.5)
    assert prof.violations() == []


def test_uniform_leduc_root(leduc):
    prof = uniform_profile(leduc)
    u = leduc.infoset_index["p0/Q/"]
    assert np.allclose(prof[u], 1 / 3)
    assert prof.violations() == []


def test_profile_shape_checked(kuhn):
    with pytest.raises(ValueError):
        StrategyProfile(kuhn, np.zeros((3, 2)))


def test_violations_reported(kuhn):
    prof = uniform_profile(kuhn)
    prof.probs[0] = [0.7, 0.7]
    assert any("sums to" in v for v in prof.violations())


def test_plan_of_pure_strategy_is_binary(kuhn):
    prof = pure_profile(kuhn, np.zeros(len(kuhn.infosets), dtype=int))
    for p in range(2):
        plan = to_realization_plan(kuhn, prof, p)
        assert plan[()] == 1.0
        assert set(plan.values.values()) <= {0.0, 1.0}


def test_plan_depth_two_uniform(kuhn):
    plan = to_realization_plan(kuhn, uniform_profile(kuhn), 0)
    deep = [s for s in plan.values if len(s) == 2]
    assert deep and all(plan[s] == 0.25 for s in deep)


def test_plan_zero_reach_gives_uniform(kuhn):
    prof = uniform_profile(kuhn)
    _set(kuhn, prof, "p0/J/", {"check": 0.0, "bet": 1.0})
    _set(kuhn, prof, "p0/J/kb", {"call": 0.9, "fold": 0.1})
    rows = from_realization_plan(kuhn, to_realization_plan(kuhn, prof, 0))
    assert np.allclose(rows[kuhn.infoset_index["p0/J/kb"], :2], 0.5)


def test_plan_round_trip(leduc, rng):
    for _ in range(20):
        prof = random_profile(leduc, rng, pure_frac=0.3)
        for p in range(2):
            plan = to_realization_plan(leduc, prof, p)
            assert plan.flow_violations(leduc) == []
            back = from_realization_plan(leduc, plan)
            for u in leduc.player_infosets[p]:
                if plan[leduc.infosets[u].sequence] > 0:
                    assert np.allclose(back[u], prof.probs[u], atol=1e-9)


def test_beliefs_uniform_after_bet(kuhn):
    beliefs = compute_beliefs(kuhn, uniform_profile(kuhn))
    assert sorted(_belief(kuhn, beliefs, "p1/Q/b").values()) == [0.5, 0.5]


def test_beliefs_bayes_example(kuhn):
    # P0 always bets with K and bets 1/3 of the time with J
    prof = uniform_profile(kuhn)
    _set(kuhn, prof, "p0/K/", {"check": 0.0, "bet": 1.0})
    _set(kuhn, prof, "p0/J/", {"check": 2 / 3, "bet": 1 / 3})
    got = _belief(kuhn, compute_beliefs(kuhn, prof), "p1/Q/b")
    assert got["JQ:b"] == pytest.approx(0.25)
    assert got["KQ:b"] == pytest.approx(0.75)


def test_beliefs_ignore_owner_ancestors(leduc, rng):
    prof = random_profile(leduc, rng)
    u = leduc.infoset_index["p0/Q/kr"]
    before = compute_beliefs(leduc, prof)[u]
    # perturb the owner's own moves above u
    prof.probs[leduc.infoset_index["p0/Q/"]] = [0.05, 0.9, 0.05]
    after = compute_beliefs(leduc, prof)[u]
    assert np.allclose(before, after, atol=1e-12)


def test_beliefs_normalized_everywhere(leduc, rng):
    for frac in (0.0, 0.5, 1.0):
        b = compute_beliefs(leduc, random_profile(leduc, rng, frac))
        assert b.violations() == []


def test_belief_violation_detected(kuhn):
    b = compute_beliefs(kuhn, uniform_profile(kuhn))
    bad = BeliefTable(kuhn, b.node_belief * 2)
    assert len(bad.violations()) == len(kuhn.infosets)


def test_dump_round_trip(tmp_path, leduc, rng):
    prof = random_profile(leduc, rng)
    path = tmp_path / "s.json"
    write_dump(path, leduc, prof, 7, compute_beliefs(leduc, prof), algorithm="cfr")
    back, doc = read_dump(path, leduc)
    assert np.array_equal(back.probs, prof.probs)
    assert doc["iteration"] == 7 and doc["algorithm"] == "cfr"
    assert len(doc["beliefs"]) == len(leduc.infosets)


def test_dump_rejects_other_game(tmp_path, kuhn, leduc):
    path = tmp_path / "k.json"
    write_dump(path, kuhn, uniform_profile(kuhn), 0)
    with pytest.raises(ValueError, match="game-id mismatch"):
        read_dump(path, leduc)


def test_dump_rejects_malformed(tmp_path, kuhn):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValueError):
        read_dump(path, kuhn)
    path.write_text(json.dumps({"game_id": "kuhn", "strategy": {"p0": {"p0/J/": {"check": 1}}}}))
    with pytest.raises(ValueError, match="covers"):
        read_dump(path, kuhn)
