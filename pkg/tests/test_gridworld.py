import random

import numpy as np
import pytest

import oracles
from ruledistill.extraction import QTablePolicy
from ruledistill.gridworld import (
    DEFAULT_MUD,
    GridWorld,
    QParams,
    QTable,
    TerminalStateError,
    optimal_action_sets,
    q_learn,
)
from ruledistill.pipeline import policy_agent, rollout


def test_step_examples(world):
    assert world.step((18, 19), "RIGHT") == ((19, 19), -1.0, True)
    assert world.step((0, 0), "LEFT") == ((0, 0), -1.0, False)
    assert world.step((7, 10), "RIGHT") == ((8, 10), -10.0, False)
    assert world.step((9, 10), "UP") == ((9, 11), -10.0, False)
    with pytest.raises(TerminalStateError):
        world.step((19, 19), "UP")


def test_world_validation_and_persistence(tmp_path):
    with pytest.raises(ValueError):
        GridWorld(5, 5, goal=(7, 7))
    with pytest.raises(ValueError):
        GridWorld(5, 5, goal=(1, 1), mud=frozenset({(1, 1)}))
    w = GridWorld(6, 4, goal=(0, 3), mud=frozenset({(2, 2)}), mud_reward=-5.0)
    w.save(tmp_path / "env.json")
    assert GridWorld.load(tmp_path / "env.json") == w
    with pytest.raises(ValueError):
        GridWorld.from_dict({"width": 3, "colour": "red"})
    assert len(GridWorld().starts()) == 400 - 1 - len(DEFAULT_MUD)


@pytest.mark.parametrize("kw", [dict(gamma=1.2), dict(gamma=1.0), dict(alpha=0.0),
                                dict(epsilon=1.5), dict(episodes=-1), dict(max_steps=0)])
def test_hyperparameter_validation(kw):
    with pytest.raises(ValueError):
        QParams(**kw)


def test_small_grid_matches_value_iteration():
    env = GridWorld.mud_free(3, 3)
    qt = q_learn(env, QParams(episodes=3000), seed=1)
    V = oracles.value_iteration(3, 3, env.goal, frozenset(), 0.95)
    Q = oracles.q_from_v(V, 3, 3, env.goal, frozenset(), 0.95)
    for (s, a), q in Q.items():
        assert abs(qt.values(s)[env.actions.index(a)] - q) < 1e-9
    act = policy_agent(QTablePolicy(qt))
    for s in env.starts():
        ret, steps, _ = rollout(act, env, s)
        assert steps == abs(2 - s[0]) + abs(2 - s[1])


def test_goal_adjacent_value(qtable, world):
    assert qtable.values((18, 19))[world.actions.index("RIGHT")] == pytest.approx(-1.0, abs=1e-9)
    assert qtable.values((19, 18))[world.actions.index("UP")] == pytest.approx(-1.0, abs=1e-9)


def test_greedy_actions_are_optimal(world, qtable):
    # values of rarely tried actions may lag; the greedy choice must not
    V = oracles.value_iteration(20, 20, world.goal, world.mud, 0.95)
    Q = oracles.q_from_v(V, 20, 20, world.goal, world.mud, 0.95)
    for s in world.states():
        if s == world.goal:
            continue
        a = qtable.greedy(s)
        assert Q[s, a] == pytest.approx(V[s], abs=1e-9)
        assert abs(qtable.state_values()[s] - V[s]) < 1e-3


def test_greedy_policy_never_enters_mud(world, qtable):
    act = policy_agent(QTablePolicy(qtable))
    for s in world.starts():
        state = s
        for _ in range(100):
            state, r, done = world.step(state, act(state))
            assert state not in world.mud
            if done:
                break
        assert done
        ret, _, _ = rollout(act, world, s)
        assert ret == oracles.shortest_path_return(20, 20, world.goal, s, world.mud)


def test_optimal_action_sets(world, qtable):
    sets = optimal_action_sets(qtable, world, tau=0.9)
    assert (19, 19) not in sets
    assert sets[(3, 4)] == {"UP", "RIGHT"}
    assert sets[(5, 19)] == {"RIGHT"}
    assert sets[(19, 5)] == {"UP"}
    # around the mud cross
    assert sets[(7, 10)] == {"UP"}
    assert sets[(8, 11)] == {"UP"}
    assert "RIGHT" not in sets[(8, 9)]


def test_optimal_sets_agree_with_value_iteration(world, qtable):
    V = oracles.value_iteration(20, 20, world.goal, world.mud, 0.95)
    Q = oracles.q_from_v(V, 20, 20, world.goal, world.mud, 0.95)
    sets = optimal_action_sets(qtable, world, tau=1.0)
    for s, got in sets.items():
        best = max(Q[s, a] for a in world.actions)
        assert got == {a for a in world.actions if abs(Q[s, a] - best) < 1e-9}


def test_qtable_round_trip(tmp_path, qtable):
    qtable.save(tmp_path / "q.tsv")
    back = QTable.load(tmp_path / "q.tsv")
    assert np.array_equal(back.q, qtable.q)
    assert back.actions == qtable.actions
    (tmp_path / "bad.tsv").write_text("nope\n")
    with pytest.raises(ValueError):
        QTable.load(tmp_path / "bad.tsv")


def test_q_learning_is_reproducible():
    env = GridWorld.mud_free(4, 4)
    a = q_learn(env, QParams(episodes=200, alpha=0.5), seed=5)
    b = q_learn(env, QParams(episodes=200, alpha=0.5), seed=5)
    assert np.array_equal(a.q, b.q)


def test_reset_avoids_mud_and_goal(world):
    rng = random.Random(0)
    for _ in range(500):
        s = world.reset(rng)
        assert s not in world.mud and s != world.goal
