from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aeosched.geometry import GroundPoint
from aeosched.graph_env import IllegalActionError, SchedulingEnv, VIRTUAL_FEATURES
from aeosched.scenario import GenerationConfig, generate
from aeosched.schedulers import validate


def random_policy(seed):
    rng = np.random.default_rng(seed)
    return lambda env, st_: st_.remaining[int(rng.integers(len(st_.remaining)))]


def test_single_target_graph():
    s = generate(GenerationConfig(n_targets=1, observation_period_s=300.0, seed=2))
    env = SchedulingEnv(s)
    st_ = env.reset()
    assert env.virtual == 3
    g = env.graph(st_)
    assert g.last_action == 3
    assert set(st_.remaining) <= {0, 1, 2}
    assert all(g.adjacency[0, k] for k in range(1, len(g.nodes)))
    # slots of the same target never link to each other
    assert not env.follow[:3, :3].any()
    np.testing.assert_array_equal(env.features[3], VIRTUAL_FEATURES)


def test_close_targets_have_no_cross_edges():
    s = generate(GenerationConfig(n_targets=2, observation_period_s=400.0, seed=1))
    a = s.targets[0]
    # second target 5 s further along the same track: same attitude profile, shifted
    b = replace(s.targets[1], position=GroundPoint(a.position.along_track_km + 5 * s.satellite.ground_speed_km_s,
                                                    a.position.cross_track_km))
    win = replace(a.window, start_s=a.window.start_s + 5, end_s=a.window.end_s + 5)
    b = replace(b, window=win)
    s = replace(s, targets=(a, b))
    env = SchedulingEnv(s)
    for i in range(3):
        for j in range(3, 6):
            gap = abs(env.times[j] - env.times[i])
            if gap < 0.15 + 11.66:
                assert not env.follow[i, j] and not env.follow[j, i]


def test_n40_edges_pass_independent_check(n40_scenario):
    env = SchedulingEnv(n40_scenario)
    assert env.features.shape[0] <= 121
    cands = n40_scenario.candidates
    for i, j in np.argwhere(env.follow[:-1, :-1]):
        # each edge is a feasible 2-capture sequence after a feasible first capture
        if env.follow[env.virtual, i]:
            assert validate(n40_scenario, [cands[i], cands[j]]) == []


def test_features_normalized(n40_scenario):
    env = SchedulingEnv(n40_scenario)
    f = env.features[:-1]
    assert np.all((f[:, 0] > 0) & (f[:, 0] <= 1))
    assert set(np.unique(f[:, 1])) <= {0.0, 1.0}
    assert np.all((f[:, 2] >= 0) & (f[:, 2] <= 1))


def test_rewards(small_scenarios):
    env = SchedulingEnv(small_scenarios[0], penalty=1.0)
    for i, c in enumerate(small_scenarios[0].candidates):
        assert env.reward(i) == (c.profit if c.profit > 0 else -1.0)
    env2 = SchedulingEnv(small_scenarios[0], penalty=0.3)
    assert min(env2.reward(i) for i in range(env2.n_candidates)) >= -0.3


def test_illegal_action_raises(small_scenarios):
    env = SchedulingEnv(small_scenarios[0])
    st_ = env.reset()
    bad = next(i for i in range(env.n_candidates + 1) if i not in st_.remaining)
    with pytest.raises(IllegalActionError):
        env.step(st_, bad)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 7), st.integers(0, 10**6))
def test_random_episode_invariants(small_scenarios, k, seed):
    s = small_scenarios[k]
    env = SchedulingEnv(s)
    pol = random_policy(seed)
    st_ = env.reset()
    assert env.legal_actions(st_) == list(np.flatnonzero(env.follow[env.virtual]))
    size = len(st_.remaining)
    while not st_.done:
        # legal actions are exactly the out-neighbours of the last action
        g = env.graph(st_)
        assert [int(n) for n in g.nodes[1:][g.adjacency[0, 1:]]] == list(st_.remaining)
        a = pol(env, st_)
        nxt, r, done = env.step(st_, a)
        assert len(nxt.remaining) < size
        assert env.target_ids[a] not in {env.target_ids[v] for v in nxt.remaining}
        size = len(nxt.remaining)
        st_ = nxt
    assert env.graph(st_).nodes.tolist() == [st_.last]
    assert env.legal_actions(st_) == []
    assert validate(s, env.captures(st_)) == []


def test_replay_determinism(small_scenarios):
    env = SchedulingEnv(small_scenarios[1])
    runs = []
    for _ in range(2):
        st_, rewards = env.reset(), []
        while not st_.done:
            st_, r, _ = env.step(st_, st_.remaining[-1])
            rewards.append(r)
        runs.append((st_, rewards))
    assert runs[0] == runs[1]


def test_pool_matches_env(small_scenarios):
    env = SchedulingEnv(small_scenarios[2])
    pool = env.pool()
    st_ = env.reset()
    assert pool.reset() == st_
    np.testing.assert_array_equal(pool.graph(st_).adjacency, env.graph(st_).adjacency)
