"""Scheduling graph and the MDP built on it.

Node ids index ``scenario.candidates``; the virtual start node gets id
``len(candidates)``. The edge set is computed once per scenario and then only
filtered as the episode progresses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maneuver import DEFAULT_PROFILE, TransitionProfile, transition_time
from .scenario import Scenario

DEFAULT_PENALTY = 1.0
VIRTUAL_FEATURES = (1.0, 1.0, 0.0)


class IllegalActionError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeState:
    last: int
    remaining: tuple  # legal node ids, ascending
    executed: tuple = ()

    @property
    def done(self) -> bool:
        return not self.remaining


@dataclass(frozen=True, eq=False)
class ScheduleGraph:
    """GNN input: row 0 is the last action (or the virtual node), the rest are legal actions."""

    nodes: np.ndarray  # node ids, shape (k,)
    features: np.ndarray  # (k, 3): gsd ratio, suitability, normalized time
    adjacency: np.ndarray  # (k, k) bool, adjacency[u, v] = edge u -> v

    @property
    def last_action(self) -> int:
        return int(self.nodes[0])

    def edges(self) -> list:
        return [tuple(e) for e in np.argwhere(self.adjacency).tolist()]


class GraphPool:
    """Precomputed node features and edges of one scenario's candidate pool.

    Holds only arrays, so replay memory can keep many of these alive cheaply.
    """

    def __init__(self, features, follow, profit, penalty: float = DEFAULT_PENALTY):
        self.features = features
        self.follow = follow
        self.profit = profit
        self.penalty = penalty
        self.n_candidates = len(profit) - 1
        self.virtual = self.n_candidates

    def reset(self) -> EpisodeState:
        return EpisodeState(self.virtual, tuple(np.flatnonzero(self.follow[self.virtual]).tolist()))

    build_initial = reset

    def legal_actions(self, state: EpisodeState) -> list:
        return list(state.remaining)

    def reward(self, action: int) -> float:
        p = self.profit[action]
        return float(p) if p > 0 else -self.penalty

    def step(self, state: EpisodeState, action: int):
        """Execute ``action``; returns ``(next_state, reward, done)``."""
        if action not in state.remaining:
            raise IllegalActionError(f"node {action} is not reachable from node {state.last}")
        row = self.follow[action]
        remaining = tuple(v for v in state.remaining if row[v])
        nxt = EpisodeState(action, remaining, state.executed + (action,))
        return nxt, self.reward(action), nxt.done

    def graph(self, state: EpisodeState) -> ScheduleGraph:
        ids = np.array((state.last,) + state.remaining, dtype=int)
        adj = self.follow[np.ix_(ids, ids)]
        return ScheduleGraph(ids, self.features[ids], adj)

    def rollout(self, policy, state: EpisodeState | None = None) -> EpisodeState:
        """Run ``policy(env, state) -> node`` until no actions remain."""
        state = self.reset() if state is None else state
        while not state.done:
            state, _, _ = self.step(state, policy(self, state))
        return state


class SchedulingEnv(GraphPool):
    """MDP over one scenario; states are immutable :class:`EpisodeState` values."""

    def __init__(
        self,
        scenario: Scenario,
        penalty: float = DEFAULT_PENALTY,
        profile: TransitionProfile = DEFAULT_PROFILE,
    ):
        self.scenario = scenario
        cands = scenario.candidates
        n = len(cands)

        att0 = scenario.initial_attitude
        att = np.array([c.attitude.as_tuple() for c in cands] + [att0.as_tuple()], dtype=float).reshape(n + 1, 3)
        times = np.array([c.time_s for c in cands] + [0.0])
        durations = np.array([scenario.targets[c.target_id].duration_s for c in cands] + [0.0])
        tids = np.array([c.target_id for c in cands] + [-1])
        self.times = times
        self.target_ids = tids

        alpha = np.abs(att[:, None, :] - att[None, :, :]).sum(axis=2)
        ready = times[:, None] + durations[:, None] + transition_time(alpha, profile)
        follow = ready <= times[None, :]
        follow &= tids[:, None] != tids[None, :]
        follow[:, n] = False  # nothing leads back to the virtual node

        feats = np.empty((n + 1, 3))
        gsd_nadir = scenario.satellite.gsd_nadir_m_per_px
        feats[:n, 0] = [gsd_nadir / c.gsd for c in cands]
        feats[:n, 1] = [c.suitable for c in cands]
        feats[:n, 2] = times[:n] / scenario.observation_period_s
        feats[n] = VIRTUAL_FEATURES
        profit = np.array([c.profit for c in cands] + [0.0])
        super().__init__(feats, follow, profit, penalty)

    def pool(self) -> GraphPool:
        return GraphPool(self.features, self.follow, self.profit, self.penalty)

    def captures(self, state: EpisodeState) -> list:
        return [self.scenario.candidates[i] for i in state.executed]
