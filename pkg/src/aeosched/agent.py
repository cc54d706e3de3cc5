"""Deep Q-learning over scheduling graphs.

One network both acts and bootstraps its own targets; every replayed
transition triggers its own SGD step on the squared TD error.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from collections import deque
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, Optional

import numpy as np

from .graph_env import EpisodeState, GraphPool, SchedulingEnv
from .neural import NonFiniteError, QNetwork, save_checkpoint
from .scenario import GenerationConfig, Scenario, generate
from .schedulers import Schedule, build_schedule

logger = logging.getLogger(__name__)

LOG_FIELDS = ("episode", "epsilon", "episode_return", "mean_batch_loss", "schedule_length")


@dataclass(frozen=True)
class TrainingConfig:
    epsilon0: float = 1.0
    epsilon_decay: float = 0.999
    epsilon_min: float = 0.01
    gamma: float = 0.999
    learning_rate: float = 5e-5
    batch_size: int = 64
    episodes: int = 5000
    penalty: float = 1.0
    memory_capacity: int = 50_000
    seed: int = 0
    hidden: int = 32
    skip_features: bool = True
    messages_from: str = "predecessors"
    resample_scenarios: bool = True
    checkpoint_every: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon_min <= self.epsilon0 <= 1.0:
            raise ValueError("need 0 <= epsilon_min <= epsilon0 <= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if self.batch_size < 1 or self.memory_capacity < self.batch_size:
            raise ValueError("memory_capacity must be at least batch_size >= 1")
        if self.episodes < 0 or self.learning_rate <= 0:
            raise ValueError("episodes must be >= 0 and learning_rate > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def epsilon_after(cfg: TrainingConfig, episodes: int) -> float:
    """Exploration rate once ``episodes`` decay steps have been applied."""
    return max(cfg.epsilon_min, cfg.epsilon0 * cfg.epsilon_decay**episodes)


def episodes_to_floor(cfg: TrainingConfig) -> int:
    """First episode count at which the decayed rate hits ``epsilon_min``."""
    if cfg.epsilon_min >= cfg.epsilon0:
        return 0
    if cfg.epsilon_decay == 1.0 or cfg.epsilon_min == 0.0:
        return math.inf
    return math.ceil(math.log(cfg.epsilon_min / cfg.epsilon0) / math.log(cfg.epsilon_decay))


@dataclass(frozen=True)
class ReplayTransition:
    pool: GraphPool
    state: EpisodeState
    action: int
    reward: float
    next_state: EpisodeState
    done: bool


class ReplayMemory:
    """Fixed-capacity FIFO of transitions with uniform sampling."""

    def __init__(self, capacity: int):
        self.buffer: deque = deque(maxlen=capacity)

    def __len__(self):
        return len(self.buffer)

    def push(self, tr: ReplayTransition) -> None:
        self.buffer.append(tr)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list:
        idx = rng.choice(len(self.buffer), size=batch_size, replace=False)
        return [self.buffer[i] for i in idx]


def select_action(net: QNetwork, env: GraphPool, state: EpisodeState, epsilon: float, rng) -> int:
    """Epsilon-greedy choice; greedy ties go to the lowest node id."""
    if state.done:
        raise ValueError("no legal actions in a terminal state")
    if rng.random() < epsilon:
        return state.remaining[int(rng.integers(len(state.remaining)))]
    q = net.q_values(env.graph(state))
    return state.remaining[int(np.argmax(q))]


def td_target(tr: ReplayTransition, net: QNetwork, gamma: float) -> float:
    if tr.done:
        return tr.reward
    return tr.reward + gamma * float(np.max(net.q_values(tr.pool.graph(tr.next_state))))


def sgd_update(net: QNetwork, tr: ReplayTransition, gamma: float, lr: float) -> float:
    """One squared-error SGD step on Q(s, a); returns the loss before the step."""
    target = td_target(tr, net, gamma)
    g = tr.pool.graph(tr.state)
    q, cache = net.forward(g.features, g.adjacency)
    row = 1 + tr.state.remaining.index(tr.action)
    err = q[row] - target
    loss = float(err * err)
    if not math.isfinite(loss):
        raise NonFiniteError(f"non-finite loss (Q={q[row]!r}, target={target!r}) at action {tr.action}")
    dq = np.zeros_like(q)
    dq[row] = 2.0 * err
    net.apply_gradients(net.backward(cache, dq), lr)
    return loss


def scenario_seed(master_seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([master_seed, episode]).generate_state(1)[0])


def scenario_source(gen: GenerationConfig, cfg: TrainingConfig) -> Callable[[int], Scenario]:
    """Per-episode scenarios: fresh draws, or one fixed instance when resampling is off."""
    if not cfg.resample_scenarios:
        fixed = generate(gen)
        return lambda episode: fixed
    return lambda episode: generate(replace(gen, seed=scenario_seed(cfg.seed, episode)))


@dataclass
class TrainingResult:
    net: QNetwork
    log: list  # dicts keyed by LOG_FIELDS
    epsilon: float
    episodes_done: int


def train(
    scenarios,
    cfg: TrainingConfig,
    net: Optional[QNetwork] = None,
    start_episode: int = 0,
    epsilon: Optional[float] = None,
    checkpoint_path=None,
    log_path=None,
) -> TrainingResult:
    """Run episodes ``start_episode .. cfg.episodes - 1``.

    ``scenarios`` is a callable ``episode -> Scenario``, a sequence of
    scenarios (cycled) or a :class:`GenerationConfig`. Each episode draws its
    randomness from ``(cfg.seed, episode)`` so a resumed run is reproducible;
    the replay memory starts empty on resume. A resumed run appends to an
    existing log file.
    """
    if isinstance(scenarios, GenerationConfig):
        source = scenario_source(scenarios, cfg)
    elif callable(scenarios):
        source = scenarios
    else:
        pool = list(scenarios)
        if not pool:
            raise ValueError("need at least one training scenario")
        source = lambda episode: pool[episode % len(pool)]

    if net is None:
        net = QNetwork(hidden=cfg.hidden, seed=cfg.seed, skip_features=cfg.skip_features, messages_from=cfg.messages_from)
    eps = epsilon_after(cfg, start_episode) if epsilon is None else epsilon
    memory = ReplayMemory(cfg.memory_capacity)
    log = []
    log_fh = writer = None
    if log_path is not None:
        append = start_episode > 0 and os.path.exists(log_path) and os.path.getsize(log_path) > 0
        log_fh = open(log_path, "a" if append else "w", newline="", encoding="utf-8")
        writer = csv.DictWriter(log_fh, fieldnames=LOG_FIELDS, lineterminator="\n")
        if not append:
            writer.writeheader()
    try:
        for episode in range(start_episode, cfg.episodes):
            rng = np.random.default_rng([cfg.seed, episode, 1])
            env = SchedulingEnv(source(episode), cfg.penalty)
            pool = env.pool()
            state = env.reset()
            ret, losses = 0.0, []
            while not state.done:
                action = select_action(net, env, state, eps, rng)
                nxt, reward, done = env.step(state, action)
                memory.push(ReplayTransition(pool, state, action, reward, nxt, done))
                state, ret = nxt, ret + reward
                if len(memory) >= cfg.batch_size:
                    for tr in memory.sample(cfg.batch_size, rng):
                        losses.append(sgd_update(net, tr, cfg.gamma, cfg.learning_rate))
            row = {
                "episode": episode,
                "epsilon": eps,
                "episode_return": ret,
                "mean_batch_loss": float(np.mean(losses)) if losses else float("nan"),
                "schedule_length": len(state.executed),
            }
            log.append(row)
            if writer is not None:
                writer.writerow({k: ("" if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()})
            eps = max(cfg.epsilon_min, eps * cfg.epsilon_decay)
            done_count = episode + 1
            if checkpoint_path and cfg.checkpoint_every and done_count % cfg.checkpoint_every == 0:
                save_checkpoint(net, checkpoint_path, training_state(cfg, done_count, eps))
            if episode % 100 == 0:
                logger.info("episode %d eps=%.4f return=%.3f loss=%s", episode, row["epsilon"], ret, row["mean_batch_loss"])
    finally:
        if log_fh is not None:
            log_fh.close()
    final = max(start_episode, cfg.episodes)
    if checkpoint_path:
        save_checkpoint(net, checkpoint_path, training_state(cfg, final, eps))
    return TrainingResult(net, log, eps, final)


def training_state(cfg: TrainingConfig, episodes_done: int, epsilon: float) -> dict:
    return {"config": asdict(cfg), "episodes_done": episodes_done, "epsilon": epsilon}


def greedy_policy(net: QNetwork):
    def policy(env, state):
        q = net.q_values(env.graph(state))
        return state.remaining[int(np.argmax(q))]

    return policy


def evaluate_policy(net: QNetwork, scenario: Scenario, penalty: float = 1.0) -> Schedule:
    """Greedy rollout from the initial graph to termination."""
    env = SchedulingEnv(scenario, penalty)
    final = env.rollout(greedy_policy(net))
    return build_schedule(scenario, env.captures(final), "dqn", penalty=penalty)
