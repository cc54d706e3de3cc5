"""Train the graph-attention Q-network for a few hundred episodes and compare it with the baselines.

Run: python demos/04_train_agent.py [episodes]
"""

import sys
import time
from dataclasses import replace

import numpy as np

from aeosched.agent import TrainingConfig, evaluate_policy, train
from aeosched.scenario import GenerationConfig, generate
from aeosched.schedulers import max_resolution, max_targets

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 300
gen = GenerationConfig(n_targets=10, observation_period_s=400.0)
cfg = TrainingConfig(episodes=episodes)

t0 = time.perf_counter()
res = train(gen, cfg)
print(f"trained {episodes} episodes in {time.perf_counter() - t0:.0f} s, final epsilon {res.epsilon:.3f}")

loss = np.array([r["mean_batch_loss"] for r in res.log], dtype=float)
k = max(1, len(loss) // 10)
print(f"mean batch loss: first 10% {np.nanmean(loss[:k]):.3f}, last 10% {np.nanmean(loss[-k:]):.3f}")

rows = {"dqn": [], "max-resolution": [], "max-targets": []}
for seed in range(900, 930):
    s = generate(replace(gen, seed=seed))
    for name, sch in (("dqn", evaluate_policy(res.net, s)), ("max-resolution", max_resolution(s)),
                      ("max-targets", max_targets(s))):
        rows[name].append((sch.total_profit, sch.n_scheduled - sch.n_positive))
print(f"\n{'solver':>15} {'mean profit':>11} {'discarded':>9}")
for name, v in rows.items():
    v = np.array(v)
    print(f"{name:>15} {v[:, 0].mean():11.3f} {int(v[:, 1].sum()):9d}")
