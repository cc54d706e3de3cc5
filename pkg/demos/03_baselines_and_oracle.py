"""Baselines against the exact optimum on small instances.

MaxResolution shoots every target at mid-window, MaxTargets packs captures as
early as possible; neither looks at the weather. The oracle searches all
slot sequences.

Run: python demos/03_baselines_and_oracle.py
"""

from dataclasses import replace

import numpy as np

from aeosched.evaluation import compare
from aeosched.scenario import GenerationConfig, generate
from aeosched.schedulers import exact_oracle, max_resolution, max_targets, validate

gen = GenerationConfig(n_targets=8, observation_period_s=320.0)
scenarios = [generate(replace(gen, seed=k)) for k in range(20)]
rep = compare({"max-resolution": max_resolution, "max-targets": max_targets, "oracle": exact_oracle}, scenarios)

print(f"{'solver':>15} {'profit':>7} {'scheduled':>9} {'precision':>9} {'wasted energy':>13}")
for name in rep.solvers:
    a = rep.aggregate(name)
    print(f"{name:>15} {a['mean_profit']:7.3f} {a['mean_scheduled']:9.2f} "
          f"{a['aggregate_precision']:9.2f} {a['energy_wasted']:13.1f}")

s = scenarios[0]
sch = exact_oracle(s)
print(f"\noptimal sequence on seed {s.seed}:")
for c, dt in zip(sch.actions, sch.maneuver_times):
    print(f"  target {c.target_id} at {c.time_s:7.2f} s ({c.slot.value}), slew {dt:5.2f} s, profit {c.profit:.3f}")
print("violations:", validate(s, sch))
