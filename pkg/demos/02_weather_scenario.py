"""A random scenario with clouds and turbulence, and what weather does to candidate profits.

Run: python demos/02_weather_scenario.py
"""

import collections

import numpy as np

from aeosched.scenario import GenerationConfig, generate

for p_clouds, p_cn2 in ((0.4, 0.2), (0.6, 0.4)):
    s = generate(GenerationConfig(n_targets=40, p_clouds=p_clouds, p_cn2=p_cn2, seed=7))
    cands = s.candidates
    print(f"\nP_clouds={p_clouds}, P_cn2={p_cn2}")
    print(f"  cloud grid {s.clouds.shape} cells, {100 * s.clouds.coverage_fraction:.1f}% cloudy")
    print(f"  turbulence grid {s.turbulence.shape} cells, "
          f"{100 * s.turbulence.exceed_fraction(s.thresholds.cn2_max):.1f}% above the C_n^2 limit")
    why = collections.Counter()
    for c in cands:
        if c.suitable:
            why["usable"] += 1
        else:
            why["cloudy" if c.cloud_fraction >= s.thresholds.delta_max else "turbulent"] += 1
    print(f"  {len(cands)} candidate captures: {dict(why)}")
    prof = np.array([c.profit for c in cands])
    print(f"  mean profit of usable captures: {prof[prof > 0].mean():.3f}")

# Windows and slot times of the first few targets.
s = generate(GenerationConfig(n_targets=5, observation_period_s=400.0, seed=1))
print("\n id   window [s]          slots [s]                  profits")
for tg in s.targets:
    slots = s.candidates[3 * tg.id: 3 * tg.id + 3]
    print(f"{tg.id:3d}   [{tg.window.start_s:6.1f}, {tg.window.end_s:6.1f}]  "
          f"{' '.join(f'{c.time_s:7.2f}' for c in slots)}   {' '.join(f'{c.profit:.2f}' for c in slots)}")
