"""Reference solvers that share nothing with the library beyond scenario data."""

import math


def _tt(alpha):
    if alpha <= 10:
        return 11.66
    for hi, base, rate in ((30, 5, 1.5), (60, 10, 2), (90, 16, 2.5)):
        if alpha <= hi:
            return base + alpha / rate
    return 22 + alpha / 3


def _att(s, tg, t):
    h, v = s.satellite.altitude_km, s.satellite.ground_speed_km_s
    return (
        math.degrees(math.atan(tg.position.cross_track_km / h)),
        math.degrees(math.atan((tg.position.along_track_km - v * t) / h)),
        0.0,
    )


def slot_nodes(s):
    """(target, time, attitude, profit) for the three slots of every target."""
    nodes = []
    for c in s.candidates:
        tg = s.targets[c.target_id]
        t = (tg.window.start_s, 0.5 * (tg.window.start_s + tg.window.end_s), tg.window.end_s - tg.duration_s)[
            ("start", "middle", "end").index(c.slot.value)
        ]
        nodes.append((c.target_id, t, _att(s, tg, t), c.profit, tg.duration_s))
    return nodes


def exhaustive_best(s):
    """Plain DFS over every feasible slot sequence; no pruning, no memo."""
    nodes = slot_nodes(s)
    best = [0.0]

    def fits(prev, nxt):
        t0, d0, a0 = prev
        alpha = sum(abs(x - y) for x, y in zip(a0, nxt[2]))
        return t0 + d0 + _tt(alpha) <= nxt[1]

    def dfs(prev, used, total):
        best[0] = max(best[0], total)
        for n in nodes:
            if n[0] in used or not fits(prev, n):
                continue
            dfs((n[1], n[4], n[2]), used | {n[0]}, total + n[3])

    dfs((0.0, 0.0, s.initial_attitude.as_tuple()), frozenset(), 0.0)
    return best[0]
