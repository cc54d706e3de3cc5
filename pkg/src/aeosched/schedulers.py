"""Schedules, baseline heuristics, the exact oracle and the feasibility validator."""

from __future__ import annotations

import json
import math
from collections import namedtuple
from dataclasses import dataclass, field

from .geometry import Attitude, attitude_at
from .graph_env import DEFAULT_PENALTY, SchedulingEnv
from .maneuver import EnergyModel, displacement, transition_time
from .scenario import Scenario, Slot

SCHEDULE_VERSION = 1
FEASIBILITY_TOL = 1e-9

_Start = namedtuple("_Start", "time_s attitude")


class OracleLimitError(RuntimeError):
    """The instance is too large for exhaustive search."""


@dataclass(frozen=True)
class Schedule:
    actions: tuple = ()
    total_profit: float = 0.0
    total_reward: float = 0.0
    maneuver_times: tuple = ()
    energy_total: float = 0.0
    energy_wasted: float = 0.0
    solver: str = ""

    @property
    def n_scheduled(self) -> int:
        return len(self.actions)

    @property
    def n_positive(self) -> int:
        return sum(1 for a in self.actions if a.profit > 0)


def build_schedule(
    s: Scenario,
    captures,
    solver: str = "",
    penalty: float = DEFAULT_PENALTY,
    energy: EnergyModel = EnergyModel(),
) -> Schedule:
    """Attach profit, reward and maneuver bookkeeping to an ordered capture list.

    The maneuver into a zero-profit capture counts as wasted energy.
    """
    prev_att = s.initial_attitude
    times, profit, reward, e_tot, e_waste = [], 0.0, 0.0, 0.0, 0.0
    for c in captures:
        dt = transition_time(displacement(prev_att, c.attitude))
        times.append(dt)
        e = energy.energy_per_second * dt
        e_tot += e
        profit += c.profit
        if c.profit > 0:
            reward += c.profit
        else:
            reward -= penalty
            e_waste += e
        prev_att = c.attitude
    return Schedule(tuple(captures), profit, reward, tuple(times), e_tot, e_waste, solver)


def _fits(prev, d_prev: float, nxt) -> bool:
    return prev.time_s + d_prev + transition_time(displacement(prev.attitude, nxt.attitude)) <= nxt.time_s


def max_resolution(s: Scenario) -> Schedule:
    """Middle-of-window captures, greedily kept in time order when the slew fits. Ignores weather."""
    mids = sorted((c for c in s.candidates if c.slot is Slot.MIDDLE), key=lambda c: (c.time_s, c.target_id))
    prev, d_prev, chosen = _Start(0.0, s.initial_attitude), 0.0, []
    for c in mids:
        if _fits(prev, d_prev, c):
            chosen.append(c)
            prev, d_prev = c, s.targets[c.target_id].duration_s
    return build_schedule(s, chosen, "max-resolution")


def _earliest_capture(s: Scenario, target, prev, d_prev: float, iters: int = 60):
    lo, hi = target.window.start_s, target.window.end_s - target.duration_s
    ready = prev.time_s + d_prev

    def slack(t):
        att = attitude_at(s.satellite, target.position, t)
        return t - ready - transition_time(displacement(prev.attitude, att))

    if hi < lo:
        return None
    if slack(lo) >= 0:
        return lo
    if slack(hi) < 0:
        return None
    # slack grows with t: the slew time changes slower than the clock
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slack(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def max_targets(s: Scenario) -> Schedule:
    """Targets by window start, each captured as early as the previous slew allows. Ignores weather and resolution."""
    order = sorted(s.targets, key=lambda t: (t.window.start_s, t.id))
    prev, d_prev, chosen = _Start(0.0, s.initial_attitude), 0.0, []
    for tg in order:
        t = _earliest_capture(s, tg, prev, d_prev)
        if t is None:
            continue
        slot = Slot.START if t == tg.window.start_s else Slot.FREE
        c = s.capture_at(tg, t, slot)
        chosen.append(c)
        prev, d_prev = c, tg.duration_s
    return build_schedule(s, chosen, "max-targets")


def exact_oracle(s: Scenario, node_limit: int = 36) -> Schedule:
    """Profit-maximal sequence over the three-slot graph.

    Memoized depth-first search keyed on (last node, used targets still
    reachable), with an optimistic bound (best remaining profit per reachable
    target) to skip branches that cannot beat the incumbent.
    """
    n = len(s.candidates)
    if n > node_limit:
        raise OracleLimitError(f"{n} candidate nodes exceed the oracle limit of {node_limit}")
    env = SchedulingEnv(s)
    profit = [float(p) for p in env.profit]
    tbit = [1 << int(t) if t >= 0 else 0 for t in env.target_ids]
    succ = [[j for j in range(n) if env.follow[i, j]] for i in range(n + 1)]
    # targets reachable through any path; edges always go forward in time
    reach = [0] * (n + 1)
    for i in sorted(range(n + 1), key=lambda i: -env.times[i] if i < n else math.inf):
        for j in succ[i]:
            reach[i] |= tbit[j] | reach[j]
    for i in range(n + 1):
        succ[i].sort(key=lambda j: (-profit[j], j))

    def bound(i: int, used: int) -> float:
        best = {}
        for j in succ[i]:
            if not used & tbit[j] and profit[j] > best.get(tbit[j], 0.0):
                best[tbit[j]] = profit[j]
        return sum(best.values())

    memo: dict = {}

    def solve(i: int, used: int):
        key = (i, used & reach[i])
        hit = memo.get(key)
        if hit is not None:
            return hit
        best_val, best_path = 0.0, ()
        ub = bound(i, used)
        for j in succ[i]:
            if used & tbit[j]:
                continue
            if best_val >= ub:
                break
            if profit[j] + bound(j, used | tbit[j]) <= best_val:
                continue
            val, path = solve(j, used | tbit[j])
            val += profit[j]
            if val > best_val:
                best_val, best_path = val, (j,) + path
        memo[key] = (best_val, best_path)
        return best_val, best_path

    _, path = solve(env.virtual, 0)
    return build_schedule(s, [s.candidates[j] for j in path], "oracle")


@dataclass(frozen=True)
class Violation:
    kind: str  # "window", "transition", "repeat", "unknown" or "geometry"
    detail: str
    targets: tuple = field(default=())

    def __str__(self):
        return f"{self.kind}: {self.detail}"


def validate(s: Scenario, schedule, tol: float = FEASIBILITY_TOL) -> list:
    """All window, slew and uniqueness violations of a capture sequence.

    Works from the raw scenario geometry; attitudes are recomputed rather
    than trusted from the schedule.
    """
    actions = schedule.actions if isinstance(schedule, Schedule) else list(schedule)
    out: list = []
    seen: set = set()
    prev_t, prev_d, prev_att, prev_id = 0.0, 0.0, s.initial_attitude, None
    for k, a in enumerate(actions):
        tid = a.target_id
        if not 0 <= tid < len(s.targets):
            out.append(Violation("unknown", f"action {k}: unknown target {tid}", (tid,)))
            continue
        tg = s.targets[tid]
        t = a.time_s
        if not math.isfinite(t):
            out.append(Violation("window", f"action {k}: non-finite time", (tid,)))
            continue
        if t < tg.window.start_s - tol or t > tg.window.end_s - tg.duration_s + tol:
            out.append(Violation(
                "window",
                f"target {tid} captured at {t:.6f} s outside [{tg.window.start_s:.6f}, "
                f"{tg.window.end_s - tg.duration_s:.6f}]",
                (tid,),
            ))
        if tid in seen:
            out.append(Violation("repeat", f"target {tid} scheduled more than once", (tid,)))
        seen.add(tid)
        att = attitude_at(s.satellite, tg.position, t)
        rec = getattr(a, "attitude", None)
        if isinstance(rec, Attitude) and displacement(rec, att) > 1e-6:
            out.append(Violation("geometry", f"target {tid}: recorded attitude disagrees with geometry", (tid,)))
        dt = transition_time(displacement(prev_att, att))
        if prev_t + prev_d + dt > t + tol:
            who = "start" if prev_id is None else f"target {prev_id}"
            out.append(Violation(
                "transition",
                f"{who} -> target {tid}: needs {prev_t + prev_d + dt:.6f} s, capture at {t:.6f} s",
                (prev_id, tid),
            ))
        prev_t, prev_d, prev_att, prev_id = t, tg.duration_s, att, tid
    return out


# -- schedule files ----------------------------------------------------------


def schedule_to_dict(sch: Schedule, scenario_seed: int | None = None) -> dict:
    return {
        "schema_version": SCHEDULE_VERSION,
        "kind": "schedule",
        "solver": sch.solver,
        "scenario_seed": scenario_seed,
        "total_profit": sch.total_profit,
        "actions": [
            {"target_id": a.target_id, "slot": a.slot.value, "time_s": a.time_s, "profit": a.profit}
            for a in sch.actions
        ],
    }


def schedule_from_dict(s: Scenario, d: dict) -> Schedule:
    """Rebuild a schedule against ``s``; capture quantities are recomputed from the scenario."""
    if d.get("schema_version") != SCHEDULE_VERSION or d.get("kind") != "schedule":
        raise ValueError("not a supported schedule document")
    caps = []
    for a in d["actions"]:
        tid = int(a["target_id"])
        if not 0 <= tid < len(s.targets):
            raise ValueError(f"schedule references unknown target {tid}")
        caps.append(s.capture_at(s.targets[tid], float(a["time_s"]), Slot(a.get("slot", "free"))))
    return build_schedule(s, caps, d.get("solver", ""))


def save_schedule(sch: Schedule, path, scenario_seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schedule_to_dict(sch, scenario_seed), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_schedule(s: Scenario, path) -> Schedule:
    with open(path, "r", encoding="utf-8") as fh:
        return schedule_from_dict(s, json.load(fh))
