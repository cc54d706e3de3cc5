from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aeosched.atmosphere import CloudGrid, TurbulenceGrid
from aeosched.geometry import GroundPoint, VisibleTimeWindow
from aeosched.graph_env import SchedulingEnv
from aeosched.maneuver import transition_time
from aeosched.scenario import GenerationConfig, Slot, generate
from aeosched.schedulers import (
    OracleLimitError,
    build_schedule,
    exact_oracle,
    load_schedule,
    max_resolution,
    max_targets,
    save_schedule,
    validate,
)

from .naive import exhaustive_best


def clear_scenario(n, period=600.0, seed=0):
    return generate(GenerationConfig(n_targets=n, observation_period_s=period, p_clouds=0.0, p_cn2=0.0, seed=seed))


def with_targets(s, *targets):
    s = replace(s, targets=tuple(replace(t, id=i) for i, t in enumerate(targets)))
    return replace(s, clouds=_clear_clouds(s), turbulence=_calm(s))


def nadir_like(s, k=0):
    tg = s.targets[k]
    return replace(tg, position=GroundPoint(tg.position.along_track_km, 1.0))


def test_one_clear_nadir_target():
    s = clear_scenario(1)
    s = with_targets(s, nadir_like(s))
    sch = max_resolution(s)
    assert sch.n_scheduled == 1
    assert sch.total_profit == pytest.approx(1.0, abs=1e-5)


def _box(s, cell):
    x0 = min(t.position.along_track_km for t in s.targets) - 100
    x1 = max(t.position.along_track_km for t in s.targets) + 100
    return GroundPoint(x0, -700.0), (int((x1 - x0) / cell) + 1, int(1400 / cell))


def _clear_clouds(s):
    origin, shape = _box(s, 2.0)
    return CloudGrid(2.0, origin, 10.0, np.zeros(shape, dtype=bool))


def _calm(s):
    origin, shape = _box(s, 10.0)
    return TurbulenceGrid(10.0, origin, 20.0, np.full(shape, 1e-16))


def test_conflicting_middles_keep_one():
    s = clear_scenario(2, seed=4)
    a = s.targets[0]
    b = replace(a, position=GroundPoint(a.position.along_track_km + 3 * s.satellite.ground_speed_km_s,
                                        a.position.cross_track_km),
                window=VisibleTimeWindow(a.window.start_s + 3, a.window.end_s + 3))
    s = with_targets(s, a, b)
    assert max_resolution(s).n_scheduled == 1


def test_max_resolution_ignores_weather():
    s = generate(GenerationConfig(n_targets=5, observation_period_s=2000.0, p_clouds=1.0, seed=1))
    sch = max_resolution(s)
    assert sch.n_scheduled >= 1 and sch.total_profit == 0.0
    assert all(a.slot is Slot.MIDDLE for a in sch.actions)


def test_max_targets_disjoint_windows():
    s = clear_scenario(4, period=3000.0, seed=2)
    v = s.satellite.ground_speed_km_s
    spread = [replace(t, position=GroundPoint((300 + 600 * i) * v, t.position.cross_track_km),
                      window=VisibleTimeWindow(300 + 600 * i - t.window.duration_s / 2,
                                               300 + 600 * i + t.window.duration_s / 2))
              for i, t in enumerate(s.targets)]
    s = with_targets(s, *spread)
    sch = max_targets(s)
    assert sch.n_scheduled == 4
    assert all(a.slot is Slot.START for a in sch.actions[1:])


def test_max_targets_nested_windows_earliest_wins():
    s = clear_scenario(2, seed=6)
    a = s.targets[0]
    # b sits on top of a and opens 1 s later; only one fits
    b = replace(a, position=GroundPoint(a.position.along_track_km + 1 * s.satellite.ground_speed_km_s,
                                        a.position.cross_track_km),
                window=VisibleTimeWindow(a.window.start_s + 1, a.window.end_s + 1))
    a = replace(a, window=VisibleTimeWindow(a.window.start_s, a.window.start_s + 10.0))
    b = replace(b, window=VisibleTimeWindow(b.window.start_s, b.window.start_s + 10.0))
    s = with_targets(s, b, a)
    sch = max_targets(s)
    assert [x.target_id for x in sch.actions] == [1]


def test_max_targets_never_before_window(n40_scenario):
    for a in max_targets(n40_scenario).actions:
        assert a.time_s >= n40_scenario.targets[a.target_id].window.start_s


def test_max_targets_captures_earliest_feasible(small_scenarios):
    # one step earlier than the bisection result must be infeasible
    for s in small_scenarios:
        sch = max_targets(s)
        for k, a in enumerate(sch.actions):
            if a.slot is Slot.FREE:
                moved = list(sch.actions)
                moved[k] = s.capture_at(s.targets[a.target_id], a.time_s - 1e-6)
                assert validate(s, moved) != []


def test_counts_max_targets_vs_max_resolution():
    counts = []
    for seed in range(30):
        s = generate(GenerationConfig(seed=seed))
        counts.append((max_targets(s).n_scheduled, max_resolution(s).n_scheduled))
    mt, mr = np.mean(counts, axis=0)
    assert mt >= mr


def test_oracle_one_target():
    s = generate(GenerationConfig(n_targets=1, observation_period_s=300.0, seed=5, p_clouds=0.0, p_cn2=0.0))
    sch = exact_oracle(s)
    reachable = [c.profit for c in s.candidates if validate(s, [c]) == []]
    assert sch.total_profit == pytest.approx(max(reachable))


def test_oracle_two_exclusive_targets():
    s = clear_scenario(2, seed=4)
    a = s.targets[0]
    b = replace(a, position=GroundPoint(a.position.along_track_km + 0.5 * s.satellite.ground_speed_km_s,
                                        a.position.cross_track_km),
                window=VisibleTimeWindow(a.window.start_s + 0.5, a.window.start_s + 8.0))
    a = replace(a, window=VisibleTimeWindow(a.window.start_s, a.window.start_s + 8.0))
    s = with_targets(s, a, b)
    sch = exact_oracle(s)
    assert sch.n_scheduled == 1


def test_oracle_limit():
    with pytest.raises(OracleLimitError):
        exact_oracle(generate(GenerationConfig(n_targets=13, observation_period_s=500.0)))


def test_oracle_matches_exhaustive(small_scenarios):
    for s in small_scenarios:
        assert exact_oracle(s).total_profit == pytest.approx(exhaustive_best(s), abs=1e-9)


def test_oracle_dominates_graph_solvers(small_scenarios):
    rng = np.random.default_rng(0)
    for s in small_scenarios:
        best = exact_oracle(s).total_profit
        assert best >= max_resolution(s).total_profit - 1e-9
        env = SchedulingEnv(s)
        for _ in range(20):
            final = env.rollout(lambda e, st_: st_.remaining[int(rng.integers(len(st_.remaining)))])
            assert best >= sum(c.profit for c in env.captures(final)) - 1e-9


def test_validator_clean_on_all_solvers(small_scenarios, n40_scenario):
    for s in small_scenarios + [n40_scenario]:
        for sch in (max_resolution(s), max_targets(s)):
            assert validate(s, sch) == []
    for s in small_scenarios:
        assert validate(s, exact_oracle(s)) == []


def test_validator_reports_duplicates(small_scenarios):
    s = small_scenarios[0]
    c = max_targets(s).actions[0]
    kinds = {v.kind for v in validate(s, [c, c])}
    assert "repeat" in kinds


def test_validator_reports_slew_conflict(small_scenarios):
    s = small_scenarios[0]
    c0 = s.candidates[1]
    tg = s.targets[1]
    too_soon = s.capture_at(tg, c0.time_s + 1.0)
    problems = validate(s, [c0, too_soon])
    assert any(v.kind == "transition" for v in problems)


def test_validator_reports_window_violation(small_scenarios):
    s = small_scenarios[0]
    tg = s.targets[0]
    late = s.capture_at(tg, tg.window.end_s)  # past the latest start
    assert any(v.kind == "window" for v in validate(s, [late]))


def test_validator_reports_bad_attitude(small_scenarios):
    s = small_scenarios[0]
    c = s.candidates[1]
    forged = replace(c, attitude=replace(c.attitude, roll_deg=c.attitude.roll_deg + 5))
    assert any(v.kind == "geometry" for v in validate(s, [forged]))


def test_wasted_energy_inbound():
    s = clear_scenario(3, period=3000.0, seed=8)
    caps = [s.candidates[1], replace(s.candidates[4], profit=0.0), s.candidates[7]]
    sch = build_schedule(s, caps)
    assert sch.energy_wasted == pytest.approx(sch.maneuver_times[1])
    assert sch.total_reward == pytest.approx(caps[0].profit + caps[2].profit - 1.0)


def test_schedule_file_round_trip(tmp_path, small_scenarios):
    s = small_scenarios[3]
    sch = max_targets(s)
    save_schedule(sch, tmp_path / "x.json", s.seed)
    back = load_schedule(s, tmp_path / "x.json")
    assert back.actions == sch.actions
    assert back.total_profit == sch.total_profit


@settings(max_examples=200)
@given(st.floats(0, 90), st.floats(0, 90))
def test_slew_time_subadditive(a, b):
    assert transition_time(a + b) <= transition_time(a) + transition_time(b)


def test_follow_transitive_across_targets(n40_scenario):
    env = SchedulingEnv(n40_scenario)
    f = env.follow.astype(int)
    two_step = (f @ f) > 0
    same = env.target_ids[:, None] == env.target_ids[None, :]
    assert not np.any(two_step & ~env.follow & ~same)
