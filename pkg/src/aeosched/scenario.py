"""Problem instances: targets, windows, atmosphere grids and candidate captures."""

from __future__ import annotations

import base64
import json
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from .atmosphere import (
    CloudGrid,
    QualityThresholds,
    TurbulenceGrid,
    cloud_fraction,
    cn2_at,
    generate_cloud_grid,
    generate_turbulence_grid,
    line_of_sight_point,
    suitability,
)
from .geometry import (
    Attitude,
    GroundPoint,
    SatelliteConfig,
    VisibleTimeWindow,
    attitude_at,
    cross_track_for_duration,
    gsd_at,
    visibility_window,
    window_duration,
)

SCHEMA_VERSION = 1
PROJECTIONS = ("vertical", "line_of_sight")


class ScenarioError(ValueError):
    """Invalid generation config or scenario contents."""


class ScenarioFormatError(ScenarioError):
    """A scenario file could not be parsed or failed validation."""


class Slot(str, Enum):
    START = "start"
    MIDDLE = "middle"
    END = "end"
    FREE = "free"  # arbitrary capture time, used by continuous-time heuristics


@dataclass(frozen=True)
class Target:
    id: int
    position: GroundPoint
    size_km: float
    window: VisibleTimeWindow
    duration_s: float

    def slot_time(self, slot: Slot) -> float:
        if slot is Slot.START:
            return self.window.start_s
        if slot is Slot.MIDDLE:
            return self.window.midpoint_s
        if slot is Slot.END:
            return self.window.end_s - self.duration_s
        raise ValueError(f"slot {slot} has no fixed time")


@dataclass(frozen=True)
class CandidateCapture:
    target_id: int
    slot: Slot
    time_s: float
    attitude: Attitude
    gsd: float
    suitable: int
    profit: float
    cloud_fraction: float = 0.0
    cn2: float = 0.0


@dataclass(frozen=True)
class GenerationConfig:
    n_targets: int = 40
    observation_period_s: float = 1623.79
    p_clouds: float = 0.4
    p_cn2: float = 0.2
    seed: int = 0
    satellite: SatelliteConfig = field(default_factory=SatelliteConfig)
    thresholds: QualityThresholds = field(default_factory=QualityThresholds)
    target_size_km: float = 5.0
    duration_s: float = 0.15
    window_range_s: tuple = (18.0, 185.0)
    cloud_cell_km: float = 2.0
    cloud_altitude_km: float = 10.0
    cn2_cell_km: float = 10.0
    cn2_altitude_km: float = 20.0
    projection: str = "vertical"

    def check(self):
        if self.n_targets < 1:
            raise ScenarioError("n_targets must be at least 1")
        if not self.observation_period_s > 0:
            raise ScenarioError("observation_period_s must be positive")
        for name in ("p_clouds", "p_cn2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ScenarioError(f"{name} must lie in [0, 1], got {v}")
        if self.projection not in PROJECTIONS:
            raise ScenarioError(f"unknown projection {self.projection!r}")
        wmin = max(self.window_range_s[0], self.duration_s)
        if self.observation_period_s < wmin:
            raise ScenarioError(
                f"observation period {self.observation_period_s} s cannot hold a "
                f"{wmin} s visibility window"
            )


@dataclass(frozen=True)
class Scenario:
    satellite: SatelliteConfig
    targets: tuple
    clouds: CloudGrid
    turbulence: TurbulenceGrid
    thresholds: QualityThresholds
    observation_period_s: float
    seed: int
    capture_times_per_target: int = 3
    initial_attitude: Attitude = Attitude(0.0, 0.0, 0.0)
    projection: str = "vertical"

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def capture_at(self, target: Target, t: float, slot: Slot = Slot.FREE) -> CandidateCapture:
        """Evaluate attitude, GSD, weather and profit for capturing ``target`` at ``t``."""
        sat = self.satellite
        att = attitude_at(sat, target.position, t)
        gsd = gsd_at(sat, att)
        if self.projection == "vertical":
            cloud_pt = cn2_pt = target.position
        else:
            sat_x = sat.ground_speed_km_s * t
            cloud_pt = line_of_sight_point(target.position, sat_x, self.clouds.altitude_km, sat.altitude_km)
            cn2_pt = line_of_sight_point(target.position, sat_x, self.turbulence.altitude_km, sat.altitude_km)
        delta = cloud_fraction(self.clouds, cloud_pt, target.size_km)
        cn2 = cn2_at(self.turbulence, cn2_pt)
        f = suitability(cn2, delta, self.thresholds)
        profit = (sat.gsd_nadir_m_per_px / gsd) * f
        return CandidateCapture(target.id, slot, t, att, gsd, f, profit, delta, cn2)

    @cached_property
    def candidates(self) -> tuple:
        return tuple(enumerate_candidates(self))


SLOTS = (Slot.START, Slot.MIDDLE, Slot.END)


def enumerate_candidates(s: Scenario) -> list:
    """Three captures per target: window start, midpoint and latest start, ordered by (target, slot)."""
    return [s.capture_at(tg, tg.slot_time(slot), slot) for tg in s.targets for slot in SLOTS]


def _place_targets(cfg: GenerationConfig, rng: np.random.Generator) -> list:
    sat = cfg.satellite
    v = sat.ground_speed_km_s
    T = cfg.observation_period_s
    wmin = max(cfg.window_range_s[0], cfg.duration_s)
    wcap = min(cfg.window_range_s[1], T * (1 - 1e-9))
    y_hi = cross_track_for_duration(sat, wmin)
    if y_hi is None:
        raise ScenarioError(f"no target can be visible for {wmin} s with this satellite")
    y_lo = 0.0
    if window_duration(sat, 0.0) > wcap:
        y_lo = cross_track_for_duration(sat, wcap)
    # shave the band edges so floating-point round-off cannot leave the range
    span = y_hi - y_lo
    y_lo, y_hi = y_lo + 1e-9 * span, y_hi - 1e-9 * span

    targets = []
    for i in range(cfg.n_targets):
        y = rng.uniform(y_lo, y_hi) * (1.0 if rng.random() < 0.5 else -1.0)
        half = 0.5 * window_duration(sat, y)
        centre = rng.uniform(half, T - half)
        pos = GroundPoint(centre * v, y)
        win = visibility_window(sat, pos, cfg.duration_s)
        # guard against round-off at the period edges
        win = VisibleTimeWindow(max(0.0, win.start_s), min(T, win.end_s))
        targets.append(Target(i, pos, cfg.target_size_km, win, cfg.duration_s))
    return targets


def _grid_box(targets, margin_km: float, cell: float):
    xs = [t.position.along_track_km for t in targets]
    ys = [t.position.cross_track_km for t in targets]
    x0 = math.floor((min(xs) - margin_km) / cell) * cell
    y0 = math.floor((min(ys) - margin_km) / cell) * cell
    nx = int(math.ceil((max(xs) + margin_km - x0) / cell))
    ny = int(math.ceil((max(ys) + margin_km - y0) / cell))
    return GroundPoint(x0, y0), (nx, ny)


def generate(cfg: GenerationConfig) -> Scenario:
    """Draw a random scenario; a pure function of ``cfg`` (including its seed)."""
    cfg.check()
    target_ss, cloud_ss, cn2_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    targets = _place_targets(cfg, np.random.default_rng(target_ss))

    # margin covers the footprint plus the largest line-of-sight offset
    half = 0.5 * cfg.target_size_km
    c_origin, c_shape = _grid_box(targets, half + cfg.cloud_altitude_km + cfg.cloud_cell_km, cfg.cloud_cell_km)
    t_origin, t_shape = _grid_box(targets, half + cfg.cn2_altitude_km + cfg.cn2_cell_km, cfg.cn2_cell_km)
    clouds = generate_cloud_grid(
        c_origin, c_shape, np.random.default_rng(cloud_ss), cfg.p_clouds,
        cfg.cloud_cell_km, cfg.cloud_altitude_km,
    )
    turbulence = generate_turbulence_grid(
        t_origin, t_shape, np.random.default_rng(cn2_ss), cfg.p_cn2,
        cfg.thresholds.cn2_max, cfg.cn2_cell_km, cfg.cn2_altitude_km,
    )
    return Scenario(
        satellite=cfg.satellite,
        targets=tuple(targets),
        clouds=clouds,
        turbulence=turbulence,
        thresholds=cfg.thresholds,
        observation_period_s=cfg.observation_period_s,
        seed=cfg.seed,
        projection=cfg.projection,
    )


def restrict(s: Scenario, n: int) -> Scenario:
    """Sub-instance made of the first ``n`` targets (same grids)."""
    return replace(s, targets=s.targets[:n])


# -- serialization -----------------------------------------------------------


def _encode_grid(g) -> dict:
    cells = np.ascontiguousarray(g.cells)
    if cells.dtype == bool:
        enc, raw = "bits", np.packbits(cells.ravel()).tobytes()
    else:
        enc, raw = "float64le", cells.astype("<f8").tobytes()
    return {
        "cell_size_km": g.cell_size_km,
        "origin": [g.origin.along_track_km, g.origin.cross_track_km],
        "altitude_km": g.altitude_km,
        "shape": list(cells.shape),
        "encoding": enc,
        "data": base64.b64encode(raw).decode("ascii"),
    }


def _decode_grid(d: dict, cls):
    shape = tuple(int(v) for v in d["shape"])
    n = shape[0] * shape[1]
    enc = d["encoding"]
    if enc == "list":
        cells = np.asarray(d["data"])
        cells = cells.astype(bool) if cls is CloudGrid else cells.astype(float)
    else:
        raw = base64.b64decode(d["data"], validate=True)
        if enc == "bits":
            cells = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=n).astype(bool)
        elif enc == "float64le":
            cells = np.frombuffer(raw, dtype="<f8").astype(float)
        else:
            raise ScenarioFormatError(f"unknown grid encoding {enc!r}")
    if cells.size != n:
        raise ScenarioFormatError(f"grid data has {cells.size} cells, expected {n}")
    return cls(
        float(d["cell_size_km"]),
        GroundPoint(*map(float, d["origin"])),
        float(d["altitude_km"]),
        cells.reshape(shape),
    )


def to_dict(s: Scenario) -> dict:
    sat = s.satellite
    return {
        "schema_version": SCHEMA_VERSION,
        "satellite": {
            "altitude_km": sat.altitude_km,
            "inclination_deg": sat.inclination_deg,
            "max_roll_deg": sat.max_roll_deg,
            "max_pitch_deg": sat.max_pitch_deg,
            "max_yaw_deg": sat.max_yaw_deg,
            "gsd_nadir_m_per_px": sat.gsd_nadir_m_per_px,
            "ground_speed_km_s": sat.ground_speed_km_s,
        },
        "thresholds": {"delta_max": s.thresholds.delta_max, "cn2_max": s.thresholds.cn2_max},
        "observation_period_s": s.observation_period_s,
        "seed": s.seed,
        "capture_times_per_target": s.capture_times_per_target,
        "initial_attitude": list(s.initial_attitude.as_tuple()),
        "projection": s.projection,
        "targets": [
            {
                "id": t.id,
                "along_track_km": t.position.along_track_km,
                "cross_track_km": t.position.cross_track_km,
                "size_km": t.size_km,
                "window": [t.window.start_s, t.window.end_s],
                "duration_s": t.duration_s,
            }
            for t in s.targets
        ],
        "cloud_grid": _encode_grid(s.clouds),
        "turbulence_grid": _encode_grid(s.turbulence),
    }


def validate_scenario(s: Scenario) -> None:
    ids = [t.id for t in s.targets]
    if ids != list(range(len(ids))):
        raise ScenarioFormatError("target ids must be 0..N-1 in order")
    if s.capture_times_per_target != 3:
        raise ScenarioFormatError("only three capture times per target are supported")
    if s.projection not in PROJECTIONS:
        raise ScenarioFormatError(f"unknown projection {s.projection!r}")
    for t in s.targets:
        w = t.window
        if w.start_s < 0 or w.end_s > s.observation_period_s:
            raise ScenarioFormatError(f"target {t.id} window {w} outside the observation period")
        if w.end_s - w.start_s < t.duration_s:
            raise ScenarioFormatError(f"target {t.id} window shorter than its capture duration")


def from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioFormatError(f"unsupported schema_version {version!r}")
    try:
        sat = SatelliteConfig(**{k: float(v) for k, v in d["satellite"].items()})
        thr = QualityThresholds(**{k: float(v) for k, v in d["thresholds"].items()})
        targets = tuple(
            Target(
                int(t["id"]),
                GroundPoint(float(t["along_track_km"]), float(t["cross_track_km"])),
                float(t["size_km"]),
                VisibleTimeWindow(float(t["window"][0]), float(t["window"][1])),
                float(t["duration_s"]),
            )
            for t in d["targets"]
        )
        s = Scenario(
            satellite=sat,
            targets=targets,
            clouds=_decode_grid(d["cloud_grid"], CloudGrid),
            turbulence=_decode_grid(d["turbulence_grid"], TurbulenceGrid),
            thresholds=thr,
            observation_period_s=float(d["observation_period_s"]),
            seed=int(d["seed"]),
            capture_times_per_target=int(d.get("capture_times_per_target", 3)),
            initial_attitude=Attitude(*map(float, d.get("initial_attitude", (0.0, 0.0, 0.0)))),
            projection=d.get("projection", "vertical"),
        )
    except ScenarioFormatError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ScenarioFormatError(f"malformed scenario document: {exc!r}") from exc
    validate_scenario(s)
    return s


def dumps(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=1, sort_keys=True) + "\n"


def save(s: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(s))


def load(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{os.fspath(path)}: not valid JSON ({exc.msg})") from exc
    return from_dict(doc)
