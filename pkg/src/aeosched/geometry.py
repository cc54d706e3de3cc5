"""Ground-track kinematics and pointing geometry.

The satellite flies a straight ground track at constant ground speed over a
flat observation plane. Positions are expressed as (along-track, cross-track)
offsets in km, with the along-track origin at the sub-satellite point at the
start of the observation period. The attitude needed to point at a target is
then a closed-form function of the target offset and time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

EARTH_RADIUS_KM = 6371.0
EARTH_MU_KM3_S2 = 398600.4418


def ground_speed(altitude_km: float) -> float:
    """Sub-satellite point speed (km/s) of a circular orbit, ignoring Earth rotation."""
    a = EARTH_RADIUS_KM + altitude_km
    return EARTH_RADIUS_KM * math.sqrt(EARTH_MU_KM3_S2 / a**3)


@dataclass(frozen=True)
class SatelliteConfig:
    """Orbit and agility constants.

    ``inclination_deg`` is carried for bookkeeping only; the flat ground-track
    model does not depend on it.
    """

    altitude_km: float = 600.0
    inclination_deg: float = 98.6
    max_roll_deg: float = 45.0
    max_pitch_deg: float = 45.0
    max_yaw_deg: float = 90.0
    gsd_nadir_m_per_px: float = 0.5
    ground_speed_km_s: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.ground_speed_km_s is None:
            object.__setattr__(self, "ground_speed_km_s", ground_speed(self.altitude_km))
        if self.altitude_km <= 0:
            raise ValueError("altitude_km must be positive")
        for name in ("max_roll_deg", "max_pitch_deg", "max_yaw_deg"):
            v = getattr(self, name)
            if not 0.0 < v <= 180.0:
                raise ValueError(f"{name} must lie in (0, 180], got {v}")
        if self.ground_speed_km_s <= 0:
            raise ValueError("ground_speed_km_s must be positive")
        if self.gsd_nadir_m_per_px <= 0:
            raise ValueError("gsd_nadir_m_per_px must be positive")

    @property
    def cone_deg(self) -> float:
        """Boresight cone half-angle used for visibility."""
        return min(self.max_roll_deg, self.max_pitch_deg)


@dataclass(frozen=True)
class Attitude:
    roll_deg: float = 0.0
    pitch_deg: float = 0.0
    yaw_deg: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.roll_deg, self.pitch_deg, self.yaw_deg)


@dataclass(frozen=True)
class GroundPoint:
    along_track_km: float
    cross_track_km: float

    def __post_init__(self):
        if not (math.isfinite(self.along_track_km) and math.isfinite(self.cross_track_km)):
            raise ValueError("GroundPoint coordinates must be finite")


@dataclass(frozen=True)
class VisibleTimeWindow:
    start_s: float
    end_s: float

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def midpoint_s(self) -> float:
        return 0.5 * (self.start_s + self.end_s)


def attitude_at(sat: SatelliteConfig, target: GroundPoint, t: float) -> Attitude:
    """Roll/pitch needed to look at ``target`` at time ``t``; yaw is held at zero."""
    h = sat.altitude_km
    roll = math.degrees(math.atan(target.cross_track_km / h))
    pitch = math.degrees(math.atan((target.along_track_km - sat.ground_speed_km_s * t) / h))
    return Attitude(roll, pitch, 0.0)


def off_nadir_angle(att: Attitude) -> float:
    """Total boresight deviation from nadir, in degrees."""
    c = math.cos(math.radians(att.roll_deg)) * math.cos(math.radians(att.pitch_deg))
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def gsd_from_off_nadir(gsd_nadir: float, eta_deg):
    """GSD for one or many off-nadir angles (degrees); grows as 1/cos^2."""
    eta = np.asarray(eta_deg, dtype=float)
    if np.any(eta >= 90.0) or np.any(eta < 0.0):
        raise ValueError("off-nadir angle must lie in [0, 90) degrees")
    out = gsd_nadir / np.cos(np.radians(eta)) ** 2
    return float(out) if out.ndim == 0 else out


def gsd_at(sat: SatelliteConfig, att: Attitude) -> float:
    return gsd_from_off_nadir(sat.gsd_nadir_m_per_px, off_nadir_angle(att))


def _pitch_limit_deg(sat: SatelliteConfig, roll_deg: float) -> Optional[float]:
    # Largest |pitch| allowed by both the per-axis and the cone bound at this roll.
    if abs(roll_deg) > sat.max_roll_deg:
        return None
    c = math.cos(math.radians(sat.cone_deg)) / math.cos(math.radians(roll_deg))
    if c > 1.0:
        return None
    return min(sat.max_pitch_deg, math.degrees(math.acos(c)))


def visibility_window(
    sat: SatelliteConfig, target: GroundPoint, duration_s: float = 0.0
) -> Optional[VisibleTimeWindow]:
    """Interval during which ``target`` can be pointed at within all attitude bounds.

    Returns None when the target is never visible or the window is shorter
    than ``duration_s``.
    """
    roll = math.degrees(math.atan(target.cross_track_km / sat.altitude_km))
    plim = _pitch_limit_deg(sat, roll)
    if plim is None:
        return None
    half = sat.altitude_km * math.tan(math.radians(plim)) / sat.ground_speed_km_s
    centre = target.along_track_km / sat.ground_speed_km_s
    win = VisibleTimeWindow(centre - half, centre + half)
    if win.duration_s < duration_s or win.duration_s <= 0.0:
        return None
    return win


def window_duration(sat: SatelliteConfig, cross_track_km: float) -> float:
    """Visibility window length for a target at the given cross-track offset (0 if never visible)."""
    win = visibility_window(sat, GroundPoint(0.0, cross_track_km))
    return 0.0 if win is None else win.duration_s


def cross_track_for_duration(sat: SatelliteConfig, duration_s: float) -> Optional[float]:
    """Largest |cross-track| offset whose window still lasts ``duration_s``.

    None if even a target on the ground track has a shorter window.
    """
    half_pitch = math.degrees(
        math.atan(0.5 * duration_s * sat.ground_speed_km_s / sat.altitude_km)
    )
    if half_pitch > sat.max_pitch_deg:
        return None
    c = math.cos(math.radians(sat.cone_deg)) / math.cos(math.radians(half_pitch))
    if c > 1.0:
        return None
    roll = min(math.degrees(math.acos(c)), sat.max_roll_deg)
    return sat.altitude_km * math.tan(math.radians(roll))
