"""Pointing geometry: how attitude, off-nadir angle and resolution evolve during a pass.

Run: python demos/01_pointing_geometry.py
"""

import numpy as np

from aeosched.geometry import GroundPoint, SatelliteConfig, attitude_at, gsd_at, off_nadir_angle, visibility_window
from aeosched.maneuver import transition_time

sat = SatelliteConfig()
print(f"ground speed at {sat.altitude_km:.0f} km: {sat.ground_speed_km_s:.3f} km/s")

# A target 200 km off the ground track, 1000 km ahead of the start point.
target = GroundPoint(1000.0, 200.0)
win = visibility_window(sat, target)
print(f"visible from {win.start_s:.1f} s to {win.end_s:.1f} s ({win.duration_s:.1f} s)")

print("\n   t [s]   roll   pitch   off-nadir   GSD [m/px]")
for t in np.linspace(win.start_s, win.end_s, 7):
    att = attitude_at(sat, target, t)
    print(f"{t:8.1f} {att.roll_deg:6.1f} {att.pitch_deg:7.1f} {off_nadir_angle(att):10.1f} {gsd_at(sat, att):11.3f}")

# The best image is taken mid-window, where pitch is zero.
print("\nslew times for a few attitude changes:")
for alpha in (5, 10, 20, 30, 45, 60, 90, 120):
    print(f"  {alpha:4d} deg -> {transition_time(alpha):6.2f} s")

# Window length shrinks as targets move away from the ground track.
print("\ncross-track offset vs window length:")
for y in (0, 100, 200, 300, 400, 500, 580):
    w = visibility_window(sat, GroundPoint(0.0, y))
    print(f"  {y:4d} km -> {0.0 if w is None else w.duration_s:6.1f} s")
