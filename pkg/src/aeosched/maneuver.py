"""Attitude transition angle, piecewise-linear transition time and energy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Attitude

MIN_TRANSITION_S = 11.66


@dataclass(frozen=True)
class TransitionProfile:
    """Piecewise-linear slew time: ``base + alpha / rate`` on each branch.

    Branch k covers ``breakpoints[k-1] < alpha <= breakpoints[k]``; the first
    branch includes alpha = 0.
    """

    breakpoints_deg: tuple = (10.0, 30.0, 60.0, 90.0)
    base_s: tuple = (11.66, 5.0, 10.0, 16.0, 22.0)
    rate_deg_per_s: tuple = (float("inf"), 1.5, 2.0, 2.5, 3.0)

    def __call__(self, alpha):
        return transition_time(alpha, self)


DEFAULT_PROFILE = TransitionProfile()


@dataclass(frozen=True)
class EnergyModel:
    energy_per_second: float = 1.0

    def __post_init__(self):
        if not self.energy_per_second > 0:
            raise ValueError("energy_per_second must be positive")


def displacement(a: Attitude, b: Attitude) -> float:
    """L1 distance between two attitudes, in degrees."""
    return (
        abs(a.roll_deg - b.roll_deg)
        + abs(a.pitch_deg - b.pitch_deg)
        + abs(a.yaw_deg - b.yaw_deg)
    )


def _branch_values(alpha: np.ndarray, profile: TransitionProfile) -> np.ndarray:
    # searchsorted(side="left") puts alpha == breakpoint in the lower branch
    k = np.searchsorted(np.asarray(profile.breakpoints_deg), alpha, side="left")
    base = np.asarray(profile.base_s)[k]
    rate = np.asarray(profile.rate_deg_per_s)[k]
    return base + alpha / rate


def transition_time(alpha, profile: TransitionProfile = DEFAULT_PROFILE):
    """Slew-plus-settle time (s) for a total angular displacement ``alpha`` (deg).

    Accepts scalars or arrays.
    """
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0) or np.any(np.isnan(a)):
        raise ValueError("attitude displacement must be non-negative")
    out = _branch_values(a, profile)
    return float(out) if out.ndim == 0 else out


def can_follow(prev, nxt, d_prev: float, profile: TransitionProfile = DEFAULT_PROFILE) -> bool:
    """True if capture ``nxt`` can start after ``prev`` finishes and the satellite re-points.

    ``prev`` and ``nxt`` need ``time_s`` and ``attitude`` attributes.
    """
    alpha = displacement(prev.attitude, nxt.attitude)
    return prev.time_s + d_prev + transition_time(alpha, profile) <= nxt.time_s


def maneuver_energy(alpha, em: EnergyModel = EnergyModel(), profile: TransitionProfile = DEFAULT_PROFILE):
    return em.energy_per_second * transition_time(alpha, profile)
