"""Time-dependent box length L(t) for the expansion stroke.

The built-in schedule is the quintic smoother step, whose first and second
derivatives vanish at both endpoints. Custom schedules plug in as a pair of
shape functions on the unit interval; the derivative is always supplied
analytically, never by differentiating samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Schedule:
    """Monotone shape f: [0, 1] -> [0, 1] with analytic derivative df."""

    f: Callable
    df: Callable
    name: str = "custom"


def _smoother_f(s):
    return s ** 3 * (10.0 + 3.0 * s * (2.0 * s - 5.0))


def _smoother_df(s):
    return 30.0 * s * s * (1.0 - s) ** 2


SMOOTHER_STEP = Schedule(f=_smoother_f, df=_smoother_df, name="smoother_step")


@dataclass(frozen=True)
class RampSpec:
    """Stroke from L_i to L_f over duration tau."""

    L_i: float
    L_f: float
    tau: float
    schedule: Schedule = SMOOTHER_STEP

    def __post_init__(self):
        if self.L_i <= 0.0 or self.L_f <= 0.0:
            raise ValueError("lengths must be positive")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive (the instantaneous quench "
                             "is handled by the sudden-quench path)")

    @property
    def ratio(self) -> float:
        return self.L_f / self.L_i


@dataclass(frozen=True)
class RampSample:
    """Consistent bundle (t, L, Ldot) with L = gamma L_i, Ldot = gamma_dot L_i."""

    t: float
    L: float
    Ldot: float
    gamma: float
    gamma_dot: float


def _unit_time(spec: RampSpec, t) -> np.ndarray:
    s = np.asarray(t, dtype=float) / spec.tau
    # allow endpoint roundoff from adaptive steppers
    eps = 1e-12
    if np.any(s < -eps) or np.any(s > 1.0 + eps):
        raise ValueError(f"t must lie in [0, tau]; got t/tau = {s}")
    return np.clip(s, 0.0, 1.0)


def gamma(spec: RampSpec, t):
    """Scaling factor L(t)/L_i; 1 at t = 0 and L_f/L_i at t = tau."""
    s = _unit_time(spec, t)
    g = 1.0 + (spec.ratio - 1.0) * spec.schedule.f(s)
    return g if g.shape else float(g)


def gamma_dot(spec: RampSpec, t):
    """Analytic time derivative of gamma; vanishes at both endpoints."""
    s = _unit_time(spec, t)
    gd = (spec.ratio - 1.0) * spec.schedule.df(s) / spec.tau
    return gd if gd.shape else float(gd)


def sample(spec: RampSpec, t: float) -> RampSample:
    """Bundle L, Ldot and the scaling pair at one instant."""
    g = gamma(spec, t)
    gd = gamma_dot(spec, t)
    return RampSample(t=float(t), L=g * spec.L_i, Ldot=gd * spec.L_i,
                      gamma=g, gamma_dot=gd)
