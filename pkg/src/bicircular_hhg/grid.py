"""Uniform time grids and pulse envelopes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MIN_GRID_POINTS = 2**12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0, t0 + dt, ..., t1`` with ``n_points`` samples."""

    t0: float
    t1: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValidationError("a time grid needs at least two points")
        if not self.t1 > self.t0:
            raise ValidationError(f"empty time span [{self.t0}, {self.t1}]")

    @classmethod
    def for_cycles(cls, omega: float, n_cycles: int, points_per_cycle: int) -> "TimeGrid":
        period = 2 * np.pi / omega
        return cls(0.0, n_cycles * period, n_cycles * points_per_cycle + 1)

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_points)

    def index_of(self, t: float, tol: float = 1e-6) -> int:
        """Index of the grid point at time ``t``; raises if ``t`` is off-grid."""
        x = (t - self.t0) / self.dt
        i = int(round(x))
        if abs(x - i) > tol or not 0 <= i < self.n_points:
            raise ValidationError(f"t={t} does not fall on the grid")
        return i

    def contains(self, t) -> bool:
        t = np.asarray(t)
        slack = 1e-9 * (self.t1 - self.t0)
        return bool(np.all((t >= self.t0 - slack) & (t <= self.t1 + slack)))


@dataclass(frozen=True)
class EnvelopeSpec:
    """Trapezoidal envelope measured in fundamental cycles.

    ``kind="flat"`` gives a constant envelope of one over the whole grid,
    useful for checks that must avoid edge effects.
    """

    kind: str = "trapezoid"
    ramp_cycles: int = 1
    flat_cycles: int = 5

    def __post_init__(self):
        if self.kind not in ("trapezoid", "flat"):
            raise ValidationError(f"unknown envelope kind {self.kind!r}")
        if self.ramp_cycles < 0 or self.flat_cycles < 1:
            raise ValidationError("ramp_cycles must be >= 0 and flat_cycles >= 1")

    @property
    def total_cycles(self) -> int:
        return 2 * self.ramp_cycles + self.flat_cycles

    def flat_top(self, omega: float) -> tuple[float, float]:
        period = 2 * np.pi / omega
        return self.ramp_cycles * period, (self.ramp_cycles + self.flat_cycles) * period

    def __call__(self, t, omega: float):
        t = np.asarray(t, dtype=float)
        if self.kind == "flat":
            return np.ones_like(t)
        c = t * omega / (2 * np.pi)
        if self.ramp_cycles == 0:
            return np.where((c >= 0) & (c <= self.total_cycles), 1.0, 0.0)
        up = c / self.ramp_cycles
        down = (self.total_cycles - c) / self.ramp_cycles
        return np.clip(np.minimum(up, down), 0.0, 1.0)
