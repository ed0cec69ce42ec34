"""Static description of a periodic harmonic chain and its coupling protocols."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# c_max / omega0**2 above this triggers the weak-coupling warning
WEAK_COUPLING_RATIO = 0.1


class ChainError(ValueError):
    """Raised for configurations or schedules that cannot be simulated."""


@dataclass(frozen=True)
class ChainConfig:
    """Ring of ``n_oscillators`` identical oscillators (hbar = 1).

    Attributes:
        n_oscillators: Number of sites N. Must be even and at least 4 so that
            the opposite partner ``n + N/2`` of every site exists.
        omega0: Bare on-site frequency.
        temperature: Initial temperature of the uncoupled chain.
    """

    n_oscillators: int = 8
    omega0: float = 1.0
    temperature: float = 0.0

    def __post_init__(self):
        n = self.n_oscillators
        if int(n) != n or n < 4 or n % 2:
            raise ChainError(f"n_oscillators must be an even integer >= 4, got {n!r}")
        if not self.omega0 > 0:
            raise ChainError(f"omega0 must be positive, got {self.omega0!r}")
        if not self.temperature >= 0:
            raise ChainError(f"temperature must be >= 0, got {self.temperature!r}")
        object.__setattr__(self, "n_oscillators", int(n))
        object.__setattr__(self, "omega0", float(self.omega0))
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def modes(self) -> np.ndarray:
        """Mode labels s = 1..N; the zero mode is s = N."""
        return np.arange(1, self.n_oscillators + 1)

    @property
    def coupling_weights(self) -> np.ndarray:
        """4 sin^2(pi s / N), the factor multiplying c in omega_s^2."""
        w = 4.0 * np.sin(np.pi * self.modes / self.n_oscillators) ** 2
        # sin(pi) is 1.2e-16, not 0; the zero mode must stay exactly at omega0
        w[-1] = 0.0
        # make s and N - s bit-identical
        n = self.n_oscillators
        half = w[: n // 2 - 1]
        w[n // 2 : n - 1] = half[::-1]
        return w

    def with_temperature(self, temperature: float) -> "ChainConfig":
        return ChainConfig(self.n_oscillators, self.omega0, temperature)


def mode_frequencies(config: ChainConfig, c: float) -> np.ndarray:
    """Normal-mode frequencies omega_s = sqrt(omega0^2 + 4 c sin^2(pi s/N)), s = 1..N."""
    if c < 0:
        raise ChainError(f"coupling must be >= 0, got {c!r}")
    omega = np.sqrt(config.omega0**2 + c * config.coupling_weights)
    omega[-1] = config.omega0
    return omega


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant coupling c(t).

    ``segments`` is a tuple of ``(duration, coupling)`` pairs applied in order,
    starting at t = 0. Before t = 0 the chain is uncoupled.
    """

    segments: tuple[tuple[float, float], ...] = ()
    c_max: float = 0.05

    def __post_init__(self):
        segs = tuple((float(d), float(c)) for d, c in self.segments)
        if not (math.isfinite(self.c_max) and self.c_max >= 0):
            raise ChainError(f"c_max must be finite and >= 0, got {self.c_max!r}")
        for i, (d, c) in enumerate(segs):
            if not (math.isfinite(d) and d > 0):
                raise ChainError(f"segment {i}: duration must be > 0, got {d!r}")
            if not (0.0 <= c <= self.c_max):
                raise ChainError(
                    f"segment {i}: coupling {c!r} outside [0, c_max={self.c_max!r}]"
                )
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "c_max", float(self.c_max))

    @classmethod
    def uniform(cls, couplings, horizon: float, c_max: float) -> "ControlSchedule":
        """Equal-duration segments covering ``[0, horizon]``."""
        couplings = np.asarray(couplings, dtype=float)
        dt = horizon / len(couplings)
        return cls(tuple((dt, float(c)) for c in couplings), c_max)

    @property
    def durations(self) -> np.ndarray:
        return np.array([d for d, _ in self.segments], dtype=float)

    @property
    def couplings(self) -> np.ndarray:
        return np.array([c for _, c in self.segments], dtype=float)

    @property
    def total_duration(self) -> float:
        return float(sum(d for d, _ in self.segments))

    @property
    def boundaries(self) -> np.ndarray:
        """Segment start times followed by the end time."""
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    def coupling_at(self, t: float) -> float:
        """Coupling in force at time t (right-continuous; 0 before start, last value after end)."""
        if not self.segments or t < 0:
            return 0.0
        idx = np.searchsorted(self.boundaries, t, side="right") - 1
        idx = min(idx, len(self.segments) - 1)
        return self.segments[idx][1]

    def extend(self, segments) -> "ControlSchedule":
        return ControlSchedule(self.segments + tuple(segments), self.c_max)


def validate(config: ChainConfig, schedule: ControlSchedule | None = None) -> list[str]:
    """Return human-readable warnings for a configuration.

    Hard errors (odd N, non-positive omega0, bad durations) are raised when the
    objects are constructed; they are re-checked here so that duck-typed inputs
    fail loudly too.
    """
    if config.n_oscillators % 2 or config.n_oscillators < 4:
        raise ChainError("n_oscillators must be even and >= 4")
    if config.omega0 <= 0:
        raise ChainError("omega0 must be positive")
    warnings = []
    if schedule is not None:
        if any(d <= 0 for d, _ in schedule.segments):
            raise ChainError("segment durations must be positive")
        ratio = schedule.c_max / config.omega0**2
        if ratio > WEAK_COUPLING_RATIO:
            warnings.append(
                f"weak-coupling regime violated: c_max/omega0^2 = {ratio:.3g} "
                f"> {WEAK_COUPLING_RATIO}; optimal-angle analysis may not apply"
            )
    return warnings
